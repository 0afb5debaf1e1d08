pub mod diagnostics;
pub mod distfit;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod harness;
pub mod inference;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
