//! Campaign orchestration: configuration, deterministic parallel runs, and
//! the files each command writes.

mod commands;
mod config;
mod output;

pub use commands::*;
pub use config::{parse_key_values, CampaignConfig, GridSpec};
pub use output::{fmt_num, write_atomic, write_csv, RunManifest, SOFTWARE_VERSION};
