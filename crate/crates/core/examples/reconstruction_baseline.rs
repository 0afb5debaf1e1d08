//! Error of the best possible estimator that sees every connection among the
//! sampled neurons, as a function of the sample size and p.
//!
//! cargo run --example reconstruction_baseline

use glsbi::inference::{optimal_reconstruction_mae, optimal_reconstruction_se};

fn main() -> glsbi::Result<()> {
    println!("   s      p     MAE       SE      MAE/p");
    for s in [2, 5, 10, 20] {
        for p in [0.01, 0.03, 0.05] {
            let mae = optimal_reconstruction_mae(s, p)?;
            let se = optimal_reconstruction_se(s, p)?;
            println!("{s:>4}  {p:.2}  {mae:.5}  {se:.5}  {:.3}", mae / p);
        }
    }
    Ok(())
}
