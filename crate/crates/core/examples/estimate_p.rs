//! Estimates the connection probability of an unseen network from the
//! statistics of a few sampled neurons, with a likelihood-ratio interval.
//!
//! cargo run --release --example estimate_p

use glsbi::distfit::{build_table, Estimator, TableSpec};
use glsbi::dynamics::{sample_neurons, simulate_network};
use glsbi::graph::GraphParams;
use glsbi::inference::{deviance, estimate_p_with, EstimateOptions, Interpolation, Observation};
use glsbi::rng::Xoshiro256PlusPlus;
use glsbi::stats::StatisticKind;

fn main() -> glsbi::Result<()> {
    let (n, horizon, s) = (100, 20_000, 10);
    let spec = TableSpec {
        kind: StatisticKind::SpikeFreq,
        grid: (0..13).map(|i| 0.01 + 0.004 * i as f64).collect(),
        replicates: 6,
        n,
        w: 0.01,
        v0: 0.01,
        horizon,
        bins: None,
    };
    let table = build_table(&spec, 1)?.table()?;

    let p_true = 0.03;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(77);
    let (_, summaries) = simulate_network(&GraphParams::new(n, p_true, 0.01)?, false, 0.01, horizon, &mut rng)?;

    for interpolation in [Interpolation::Likelihood, Interpolation::LogLikelihood] {
        println!("{interpolation:?} interpolation");
        for _ in 0..3 {
            let picked = sample_neurons(n, s, &mut rng)?;
            let values: Vec<f64> = picked.iter().map(|&i| summaries[i].spike_frequency(horizon)).collect();
            let obs = Observation::new(StatisticKind::SpikeFreq, values)?;
            let opts = EstimateOptions { interpolation, level: Some(0.95) };
            let est = estimate_p_with(&table, &obs, Estimator::Gaussian, opts)?;
            let ci = est.ci.expect("interval requested");
            println!(
                "  grid argmax {:.3}, p_hat {:.4}, 95% CI [{:.4}, {:.4}], flags {}, deviance at truth {:.3}",
                est.p_tilde,
                est.p_hat,
                ci.lo,
                ci.hi,
                est.flags,
                deviance(&est, p_true)?
            );
        }
    }
    Ok(())
}
