//! Checks the independence assumptions behind the likelihood: correlation of
//! statistics across random and connected neuron pairs, and squared
//! Mahalanobis distances of sampled vectors against chi-squared quantiles.
//!
//! cargo run --release --example independence_diagnostics

use glsbi::diagnostics::{chi2_quantile, correlation, mahalanobis_sq, qq_data, qq_slope, PairSampleMode, PairSampler};
use glsbi::dynamics::{sample_neurons, simulate_network};
use glsbi::graph::GraphParams;
use glsbi::rng::Xoshiro256PlusPlus;
use glsbi::stats::StatisticKind;

fn main() -> glsbi::Result<()> {
    let (n, horizon, s) = (200, 20_000, 5);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(8);
    let (g, summaries) = simulate_network(&GraphParams::new(n, 0.03, 0.01)?, false, 0.01, horizon, &mut rng)?;

    let kind = StatisticKind::SpikeFreq;
    let sampler = PairSampler::new(&g, &summaries, kind, horizon)?;
    for mode in [PairSampleMode::Random, PairSampleMode::PostSynaptic] {
        let pairs: Vec<(f64, f64)> = (0..2000).map(|_| sampler.sample(mode, &mut rng)).collect::<Result<_, _>>()?;
        println!("{:<13} pairs: correlation {:+.4}", mode.label(), correlation(&pairs)?);
    }

    let freq: Vec<f64> = summaries.iter().map(|x| x.spike_frequency(horizon)).collect();
    let vectors: Vec<Vec<f64>> = (0..1000)
        .map(|_| sample_neurons(n, s, &mut rng).map(|idx| idx.iter().map(|&i| freq[i]).collect()))
        .collect::<Result<_, _>>()?;
    let d2 = mahalanobis_sq(&vectors)?;
    let qq = qq_data(&d2, |q| chi2_quantile(q, s as f64))?;
    println!("Mahalanobis Q-Q slope against chi2({s}): {:.3}", qq_slope(&qq)?);
    for &(emp, theo) in qq.points.iter().step_by(200) {
        println!("  empirical {emp:7.3}  chi2 quantile {theo:7.3}");
    }
    Ok(())
}
