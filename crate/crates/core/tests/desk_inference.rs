//! Monte-Carlo checks of the estimator against a desk-scale table.

use std::sync::OnceLock;

use glsbi::distfit::{build_table, Estimator, SamplingDistributionTable};
use glsbi::dynamics::{sample_neurons, simulate_network};
use glsbi::graph::GraphParams;
use glsbi::harness::{table_spec, CampaignConfig};
use glsbi::inference::{estimate_p, grid_argmax, Observation};
use glsbi::rng::{StreamFamily, Xoshiro256PlusPlus};
use glsbi::stats::StatisticKind;

fn desk_table() -> &'static SamplingDistributionTable {
    static TABLE: OnceLock<SamplingDistributionTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let cfg = CampaignConfig::default();
        build_table(&table_spec(&cfg), 77).unwrap().table().unwrap()
    })
}

/// Simulates a fresh desk-scale network at `p` and returns the spike
/// frequency of every neuron.
fn network_frequencies(p: f64, rng: &mut Xoshiro256PlusPlus) -> Vec<f64> {
    let cfg = CampaignConfig::default();
    let params = GraphParams::new(cfg.n, p, cfg.w).unwrap();
    let (_, summaries) = simulate_network(&params, false, cfg.v0, cfg.horizon, rng).unwrap();
    summaries.iter().map(|s| s.spike_frequency(cfg.horizon)).collect()
}

fn observe(freq: &[f64], s: usize, rng: &mut Xoshiro256PlusPlus) -> Observation {
    let idx = sample_neurons(freq.len(), s, rng).unwrap();
    Observation::new(StatisticKind::SpikeFreq, idx.iter().map(|&i| freq[i]).collect()).unwrap()
}

#[test]
fn argmax_recovers_a_grid_truth() {
    let table = desk_table();
    let truth_index = 10;
    let truth = table.grid()[truth_index];
    let streams = StreamFamily::new(101, 0);
    let trials = 100;
    let mut hits = 0;
    for t in 0..trials {
        let mut rng = streams.stream(t);
        let freq = network_frequencies(truth, &mut rng);
        let obs = observe(&freq, 10, &mut rng);
        let k = grid_argmax(table, &obs, Estimator::Gaussian).unwrap();
        hits += usize::from(k.abs_diff(truth_index) <= 2);
    }
    assert!(hits >= 90, "{hits}/{trials} within two grid steps of p={truth}");
}

#[test]
fn refinement_is_unbiased_between_grid_points() {
    let table = desk_table();
    let grid = table.grid();
    let step = grid[1] - grid[0];
    let truth = 0.5 * (grid[10] + grid[11]);
    let streams = StreamFamily::new(202, 0);
    let mut errors = Vec::new();
    for graph in 0..20 {
        let mut rng = streams.stream(graph);
        let freq = network_frequencies(truth, &mut rng);
        for _ in 0..20 {
            let est = estimate_p(table, &observe(&freq, 10, &mut rng), Estimator::Gaussian).unwrap();
            errors.push(est.p_hat - truth);
        }
    }
    let bias = errors.iter().sum::<f64>() / errors.len() as f64;
    assert!(bias.abs() < step / 2.0, "mean signed error {bias} vs half step {}", step / 2.0);
}
