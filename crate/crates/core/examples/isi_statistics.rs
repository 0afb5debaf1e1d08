//! Per-neuron statistics from spike trains: spike frequency and the
//! moment-matched gamma shape of the inter-spike intervals.
//!
//! cargo run --example isi_statistics

use glsbi::dynamics::{simulate, RecordSet, SimConfig};
use glsbi::graph::{generate_er, GraphParams};
use glsbi::rng::Xoshiro256PlusPlus;
use glsbi::stats::{compute_statistic, extract_isis, gamma_moments, StatisticKind};

fn main() -> glsbi::Result<()> {
    let horizon = 50_000;
    let params = GraphParams::new(200, 0.03, 0.01)?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
    let g = generate_er(&params, &mut rng)?;
    let cfg = SimConfig::new(horizon, 0.01, RecordSet::Neurons((0..8).collect()))?;
    let out = simulate(&g, &cfg, &mut rng)?;

    println!("neuron in-degree spikes  freq      alpha    beta");
    for train in &out.record.trains {
        let freq = compute_statistic(StatisticKind::SpikeFreq, &train.times, horizon)?;
        let isis = extract_isis(&train.times);
        let gamma = match gamma_moments(&isis) {
            Ok(m) => format!("{:8.4} {:8.5}", m.alpha, m.beta),
            Err(e) => format!("excluded ({e})"),
        };
        println!(
            "{:>6} {:>9} {:>6}  {:.5}  {gamma}",
            train.neuron,
            g.presyn(train.neuron).len(),
            train.times.len(),
            freq
        );
    }

    // the streaming summaries give the same numbers without storing trains
    let s = &out.summaries[0];
    println!(
        "neuron 0 from summary: freq {:.5}, alpha {:?}",
        s.spike_frequency(horizon),
        s.statistic(StatisticKind::GammaAlpha, horizon).ok()
    );
    Ok(())
}
