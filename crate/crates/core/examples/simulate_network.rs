//! Discrete-time spiking dynamics on a random graph: a short raster and
//! spike-train records for a few neurons.
//!
//! cargo run --example simulate_network

use glsbi::dynamics::{simulate, RecordSet, SimConfig, Simulator};
use glsbi::graph::{generate_er, GraphParams};
use glsbi::rng::Xoshiro256PlusPlus;

fn main() -> glsbi::Result<()> {
    let params = GraphParams::new(30, 0.1, 0.05)?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
    let g = generate_er(&params, &mut rng)?;

    // step by step: raster of the first 40 steps
    let mut sim = Simulator::new(&g, 0.05);
    println!("raster, neurons 0..30 by column, 40 steps:");
    for t in 1..=40 {
        let mut row = vec!['.'; g.n()];
        for &i in sim.step(&mut rng) {
            row[i as usize] = '|';
        }
        println!("{t:>3} {}", row.into_iter().collect::<String>());
    }
    let v = &sim.state().v;
    println!("max potential after 40 steps: {:.3}", v.iter().cloned().fold(0.0, f64::max));

    // batch simulation with recorded trains
    let cfg = SimConfig::new(20_000, 0.05, RecordSet::Neurons(vec![0, 1, 2]))?;
    let out = simulate(&g, &cfg, &mut rng)?;
    for train in &out.record.trains {
        let head: Vec<String> = train.times.iter().take(6).map(u32::to_string).collect();
        println!("neuron {}: {} spikes, first at {}", train.neuron, train.times.len(), head.join(" "));
    }
    let total: u64 = out.summaries.iter().map(|s| s.count).sum();
    println!("{total} spikes in the whole network over {} steps", cfg.horizon);
    Ok(())
}
