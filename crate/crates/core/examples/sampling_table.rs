//! Builds a small sampling-distribution table, compares the Gaussian fit to
//! the pooled samples, and round-trips the table through its text format.
//!
//! cargo run --release --example sampling_table

use glsbi::distfit::{build_table, read_table, tv_distance, wasserstein_distance, write_table, TableSpec};
use glsbi::stats::StatisticKind;

fn main() -> glsbi::Result<()> {
    let spec = TableSpec {
        kind: StatisticKind::SpikeFreq,
        grid: (0..6).map(|i| 0.01 + 0.008 * i as f64).collect(),
        replicates: 4,
        n: 100,
        w: 0.01,
        v0: 0.01,
        horizon: 20_000,
        bins: None,
    };
    let built = build_table(&spec, 2024)?;
    let table = built.table()?;
    println!("p        m    mean      sd        tv      w1");
    for (k, entry) in table.entries().iter().enumerate() {
        let samples: Vec<f64> = built
            .tasks
            .iter()
            .filter(|t| t.grid_index == k)
            .flat_map(|t| t.values.iter().filter_map(|v| v.ok()))
            .collect();
        let tv = tv_distance(&samples, &entry.gaussian, entry.histogram.densities.len())?;
        let w1 = wasserstein_distance(&samples, &entry.gaussian)?;
        println!(
            "{:.3}  {:>4}  {:.6}  {:.6}  {:.4}  {:.2e}",
            entry.p, entry.m, entry.gaussian.mu, entry.gaussian.sigma, tv, w1
        );
    }

    let mut text = Vec::new();
    write_table(&table, &mut text)?;
    let back = read_table(text.as_slice())?;
    assert_eq!(back, table);
    println!("table serialised to {} bytes and read back unchanged", text.len());
    Ok(())
}
