//! The file-based workflow of the command-line tool, driven from code: build
//! a table, evaluate the estimator, write the baseline, all under one output
//! directory.
//!
//! cargo run --release --example campaign -- [out_dir]

use std::path::PathBuf;

use glsbi::harness::{cmd_baseline, cmd_build_table, cmd_evaluate, CampaignConfig, GridSpec};

fn main() -> glsbi::Result<()> {
    let mut cfg = CampaignConfig::default();
    cfg.out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("glsbi_campaign"), PathBuf::from);
    cfg.n = 80;
    cfg.horizon = 10_000;
    cfg.replicates = 4;
    cfg.grid = GridSpec { start: 0.02, step: 0.01, count: 8 };
    cfg.eval_grid = GridSpec { start: 0.04, step: 0.02, count: 2 };
    cfg.n_estimates = 40;

    let table = cmd_build_table(&cfg)?;
    cfg.table = Some(table.clone());
    let ev = cmd_evaluate(&cfg)?;
    cmd_baseline(&cfg)?;

    println!("table written to {}", table.display());
    for s in &ev.summaries {
        println!(
            "p={:.2}: mean p_hat {:.4}, relative MAE {:.3}, non-coverage {:.3}",
            s.p_true, s.mean_p_hat, s.rel_mae, s.non_coverage
        );
    }
    println!("outputs in {}", cfg.out.display());
    Ok(())
}
