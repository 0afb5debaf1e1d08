//! Inference on networks whose reciprocal connections were thinned: the
//! estimate tracks the effective connection probability p - p^2/2.
//!
//! cargo run --release --example reciprocal_removal

use glsbi::harness::{evaluate, table_spec, target_p, CampaignConfig, GridSpec};

fn main() -> glsbi::Result<()> {
    let mut cfg = CampaignConfig::default();
    cfg.n = 100;
    cfg.horizon = 20_000;
    cfg.replicates = 6;
    cfg.grid = GridSpec { start: 0.05, step: 0.01, count: 11 };
    cfg.eval_grid = GridSpec { start: 0.08, step: 0.04, count: 2 };
    cfg.n_estimates = 50;
    let table = glsbi::distfit::build_table(&table_spec(&cfg), cfg.seed)?.table()?;

    for removed in [false, true] {
        cfg.remove_reciprocal = removed;
        let ev = evaluate(&cfg, &table)?;
        for s in &ev.summaries {
            println!(
                "removed={removed:<5} p={:.2}  target {:.4}  mean p_hat {:.4}",
                s.p_true,
                target_p(s.p_true, removed),
                s.mean_p_hat
            );
        }
    }
    Ok(())
}
