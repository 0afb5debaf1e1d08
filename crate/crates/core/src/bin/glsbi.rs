use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use glsbi::harness::{self, CampaignConfig};
use glsbi::{Error, Result};

#[derive(Parser)]
#[command(name = "glsbi", version, about = "Connection-probability inference from spiking-network statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the grid and write the sampling-distribution table.
    BuildTable(Common),
    /// Estimate p from one observation file (one value per line).
    Estimate {
        #[command(flatten)]
        common: Common,
        observation: PathBuf,
    },
    /// Score the estimator over the evaluation grid.
    Evaluate(Common),
    /// Correlation, Mahalanobis, Gaussian-distance and deviance datasets.
    Diagnostics(Common),
    /// Tabulate the optimal reconstruction error.
    Baseline(Common),
}

#[derive(Args)]
struct Common {
    /// key=value configuration file; a run manifest also works.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0: one per core).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// spikefreq or alpha.
    #[arg(long)]
    kind: Option<String>,
    /// gaussian or histogram.
    #[arg(long)]
    estimator: Option<String>,
    #[arg(long)]
    remove_reciprocal: bool,
    /// Confidence level of likelihood-ratio intervals.
    #[arg(long)]
    level: Option<f64>,
    /// Sampling-distribution table to read.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Override any configuration key, e.g. `--set T=20000`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn resolve(&self) -> Result<CampaignConfig> {
        let mut cfg = match &self.config {
            Some(path) => CampaignConfig::from_file(path)?,
            None => CampaignConfig::default(),
        };
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        let flags = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("workers", self.workers.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(|v| v.display().to_string())),
            ("kind", self.kind.clone()),
            ("estimator", self.estimator.clone()),
            ("level", self.level.map(|v| v.to_string())),
            ("table", self.table.as_ref().map(|v| v.display().to_string())),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        if self.remove_reciprocal {
            cfg.remove_reciprocal = true;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildTable(c) => {
            let path = harness::cmd_build_table(&c.resolve()?)?;
            println!("{}", path.display());
        }
        Command::Estimate { common, observation } => {
            let (_, line) = harness::cmd_estimate(&common.resolve()?, &observation)?;
            println!("{}", harness::ESTIMATE_HEADER);
            println!("{line}");
        }
        Command::Evaluate(c) => {
            let ev = harness::cmd_evaluate(&c.resolve()?)?;
            println!("{}", harness::SUMMARY_HEADER);
            for s in &ev.summaries {
                println!(
                    "{},{},{},{},{},{},{},{},{}",
                    s.p_true, s.p_target, s.variant, s.s, s.count, s.mean_p_hat, s.rel_mae, s.rel_se, s.non_coverage
                );
            }
        }
        Command::Diagnostics(c) => {
            let d = harness::cmd_diagnostics(&c.resolve()?)?;
            println!("p,mode,kind,r");
            for r in &d.correlations {
                println!("{},{},{},{}", r.p, r.mode, r.kind, r.r);
            }
        }
        Command::Baseline(c) => {
            let cfg = c.resolve()?;
            harness::cmd_baseline(&cfg)?;
            println!("{}", cfg.out.join("baseline.csv").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
