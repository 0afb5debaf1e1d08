use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::CampaignConfig;
use super::output::{fmt_num, write_atomic, write_csv, RunManifest};
use crate::diagnostics::{chi2_quantile, correlation, mahalanobis_sq, qq_data, PairSampleMode, PairSampler, QqData};
use crate::distfit::{
    build_table, default_bins, fit_gaussian, read_table, tv_distance, wasserstein_distance, write_table, BuildOutput,
    SamplingDistributionTable, TableSpec,
};
use crate::dynamics::{sample_neurons, simulate_network};
use crate::error::{Error, Result};
use crate::graph::GraphParams;
use crate::inference::{
    deviance, estimate_p_with, optimal_reconstruction_mae, optimal_reconstruction_se, Estimate, EstimateOptions,
    Observation,
};
use crate::rng::{command, StreamFamily, Xoshiro256PlusPlus};
use crate::stats::{SpikeSummary, StatisticKind};

/// Runs `f` on a rayon pool of `workers` threads (0: one per core).
pub fn with_pool<T, F>(workers: usize, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Target of estimation for a generating probability: `p - p^2 / 2` once
/// reciprocal pairs are thinned to a single edge, else `p`.
pub fn target_p(p: f64, reciprocal_removed: bool) -> f64 {
    if reciprocal_removed {
        p - 0.5 * p * p
    } else {
        p
    }
}

/// `(neuron, value)` for every neuron whose statistic is computable.
fn eligible_statistics(summaries: &[SpikeSummary], kind: StatisticKind, horizon: u64) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::with_capacity(summaries.len());
    for (i, s) in summaries.iter().enumerate() {
        match s.statistic(kind, horizon) {
            Ok(v) => out.push((i, v)),
            Err(Error::InsufficientSpikes | Error::DegenerateIsi) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

fn observe(
    eligible: &[(usize, f64)],
    s: usize,
    kind: StatisticKind,
    rng: &mut Xoshiro256PlusPlus,
) -> Result<Observation> {
    if eligible.len() < s {
        return Err(Error::DegenerateSample(format!(
            "only {} neurons have a computable statistic, need {s}",
            eligible.len()
        )));
    }
    let picks = sample_neurons(eligible.len(), s, rng)?;
    Observation::new(kind, picks.into_iter().map(|k| eligible[k].1).collect())
}

pub fn table_spec(cfg: &CampaignConfig) -> TableSpec {
    TableSpec {
        kind: cfg.kind,
        grid: cfg.grid.points(),
        replicates: cfg.replicates,
        n: cfg.n,
        w: cfg.w,
        v0: cfg.v0,
        horizon: cfg.horizon,
        bins: cfg.bins,
    }
}

/// Distance between each grid point's pooled statistics and its Gaussian fit.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceRow {
    pub p: f64,
    pub kind: StatisticKind,
    pub m: usize,
    pub bins: usize,
    pub tv: f64,
    pub wasserstein: f64,
}

fn distance_row(p: f64, kind: StatisticKind, samples: &[f64]) -> Result<DistanceRow> {
    let fit = fit_gaussian(samples)?;
    let bins = default_bins(samples);
    Ok(DistanceRow {
        p,
        kind,
        m: samples.len(),
        bins,
        tv: tv_distance(samples, &fit, bins)?,
        wasserstein: wasserstein_distance(samples, &fit)?,
    })
}

fn write_distances(path: &Path, rows: &[DistanceRow]) -> Result<()> {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![fmt_num(r.p), r.kind.to_string(), r.m.to_string(), r.bins.to_string(), fmt_num(r.tv), fmt_num(r.wasserstein)]
        })
        .collect();
    write_csv(path, "p,kind,m,bins,tv,wasserstein", &rows)
}

/// Gaussian distances of the pooled statistics of every successful grid
/// point of a build.
pub fn build_distances(out: &BuildOutput) -> Result<Vec<DistanceRow>> {
    let k = out.meta.replicates;
    let mut rows = Vec::new();
    for (g, &p) in out.grid.iter().enumerate() {
        if out.points[g].is_err() {
            continue;
        }
        let samples: Vec<f64> = out.tasks[g * k..(g + 1) * k]
            .iter()
            .flat_map(|t| t.values.iter().filter_map(|v| v.ok()))
            .collect();
        if samples.len() >= 2 {
            rows.push(distance_row(p, out.kind, &samples)?);
        }
    }
    Ok(rows)
}

fn write_statistics(path: &Path, out: &BuildOutput) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "p,graph_id,neuron_id,kind,value,excluded_reason")?;
        for t in &out.tasks {
            let p = fmt_num(out.grid[t.grid_index]);
            for (i, v) in t.values.iter().enumerate() {
                match v {
                    Ok(x) => writeln!(w, "{p},{},{i},{},{},", t.replicate, out.kind, fmt_num(*x))?,
                    Err(reason) => writeln!(w, "{p},{},{i},{},,{reason}", t.replicate, out.kind)?,
                }
            }
        }
        Ok(())
    })
}

/// Builds the sampling-distribution table and writes `table.csv`,
/// `distances.csv`, optionally `statistics.csv`, and `build-table.manifest`
/// under `cfg.out`. Returns the table path.
pub fn cmd_build_table(cfg: &CampaignConfig) -> Result<PathBuf> {
    cfg.validate_build()?;
    let mut manifest = RunManifest::start("build-table", cfg);
    let spec = table_spec(cfg);
    let out = with_pool(cfg.workers, || build_table(&spec, cfg.seed))??;
    manifest.note(
        "streams",
        format!(
            "seed={} command={} task=grid_index*K+replicate tasks=0..{}",
            cfg.seed,
            command::BUILD_TABLE,
            spec.task_count()
        ),
    );
    let failures = out.failures();
    manifest.note(
        "failed_points",
        if failures.is_empty() {
            "none".to_string()
        } else {
            failures.iter().map(|(p, why)| format!("p={} ({why})", fmt_num(*p))).collect::<Vec<_>>().join("; ")
        },
    );
    write_distances(&cfg.out.join("distances.csv"), &build_distances(&out)?)?;
    if cfg.dump_statistics {
        write_statistics(&cfg.out.join("statistics.csv"), &out)?;
    }
    let table = match out.table() {
        Ok(t) => t,
        Err(e) => {
            manifest.finish()?;
            return Err(e);
        }
    };
    let path = cfg.out.join("table.csv");
    write_atomic(&path, |w| write_table(&table, w))?;
    manifest.note("table", path.display());
    manifest.finish()?;
    Ok(path)
}

pub fn load_table(path: &Path) -> Result<SamplingDistributionTable> {
    let file = File::open(path).map_err(|e| Error::Io(e).context(format!("opening table {}", path.display())))?;
    read_table(BufReader::new(file)).map_err(|e| e.context(format!("reading table {}", path.display())))
}

fn required_table(cfg: &CampaignConfig) -> Result<SamplingDistributionTable> {
    let path = cfg.table.as_ref().ok_or_else(|| Error::Config("a table file is required (--table)".into()))?;
    load_table(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRow {
    pub p_true: f64,
    pub s: usize,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthSummary {
    pub p_true: f64,
    /// Value the estimates are scored against.
    pub p_target: f64,
    pub variant: String,
    pub s: usize,
    pub count: usize,
    pub mean_p_hat: f64,
    /// `E|p_hat - p_target| / p_target`.
    pub rel_mae: f64,
    /// Sample standard deviation of `p_hat` over `p_target`.
    pub rel_se: f64,
    /// Fraction of intervals that miss `p_target`.
    pub non_coverage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub rows: Vec<EvaluationRow>,
    pub summaries: Vec<TruthSummary>,
}

fn summarize(p_true: f64, p_target: f64, s: usize, rows: &[EvaluationRow]) -> TruthSummary {
    let m = rows.len() as f64;
    let hats: Vec<f64> = rows.iter().map(|r| r.estimate.p_hat).collect();
    let mean = hats.iter().sum::<f64>() / m;
    let mae = hats.iter().map(|h| (h - p_target).abs()).sum::<f64>() / m;
    let sd = if rows.len() > 1 {
        (hats.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    let misses = rows
        .iter()
        .filter(|r| r.estimate.ci.is_some_and(|ci| !(ci.lo <= p_target && p_target <= ci.hi)))
        .count();
    TruthSummary {
        p_true,
        p_target,
        variant: rows.first().map_or(String::new(), |r| r.estimate.method.clone()),
        s,
        count: rows.len(),
        mean_p_hat: mean,
        rel_mae: mae / p_target,
        rel_se: sd / p_target,
        non_coverage: misses as f64 / m,
    }
}

/// For each truth value of the evaluation grid: one fresh graph, one
/// simulation, then `N_e` estimates from random samples of `s` neurons.
///
/// Truth point `t` runs on stream `t` of the evaluate family. Neurons are
/// drawn only among those whose statistic is computable.
pub fn evaluate(cfg: &CampaignConfig, table: &SamplingDistributionTable) -> Result<Evaluation> {
    cfg.validate_evaluate()?;
    if table.kind() != cfg.kind {
        return Err(Error::KindMismatch { table: table.kind().to_string(), obs: cfg.kind.to_string() });
    }
    let truths = cfg.eval_grid.points();
    let streams = StreamFamily::new(cfg.seed, command::EVALUATE).streams(truths.len());
    let options = EstimateOptions { interpolation: cfg.interpolation, level: Some(cfg.level) };
    let per_truth: Vec<(Vec<EvaluationRow>, TruthSummary)> = truths
        .par_iter()
        .zip(streams)
        .map(|(&p, mut rng)| {
            let mut run = || -> Result<_> {
                let params = GraphParams::new(cfg.n, p, cfg.w)?;
                let (_, summaries) = simulate_network(&params, cfg.remove_reciprocal, cfg.v0, cfg.horizon, &mut rng)?;
                let eligible = eligible_statistics(&summaries, cfg.kind, cfg.horizon)?;
                let mut rows = Vec::with_capacity(cfg.n_estimates);
                for _ in 0..cfg.n_estimates {
                    let obs = observe(&eligible, cfg.s, cfg.kind, &mut rng)?;
                    let estimate = estimate_p_with(table, &obs, cfg.estimator, options)?;
                    rows.push(EvaluationRow { p_true: p, s: cfg.s, estimate });
                }
                let summary = summarize(p, target_p(p, cfg.remove_reciprocal), cfg.s, &rows);
                Ok((rows, summary))
            };
            run().map_err(|e| e.context(format!("truth p={p}")))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (r, s) in per_truth {
        rows.extend(r);
        summaries.push(s);
    }
    Ok(Evaluation { rows, summaries })
}

pub const RESULTS_HEADER: &str = "p_true,variant,s,p_tilde,p_hat,ci_lo,ci_hi,flags";
pub const SUMMARY_HEADER: &str = "p_true,p_target,variant,s,n_estimates,mean_p_hat,rel_mae,rel_se,non_coverage";

pub fn estimate_fields(e: &Estimate) -> Vec<String> {
    let (lo, hi) = e.ci.map_or((String::new(), String::new()), |ci| (fmt_num(ci.lo), fmt_num(ci.hi)));
    vec![fmt_num(e.p_tilde), fmt_num(e.p_hat), lo, hi, e.flags.to_string()]
}

pub fn write_evaluation(dir: &Path, ev: &Evaluation) -> Result<()> {
    let rows: Vec<Vec<String>> = ev
        .rows
        .iter()
        .map(|r| {
            let mut f = vec![fmt_num(r.p_true), r.estimate.method.clone(), r.s.to_string()];
            f.extend(estimate_fields(&r.estimate));
            f
        })
        .collect();
    write_csv(&dir.join("results.csv"), RESULTS_HEADER, &rows)?;
    let rows: Vec<Vec<String>> = ev
        .summaries
        .iter()
        .map(|s| {
            vec![
                fmt_num(s.p_true),
                fmt_num(s.p_target),
                s.variant.clone(),
                s.s.to_string(),
                s.count.to_string(),
                fmt_num(s.mean_p_hat),
                fmt_num(s.rel_mae),
                fmt_num(s.rel_se),
                fmt_num(s.non_coverage),
            ]
        })
        .collect();
    write_csv(&dir.join("summary.csv"), SUMMARY_HEADER, &rows)
}

/// Evaluates against `cfg.table` and writes `results.csv`, `summary.csv` and
/// `evaluate.manifest`.
pub fn cmd_evaluate(cfg: &CampaignConfig) -> Result<Evaluation> {
    cfg.validate_evaluate()?;
    let mut manifest = RunManifest::start("evaluate", cfg);
    let table = required_table(cfg)?;
    let ev = with_pool(cfg.workers, || evaluate(cfg, &table))??;
    manifest.note(
        "streams",
        format!("seed={} command={} task=truth_index tasks=0..{}", cfg.seed, command::EVALUATE, cfg.eval_grid.count),
    );
    write_evaluation(&cfg.out, &ev)?;
    manifest.finish()?;
    Ok(ev)
}

/// Reads an observation: one value per line, with an optional `# kind=<kind>`
/// line. Without one, `default_kind` is used.
pub fn read_observation<R: BufRead>(input: R, default_kind: StatisticKind) -> Result<Observation> {
    let mut kind = default_kind;
    let mut values = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(("kind", v)) = rest.split_once('=').map(|(k, v)| (k.trim(), v.trim())) {
                kind = v.parse()?;
            }
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::Parse(format!("observation line {}: `{line}` is not a number", i + 1)))?;
        values.push(v);
    }
    Observation::new(kind, values)
}

pub const ESTIMATE_HEADER: &str = "variant,s,p_tilde,p_hat,ci_lo,ci_hi,level,flags";

/// Estimates `p` from one observation file against `cfg.table`, returning the
/// estimate and its CSV line.
pub fn cmd_estimate(cfg: &CampaignConfig, observation: &Path) -> Result<(Estimate, String)> {
    cfg.validate_estimation()?;
    let table = required_table(cfg)?;
    let file = File::open(observation)
        .map_err(|e| Error::Io(e).context(format!("opening observation {}", observation.display())))?;
    let obs = read_observation(BufReader::new(file), table.kind())?;
    let options = EstimateOptions { interpolation: cfg.interpolation, level: Some(cfg.level) };
    let est = estimate_p_with(&table, &obs, cfg.estimator, options)?;
    let f = estimate_fields(&est);
    let line = format!("{},{},{},{},{},{},{},{}", est.method, obs.len(), f[0], f[1], f[2], f[3], fmt_num(cfg.level), f[4]);
    Ok((est, line))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRow {
    pub s: usize,
    pub p: f64,
    pub mae: f64,
    pub se: f64,
}

/// Optimal reconstruction error for every `s` in `baseline_s` and every `p`
/// of the evaluation grid, sorted by `(s, p)`.
pub fn baseline(cfg: &CampaignConfig) -> Result<Vec<BaselineRow>> {
    cfg.validate_baseline()?;
    let mut sizes = cfg.baseline_s.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let mut ps = cfg.eval_grid.points();
    ps.sort_by(f64::total_cmp);
    let mut rows = Vec::new();
    for &s in &sizes {
        for &p in &ps {
            rows.push(BaselineRow {
                s,
                p,
                mae: optimal_reconstruction_mae(s, p)?,
                se: optimal_reconstruction_se(s, p)?,
            });
        }
    }
    Ok(rows)
}

pub fn cmd_baseline(cfg: &CampaignConfig) -> Result<Vec<BaselineRow>> {
    let manifest = RunManifest::start("baseline", cfg);
    let rows = baseline(cfg)?;
    let text: Vec<Vec<String>> =
        rows.iter().map(|r| vec![r.s.to_string(), fmt_num(r.p), fmt_num(r.mae), fmt_num(r.se)]).collect();
    write_csv(&cfg.out.join("baseline.csv"), "s,p,optimal_mae,optimal_se", &text)?;
    manifest.finish()?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub p: f64,
    pub mode: PairSampleMode,
    pub kind: StatisticKind,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub p: f64,
    pub mode: PairSampleMode,
    pub kind: StatisticKind,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagnosticsOutput {
    pub pairs: Vec<PairRecord>,
    pub correlations: Vec<CorrelationRow>,
    /// `(p, d2)` for vectors of `s` statistics of kind `cfg.kind`.
    pub mahalanobis: Vec<(f64, f64)>,
    pub mahalanobis_qq: Vec<(f64, QqData)>,
    pub distances: Vec<DistanceRow>,
    /// `(p, deviance)`; empty without a table.
    pub deviance: Vec<(f64, f64)>,
    pub deviance_qq: Vec<(f64, QqData)>,
}

const MODES: [PairSampleMode; 2] = [PairSampleMode::Random, PairSampleMode::PostSynaptic];
const KINDS: [StatisticKind; 2] = [StatisticKind::SpikeFreq, StatisticKind::GammaAlpha];

/// Share of `total` items assigned to replicate `r` of `reps`.
fn share(total: usize, reps: usize, r: usize) -> usize {
    total / reps + usize::from(r < total % reps)
}

struct NetworkDiagnostics {
    pairs: Vec<PairRecord>,
    vectors: Vec<Vec<f64>>,
    statistics: [Vec<f64>; 2],
}

/// Correlation, joint-Gaussianity, Gaussian-distance and (with a table)
/// deviance datasets.
///
/// For each `p` in `diag_p`, `diag_replicates` networks are simulated on the
/// diagnostics stream family (task `p_index * R + r`). Pairs and vectors are
/// drawn on the pair-sampling family with the same task index, `diag_pairs`
/// pairs per mode and kind and `diag_vectors` vectors spread evenly over the
/// networks. Deviance task `k` uses diagnostics task `|diag_p| * R + k`.
pub fn run_diagnostics(cfg: &CampaignConfig, table: Option<&SamplingDistributionTable>) -> Result<DiagnosticsOutput> {
    cfg.validate_diagnostics()?;
    let reps = cfg.diag_replicates;
    let sims = StreamFamily::new(cfg.seed, command::DIAGNOSTICS);
    let sampling = StreamFamily::new(cfg.seed, command::PAIR_SAMPLING);
    let tasks: Vec<(usize, usize)> = (0..cfg.diag_p.len()).flat_map(|i| (0..reps).map(move |r| (i, r))).collect();

    let networks: Vec<NetworkDiagnostics> = tasks
        .par_iter()
        .map(|&(pi, r)| {
            let p = cfg.diag_p[pi];
            let task = (pi * reps + r) as u64;
            let run = || -> Result<NetworkDiagnostics> {
                let mut rng = sims.stream(task);
                let params = GraphParams::new(cfg.n, p, cfg.w)?;
                let (g, summaries) = simulate_network(&params, false, cfg.v0, cfg.horizon, &mut rng)?;
                let mut pick = sampling.stream(task);
                let mut pairs = Vec::new();
                for mode in MODES {
                    for kind in KINDS {
                        let sampler = PairSampler::new(&g, &summaries, kind, cfg.horizon)?;
                        for _ in 0..share(cfg.diag_pairs, reps, r) {
                            let (x, y) = sampler.sample(mode, &mut pick)?;
                            pairs.push(PairRecord { p, mode, kind, x, y });
                        }
                    }
                }
                let eligible = eligible_statistics(&summaries, cfg.kind, cfg.horizon)?;
                let vectors = (0..share(cfg.diag_vectors, reps, r))
                    .map(|_| observe(&eligible, cfg.s, cfg.kind, &mut pick).map(|o| o.values))
                    .collect::<Result<Vec<_>>>()?;
                let statistics = [
                    eligible_statistics(&summaries, KINDS[0], cfg.horizon)?.into_iter().map(|e| e.1).collect(),
                    eligible_statistics(&summaries, KINDS[1], cfg.horizon)?.into_iter().map(|e| e.1).collect(),
                ];
                Ok(NetworkDiagnostics { pairs, vectors, statistics })
            };
            run().map_err(|e| e.context(format!("diagnostics p={p} replicate {r}")))
        })
        .collect::<Result<_>>()?;

    let mut out = DiagnosticsOutput::default();
    for (pi, &p) in cfg.diag_p.iter().enumerate() {
        let group = &networks[pi * reps..(pi + 1) * reps];
        let pairs: Vec<PairRecord> = group.iter().flat_map(|n| n.pairs.iter().cloned()).collect();
        for mode in MODES {
            for kind in KINDS {
                let xy: Vec<(f64, f64)> =
                    pairs.iter().filter(|q| q.mode == mode && q.kind == kind).map(|q| (q.x, q.y)).collect();
                let r = correlation(&xy).map_err(|e| e.context(format!("correlation p={p} {mode} {kind}")))?;
                out.correlations.push(CorrelationRow { p, mode, kind, r });
            }
        }
        out.pairs.extend(pairs);

        let vectors: Vec<Vec<f64>> = group.iter().flat_map(|n| n.vectors.iter().cloned()).collect();
        let d2 = mahalanobis_sq(&vectors).map_err(|e| e.context(format!("mahalanobis p={p}")))?;
        let s = cfg.s as f64;
        out.mahalanobis_qq.push((p, qq_data(&d2, |u| chi2_quantile(u, s))?));
        out.mahalanobis.extend(d2.into_iter().map(|d| (p, d)));

        for (k, kind) in KINDS.iter().enumerate() {
            let pooled: Vec<f64> = group.iter().flat_map(|n| n.statistics[k].iter().copied()).collect();
            if pooled.len() >= 2 {
                out.distances.push(distance_row(p, *kind, &pooled)?);
            }
        }
    }

    if let Some(table) = table {
        let grid = table.grid();
        let (gmin, gmax) = (grid[0], grid[grid.len() - 1]);
        if let Some(bad) = cfg.deviance_p.iter().find(|p| !(gmin..=gmax).contains(*p)) {
            return Err(Error::Config(format!("deviance_p {bad} lies outside the table grid [{gmin}, {gmax}]")));
        }
        let options = EstimateOptions { interpolation: cfg.interpolation, level: None };
        let base = tasks.len() as u64;
        let per_p: Vec<Vec<f64>> = cfg
            .deviance_p
            .par_iter()
            .enumerate()
            .map(|(k, &p)| {
                let run = || -> Result<Vec<f64>> {
                    let mut rng = sims.stream(base + k as u64);
                    let params = GraphParams::new(cfg.n, p, cfg.w)?;
                    let (_, summaries) = simulate_network(&params, false, cfg.v0, cfg.horizon, &mut rng)?;
                    let eligible = eligible_statistics(&summaries, table.kind(), cfg.horizon)?;
                    (0..cfg.n_estimates)
                        .map(|_| {
                            let obs = observe(&eligible, cfg.s, table.kind(), &mut rng)?;
                            deviance(&estimate_p_with(table, &obs, cfg.estimator, options)?, p)
                        })
                        .collect()
                };
                run().map_err(|e| e.context(format!("deviance p={p}")))
            })
            .collect::<Result<_>>()?;
        for (&p, ds) in cfg.deviance_p.iter().zip(per_p) {
            out.deviance_qq.push((p, qq_data(&ds, |u| chi2_quantile(u, 1.0))?));
            out.deviance.extend(ds.into_iter().map(|d| (p, d)));
        }
    }
    Ok(out)
}

fn p_tag(p: f64) -> String {
    format!("{p}").replace('.', "_")
}

fn write_qq(path: &Path, qq: &QqData) -> Result<()> {
    let rows: Vec<Vec<String>> = qq.points.iter().map(|&(e, t)| vec![fmt_num(e), fmt_num(t)]).collect();
    write_csv(path, "empirical_q,theoretical_q", &rows)
}

pub fn write_diagnostics(dir: &Path, d: &DiagnosticsOutput) -> Result<()> {
    let rows: Vec<Vec<String>> = d
        .correlations
        .iter()
        .map(|c| vec![fmt_num(c.p), c.mode.to_string(), c.kind.to_string(), fmt_num(c.r)])
        .collect();
    write_csv(&dir.join("correlations.csv"), "p,mode,kind,r", &rows)?;
    let rows: Vec<Vec<String>> = d
        .pairs
        .iter()
        .map(|q| vec![fmt_num(q.p), q.mode.to_string(), q.kind.to_string(), fmt_num(q.x), fmt_num(q.y)])
        .collect();
    write_csv(&dir.join("pairs.csv"), "p,mode,kind,x,y", &rows)?;
    let rows: Vec<Vec<String>> = d.mahalanobis.iter().map(|&(p, v)| vec![fmt_num(p), fmt_num(v)]).collect();
    write_csv(&dir.join("mahalanobis.csv"), "p,d2", &rows)?;
    for (p, qq) in &d.mahalanobis_qq {
        write_qq(&dir.join(format!("qq_mahalanobis_p{}.csv", p_tag(*p))), qq)?;
    }
    write_distances(&dir.join("gaussian_distance.csv"), &d.distances)?;
    if !d.deviance_qq.is_empty() {
        let rows: Vec<Vec<String>> = d.deviance.iter().map(|&(p, v)| vec![fmt_num(p), fmt_num(v)]).collect();
        write_csv(&dir.join("deviance.csv"), "p,deviance", &rows)?;
        for (p, qq) in &d.deviance_qq {
            write_qq(&dir.join(format!("qq_deviance_p{}.csv", p_tag(*p))), qq)?;
        }
    }
    Ok(())
}

/// Runs the diagnostics (with the deviance datasets when `cfg.table` is set)
/// and writes them under `cfg.out`.
pub fn cmd_diagnostics(cfg: &CampaignConfig) -> Result<DiagnosticsOutput> {
    cfg.validate_diagnostics()?;
    let mut manifest = RunManifest::start("diagnostics", cfg);
    let table = cfg.table.as_ref().map(|p| load_table(p)).transpose()?;
    let d = with_pool(cfg.workers, || run_diagnostics(cfg, table.as_ref()))??;
    manifest.note(
        "streams",
        format!(
            "seed={} simulation_command={} sampling_command={} task=p_index*R+replicate, deviance task=|diag_p|*R+k",
            cfg.seed,
            command::DIAGNOSTICS,
            command::PAIR_SAMPLING
        ),
    );
    fs::create_dir_all(&cfg.out)?;
    write_diagnostics(&cfg.out, &d)?;
    manifest.finish()?;
    Ok(d)
}
