use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use super::{default_bins, fit_gaussian, fit_histogram, DensityModel, Estimator, GaussianFit, HistogramFit};
use crate::dynamics::simulate_network;
use crate::error::{Error, Result};
use crate::graph::GraphParams;
use crate::rng::{command, StreamFamily};
use crate::stats::StatisticKind;

pub const TABLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TableMeta {
    pub n: usize,
    pub horizon: u64,
    pub replicates: usize,
    pub w: f64,
    pub v0: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry {
    pub p: f64,
    /// Number of pooled statistic values.
    pub m: usize,
    /// Neurons whose statistic could not be computed.
    pub excluded: usize,
    pub gaussian: GaussianFit,
    pub histogram: HistogramFit,
}

impl TableEntry {
    pub fn density(&self, estimator: Estimator) -> &dyn DensityModel {
        match estimator {
            Estimator::Gaussian => &self.gaussian,
            Estimator::Histogram => &self.histogram,
        }
    }

    pub fn from_samples(p: f64, samples: &[f64], excluded: usize, bins: Option<usize>) -> Result<Self> {
        let fail = |e: Error| Error::TablePointFailure { p, reason: e.to_string() };
        if samples.is_empty() {
            return Err(Error::TablePointFailure { p, reason: "every neuron was excluded".into() });
        }
        let gaussian = fit_gaussian(samples).map_err(fail)?;
        let bins = bins.unwrap_or_else(|| default_bins(samples));
        let histogram = fit_histogram(samples, bins).map_err(fail)?;
        Ok(Self { p, m: samples.len(), excluded, gaussian, histogram })
    }
}

/// Estimated sampling distributions of one statistic over an ascending grid
/// of connection probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDistributionTable {
    kind: StatisticKind,
    meta: TableMeta,
    entries: Vec<TableEntry>,
}

impl SamplingDistributionTable {
    pub fn new(kind: StatisticKind, meta: TableMeta, entries: Vec<TableEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter("table needs at least one grid point".into()));
        }
        if !entries.windows(2).all(|e| e[0].p < e[1].p) {
            return Err(Error::InvalidParameter("table grid must be strictly ascending".into()));
        }
        Ok(Self { kind, meta, entries })
    }

    pub fn kind(&self) -> StatisticKind {
        self.kind
    }

    pub fn meta(&self) -> &TableMeta {
        &self.meta
    }

    pub fn entries(&self) -> &[TableEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn grid(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.p).collect()
    }
}

/// What to simulate for a table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableSpec {
    pub kind: StatisticKind,
    pub grid: Vec<f64>,
    /// Independent graphs per grid point (`K`).
    pub replicates: usize,
    pub n: usize,
    pub w: f64,
    pub v0: f64,
    pub horizon: u64,
    /// Histogram bin count; Freedman-Diaconis when `None`.
    pub bins: Option<usize>,
}

impl TableSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() || !self.grid.windows(2).all(|g| g[0] < g[1]) {
            return Err(Error::InvalidParameter("grid must be non-empty and strictly ascending".into()));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("K must be at least 1".into()));
        }
        for &p in &self.grid {
            GraphParams::new(self.n, p, self.w)?;
        }
        if self.bins == Some(0) {
            return Err(Error::InvalidParameter("bins must be positive".into()));
        }
        Ok(())
    }

    pub fn task_count(&self) -> usize {
        self.grid.len() * self.replicates
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExclusionReason {
    InsufficientSpikes,
    DegenerateIsi,
}

impl ExclusionReason {
    pub fn label(self) -> &'static str {
        match self {
            ExclusionReason::InsufficientSpikes => "insufficient_spikes",
            ExclusionReason::DegenerateIsi => "degenerate_isi",
        }
    }

    pub fn from_error(e: &Error) -> Option<Self> {
        match e {
            Error::InsufficientSpikes => Some(ExclusionReason::InsufficientSpikes),
            Error::DegenerateIsi => Some(ExclusionReason::DegenerateIsi),
            _ => None,
        }
    }
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Per-neuron statistics of one simulated replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskStatistics {
    pub grid_index: usize,
    pub replicate: usize,
    pub values: Vec<std::result::Result<f64, ExclusionReason>>,
}

#[derive(Debug)]
pub struct BuildOutput {
    pub kind: StatisticKind,
    pub meta: TableMeta,
    pub grid: Vec<f64>,
    /// One fit (or failure) per grid point.
    pub points: Vec<Result<TableEntry>>,
    /// Ordered by task index `grid_index * K + replicate`.
    pub tasks: Vec<TaskStatistics>,
}

impl BuildOutput {
    pub fn failures(&self) -> Vec<(f64, String)> {
        self.grid
            .iter()
            .zip(&self.points)
            .filter_map(|(&p, r)| r.as_ref().err().map(|e| (p, e.to_string())))
            .collect()
    }

    /// The table, or the first grid-point failure.
    pub fn table(&self) -> Result<SamplingDistributionTable> {
        let mut entries = Vec::with_capacity(self.points.len());
        for (&p, point) in self.grid.iter().zip(&self.points) {
            match point {
                Ok(e) => entries.push(e.clone()),
                Err(e) => return Err(Error::TablePointFailure { p, reason: e.to_string() }),
            }
        }
        SamplingDistributionTable::new(self.kind, self.meta.clone(), entries)
    }
}

/// Simulates `K` graphs per grid point and fits both estimators to the pooled
/// per-neuron statistics.
///
/// Task `grid_index * K + replicate` runs on its own jumped stream of the
/// build-table stream family, so the result does not depend on the rayon pool
/// size. Pooling follows task order.
pub fn build_table(spec: &TableSpec, seed: u64) -> Result<BuildOutput> {
    spec.validate()?;
    let k = spec.replicates;
    let streams = StreamFamily::new(seed, command::BUILD_TABLE).streams(spec.task_count());
    let tasks: Vec<TaskStatistics> = streams
        .into_par_iter()
        .enumerate()
        .map(|(task, mut rng)| {
            let grid_index = task / k;
            let params = GraphParams::new(spec.n, spec.grid[grid_index], spec.w)?;
            let (_, summaries) = simulate_network(&params, false, spec.v0, spec.horizon, &mut rng)?;
            let values = summaries
                .iter()
                .map(|s| s.statistic(spec.kind, spec.horizon))
                .map(|r| match r {
                    Ok(v) => Ok(Ok(v)),
                    Err(e) => ExclusionReason::from_error(&e).map(Err).ok_or(e),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(TaskStatistics { grid_index, replicate: task % k, values })
        })
        .collect::<Result<Vec<_>>>()?;

    let points = spec
        .grid
        .iter()
        .enumerate()
        .map(|(g, &p)| {
            let chunk = &tasks[g * k..(g + 1) * k];
            let mut samples = Vec::with_capacity(spec.n * k);
            let mut excluded = 0;
            for v in chunk.iter().flat_map(|t| &t.values) {
                match v {
                    Ok(x) => samples.push(*x),
                    Err(_) => excluded += 1,
                }
            }
            TableEntry::from_samples(p, &samples, excluded, spec.bins)
        })
        .collect();

    Ok(BuildOutput {
        kind: spec.kind,
        meta: TableMeta {
            n: spec.n,
            horizon: spec.horizon,
            replicates: k,
            w: spec.w,
            v0: spec.v0,
            seed,
        },
        grid: spec.grid.clone(),
        points,
        tasks,
    })
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_table<W: Write>(table: &SamplingDistributionTable, mut out: W) -> std::io::Result<()> {
    let meta = &table.meta;
    writeln!(out, "# glsbi sampling-distribution table")?;
    writeln!(out, "# format_version={TABLE_FORMAT_VERSION}")?;
    writeln!(out, "# kind={}", table.kind)?;
    writeln!(out, "# n={}", meta.n)?;
    writeln!(out, "# T={}", meta.horizon)?;
    writeln!(out, "# K={}", meta.replicates)?;
    writeln!(out, "# w={}", fmt_f64(meta.w))?;
    writeln!(out, "# v0={}", fmt_f64(meta.v0))?;
    writeln!(out, "# seed={}", meta.seed)?;
    writeln!(out, "# columns=p,m,excluded,mu,sigma,bin_count,edge_0..edge_B,dens_0..dens_(B-1)")?;
    for e in &table.entries {
        let mut fields = vec![
            fmt_f64(e.p),
            e.m.to_string(),
            e.excluded.to_string(),
            fmt_f64(e.gaussian.mu),
            fmt_f64(e.gaussian.sigma),
            e.histogram.bins().to_string(),
        ];
        fields.extend(e.histogram.edges.iter().map(|&x| fmt_f64(x)));
        fields.extend(e.histogram.densities.iter().map(|&x| fmt_f64(x)));
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(s: &str, what: &str, line: usize) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: cannot parse {what} from `{s}`")))
}

pub fn read_table<R: BufRead>(input: R) -> Result<SamplingDistributionTable> {
    let mut header: BTreeMap<String, String> = BTreeMap::new();
    let mut entries = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                header.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() < 6 {
            return Err(Error::Parse(format!("line {lineno}: truncated table record")));
        }
        let p: f64 = parse_field(fields[0], "p", lineno)?;
        let m: usize = parse_field(fields[1], "m", lineno)?;
        let excluded: usize = parse_field(fields[2], "excluded", lineno)?;
        let mu: f64 = parse_field(fields[3], "mu", lineno)?;
        let sigma: f64 = parse_field(fields[4], "sigma", lineno)?;
        let bins: usize = parse_field(fields[5], "bin_count", lineno)?;
        if fields.len() != 6 + 2 * bins + 1 {
            return Err(Error::Parse(format!(
                "line {lineno}: expected {} fields for {bins} bins, found {}",
                6 + 2 * bins + 1,
                fields.len()
            )));
        }
        let nums = fields[6..]
            .iter()
            .map(|f| parse_field::<f64>(f, "histogram value", lineno))
            .collect::<Result<Vec<_>>>()?;
        let histogram = HistogramFit { edges: nums[..=bins].to_vec(), densities: nums[bins + 1..].to_vec(), m };
        histogram.validate()?;
        let gaussian =
            GaussianFit::new(mu, sigma, m).map_err(|e| Error::Parse(format!("line {lineno}: {e}")))?;
        entries.push(TableEntry { p, m, excluded, gaussian, histogram });
    }
    let get = |key: &str| {
        header
            .get(key)
            .ok_or_else(|| Error::Parse(format!("table header is missing `{key}`")))
    };
    let version: u32 = parse_field(get("format_version")?, "format_version", 0)?;
    if version != TABLE_FORMAT_VERSION {
        return Err(Error::Parse(format!("unsupported table format version {version}")));
    }
    let kind: StatisticKind = get("kind")?.parse()?;
    let meta = TableMeta {
        n: parse_field(get("n")?, "n", 0)?,
        horizon: parse_field(get("T")?, "T", 0)?,
        replicates: parse_field(get("K")?, "K", 0)?,
        w: parse_field(get("w")?, "w", 0)?,
        v0: parse_field(get("v0")?, "v0", 0)?,
        seed: parse_field(get("seed")?, "seed", 0)?,
    };
    SamplingDistributionTable::new(kind, meta, entries).map_err(|e| Error::Parse(e.to_string()))
}
