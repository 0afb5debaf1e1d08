use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::distfit::Estimator;
use crate::error::{Error, Result};
use crate::inference::Interpolation;
use crate::stats::StatisticKind;

/// Arithmetic grid `start + step * i` for `i in 0..count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.start + self.step * i as f64).collect()
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Config(format!("{name}_count must be positive")));
        }
        if self.count > 1 && !(self.step > 0.0) {
            return Err(Error::Config(format!("{name}_step must be positive")));
        }
        let pts = self.points();
        if !(pts[0] > 0.0 && pts[pts.len() - 1] < 1.0) {
            return Err(Error::Config(format!("{name} grid must lie inside (0, 1)")));
        }
        Ok(())
    }
}

/// Every tunable of every campaign command. Defaults are the desk-scale
/// protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub n: usize,
    pub w: f64,
    pub v0: f64,
    pub horizon: u64,
    pub replicates: usize,
    pub grid: GridSpec,
    pub eval_grid: GridSpec,
    pub s: usize,
    pub n_estimates: usize,
    pub kind: StatisticKind,
    pub estimator: Estimator,
    pub interpolation: Interpolation,
    pub seed: u64,
    /// Rayon pool size; 0 uses every available core.
    pub workers: usize,
    pub out: PathBuf,
    pub remove_reciprocal: bool,
    pub level: f64,
    pub bins: Option<usize>,
    pub table: Option<PathBuf>,
    pub dump_statistics: bool,
    pub diag_p: Vec<f64>,
    pub diag_replicates: usize,
    pub diag_pairs: usize,
    pub diag_vectors: usize,
    pub deviance_p: Vec<f64>,
    pub baseline_s: Vec<usize>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            n: 200,
            w: 0.01,
            v0: 0.01,
            horizon: 100_000,
            replicates: 20,
            grid: GridSpec { start: 0.005, step: 0.002, count: 21 },
            eval_grid: GridSpec { start: 0.014, step: 0.003, count: 10 },
            s: 10,
            n_estimates: 200,
            kind: StatisticKind::SpikeFreq,
            estimator: Estimator::Gaussian,
            interpolation: Interpolation::Likelihood,
            seed: 1,
            workers: 0,
            out: PathBuf::from("out"),
            remove_reciprocal: false,
            level: 0.95,
            bins: None,
            table: None,
            dump_statistics: false,
            diag_p: vec![0.012, 0.025, 0.04],
            diag_replicates: 4,
            diag_pairs: 2000,
            diag_vectors: 2000,
            deviance_p: vec![0.015, 0.025, 0.035],
            baseline_s: vec![10],
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean `{value}` for `{key}`"))),
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse(key, v))
        .collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Parses `key = value` lines. `#` starts a comment line; blank lines are
/// skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got `{line}`", i + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

impl CampaignConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::default();
        cfg.apply(&parse_key_values(&text)?)?;
        Ok(cfg)
    }

    pub fn apply(&mut self, pairs: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in pairs {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n" => self.n = parse(key, value)?,
            "w" => self.w = parse(key, value)?,
            "v0" => self.v0 = parse(key, value)?,
            "T" => self.horizon = parse(key, value)?,
            "K" => self.replicates = parse(key, value)?,
            "grid_start" => self.grid.start = parse(key, value)?,
            "grid_step" => self.grid.step = parse(key, value)?,
            "grid_count" => self.grid.count = parse(key, value)?,
            "eval_start" => self.eval_grid.start = parse(key, value)?,
            "eval_step" => self.eval_grid.step = parse(key, value)?,
            "eval_count" => self.eval_grid.count = parse(key, value)?,
            "s" => self.s = parse(key, value)?,
            "N_e" => self.n_estimates = parse(key, value)?,
            "kind" => self.kind = value.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
            "estimator" => self.estimator = value.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
            "interpolation" => {
                self.interpolation = match value {
                    "likelihood" => Interpolation::Likelihood,
                    "loglik" => Interpolation::LogLikelihood,
                    _ => return Err(Error::Config(format!("interpolation must be likelihood or loglik, got `{value}`"))),
                }
            }
            "seed" => self.seed = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "remove_reciprocal" => self.remove_reciprocal = parse_bool(key, value)?,
            "level" => self.level = parse(key, value)?,
            "bins" => self.bins = if value == "auto" { None } else { Some(parse(key, value)?) },
            "table" => self.table = if value.is_empty() { None } else { Some(PathBuf::from(value)) },
            "dump_statistics" => self.dump_statistics = parse_bool(key, value)?,
            "diag_p" => self.diag_p = parse_list(key, value)?,
            "diag_replicates" => self.diag_replicates = parse(key, value)?,
            "diag_pairs" => self.diag_pairs = parse(key, value)?,
            "diag_vectors" => self.diag_vectors = parse(key, value)?,
            "deviance_p" => self.deviance_p = parse_list(key, value)?,
            "baseline_s" => self.baseline_s = parse_list(key, value)?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// All keys in a stable order, in the syntax [`CampaignConfig::set`]
    /// accepts. Floats use the shortest representation that parses back to
    /// the same value.
    pub fn to_key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("n", self.n.to_string()),
            ("w", self.w.to_string()),
            ("v0", self.v0.to_string()),
            ("T", self.horizon.to_string()),
            ("K", self.replicates.to_string()),
            ("grid_start", self.grid.start.to_string()),
            ("grid_step", self.grid.step.to_string()),
            ("grid_count", self.grid.count.to_string()),
            ("eval_start", self.eval_grid.start.to_string()),
            ("eval_step", self.eval_grid.step.to_string()),
            ("eval_count", self.eval_grid.count.to_string()),
            ("s", self.s.to_string()),
            ("N_e", self.n_estimates.to_string()),
            ("kind", self.kind.to_string()),
            ("estimator", self.estimator.to_string()),
            (
                "interpolation",
                match self.interpolation {
                    Interpolation::Likelihood => "likelihood".into(),
                    Interpolation::LogLikelihood => "loglik".into(),
                },
            ),
            ("seed", self.seed.to_string()),
            ("workers", self.workers.to_string()),
            ("out", self.out.display().to_string()),
            ("remove_reciprocal", self.remove_reciprocal.to_string()),
            ("level", self.level.to_string()),
            ("bins", self.bins.map_or("auto".into(), |b| b.to_string())),
            ("table", self.table.as_ref().map_or(String::new(), |t| t.display().to_string())),
            ("dump_statistics", self.dump_statistics.to_string()),
            ("diag_p", join(&self.diag_p)),
            ("diag_replicates", self.diag_replicates.to_string()),
            ("diag_pairs", self.diag_pairs.to_string()),
            ("diag_vectors", self.diag_vectors.to_string()),
            ("deviance_p", join(&self.deviance_p)),
            ("baseline_s", join(&self.baseline_s)),
        ]
    }

    /// Checks the fields shared by all simulation commands.
    pub fn validate_network(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n must be at least 2, got {}", self.n)));
        }
        if !(self.w > 0.0 && self.w.is_finite()) {
            return Err(Error::Config(format!("w must be positive, got {}", self.w)));
        }
        if !(self.v0 >= 0.0 && self.v0.is_finite()) {
            return Err(Error::Config(format!("v0 must be non-negative, got {}", self.v0)));
        }
        if self.horizon == 0 || self.horizon > u64::from(u32::MAX) {
            return Err(Error::Config(format!("T must be in [1, 2^32), got {}", self.horizon)));
        }
        Ok(())
    }

    pub fn validate_build(&self) -> Result<()> {
        self.validate_network()?;
        self.grid.validate("grid")?;
        if self.replicates == 0 {
            return Err(Error::Config("K must be positive".into()));
        }
        if self.bins == Some(0) {
            return Err(Error::Config("bins must be positive".into()));
        }
        Ok(())
    }

    pub fn validate_estimation(&self) -> Result<()> {
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("level must lie in (0, 1), got {}", self.level)));
        }
        Ok(())
    }

    pub fn validate_evaluate(&self) -> Result<()> {
        self.validate_network()?;
        self.validate_estimation()?;
        self.eval_grid.validate("eval")?;
        if self.s == 0 || self.s > self.n {
            return Err(Error::Config(format!("s must lie in [1, n], got {}", self.s)));
        }
        if self.n_estimates == 0 {
            return Err(Error::Config("N_e must be positive".into()));
        }
        Ok(())
    }

    pub fn validate_diagnostics(&self) -> Result<()> {
        self.validate_network()?;
        if self.diag_p.is_empty() || self.diag_p.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return Err(Error::Config("diag_p must be a non-empty list of probabilities".into()));
        }
        if self.deviance_p.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return Err(Error::Config("deviance_p must hold probabilities".into()));
        }
        if self.diag_replicates == 0 || self.diag_pairs < 2 {
            return Err(Error::Config("diag_replicates must be positive and diag_pairs at least 2".into()));
        }
        if self.s == 0 || self.s > self.n || self.diag_vectors < self.s + 2 {
            return Err(Error::Config("need 1 <= s <= n and diag_vectors >= s + 2".into()));
        }
        if !self.deviance_p.is_empty() && self.n_estimates == 0 {
            return Err(Error::Config("N_e must be positive".into()));
        }
        Ok(())
    }

    pub fn validate_baseline(&self) -> Result<()> {
        self.eval_grid.validate("eval")?;
        if self.baseline_s.is_empty() || self.baseline_s.iter().any(|&s| s < 2) {
            return Err(Error::Config("baseline_s must list sizes of at least 2".into()));
        }
        Ok(())
    }
}
