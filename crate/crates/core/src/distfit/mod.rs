//! Per-p sampling distributions of a scalar statistic: a Gaussian fit, an
//! equal-width histogram, distances between the two, and the table that
//! stores both for every grid point.

mod distance;
mod table;

use std::fmt;
use std::str::FromStr;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

pub use distance::{tv_distance, wasserstein_distance};
pub use table::{
    build_table, read_table, write_table, BuildOutput, ExclusionReason, SamplingDistributionTable, TableEntry,
    TableMeta, TableSpec, TaskStatistics, TABLE_FORMAT_VERSION,
};

/// Floor used for densities outside a histogram's support or in empty bins.
pub const DENSITY_FLOOR: f64 = 1e-30;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Anything that can be evaluated as a density with a CDF.
pub trait DensityModel {
    fn log_density(&self, x: f64) -> Result<f64>;
    fn cdf(&self, x: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    Gaussian,
    Histogram,
}

impl Estimator {
    pub fn label(self) -> &'static str {
        match self {
            Estimator::Gaussian => "gaussian",
            Estimator::Histogram => "histogram",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gaussian" => Ok(Estimator::Gaussian),
            "histogram" => Ok(Estimator::Histogram),
            other => Err(Error::Parse(format!("unknown estimator `{other}` (expected gaussian or histogram)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    pub mu: f64,
    pub sigma: f64,
    pub m: usize,
}

impl GaussianFit {
    pub fn new(mu: f64, sigma: f64, m: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) || m < 2 {
            return Err(Error::DegenerateSample(format!("invalid Gaussian parameters mu={mu} sigma={sigma} m={m}")));
        }
        Ok(Self { mu, sigma, m })
    }
}

impl DensityModel for GaussianFit {
    fn log_density(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::NotANumber("log_density"));
        }
        let z = (x - self.mu) / self.sigma;
        Ok(-LN_SQRT_2PI - self.sigma.ln() - 0.5 * z * z)
    }

    fn cdf(&self, x: f64) -> f64 {
        normal_cdf((x - self.mu) / self.sigma)
    }
}

pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

pub(crate) fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

fn check_samples(samples: &[f64], min_len: usize) -> Result<()> {
    if samples.len() < min_len {
        return Err(Error::DegenerateSample(format!(
            "need at least {min_len} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::NotANumber("sample"));
    }
    Ok(())
}

/// Sample mean and unbiased variance.
pub fn mean_var(samples: &[f64]) -> (f64, f64) {
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let ss: f64 = samples.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, ss / (m - 1.0))
}

pub fn fit_gaussian(samples: &[f64]) -> Result<GaussianFit> {
    check_samples(samples, 2)?;
    let (mu, var) = mean_var(samples);
    if var <= 0.0 {
        return Err(Error::DegenerateSample("zero variance".into()));
    }
    GaussianFit::new(mu, var.sqrt(), samples.len())
}

/// Equal-width histogram normalized to integrate to one.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramFit {
    pub edges: Vec<f64>,
    pub densities: Vec<f64>,
    pub m: usize,
}

impl HistogramFit {
    pub fn bins(&self) -> usize {
        self.densities.len()
    }

    /// Bin holding `x`, with bins closed on the left; `None` outside support.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        bin_index(&self.edges, x)
    }

    pub fn integral(&self) -> f64 {
        self.densities
            .iter()
            .zip(self.edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum()
    }

    /// Checks the structural invariants after deserialization.
    pub fn validate(&self) -> Result<()> {
        if self.densities.is_empty() || self.edges.len() != self.densities.len() + 1 {
            return Err(Error::Parse("histogram needs B >= 1 densities and B + 1 edges".into()));
        }
        if !self.edges.windows(2).all(|e| e[0] < e[1]) {
            return Err(Error::Parse("histogram edges must be strictly increasing".into()));
        }
        if self.densities.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::Parse("histogram densities must be non-negative".into()));
        }
        Ok(())
    }
}

fn bin_index(edges: &[f64], x: f64) -> Option<usize> {
    let last = *edges.last()?;
    if !(x >= edges[0] && x < last) {
        return None;
    }
    Some(edges.partition_point(|&e| e <= x) - 1)
}

/// Edges of `bins` equal-width bins over `[min, max]`, with the top edge
/// pushed up by 1e-9 of the range so the maximum falls in the last bin.
pub(crate) fn equal_width_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let top = hi + 1e-9 * (hi - lo);
    let width = (top - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|k| lo + k as f64 * width).collect();
    edges.push(top);
    edges
}

pub(crate) fn bin_counts(edges: &[f64], samples: &[f64]) -> Vec<usize> {
    let mut counts = vec![0usize; edges.len() - 1];
    for &x in samples {
        if let Some(b) = bin_index(edges, x) {
            counts[b] += 1;
        }
    }
    counts
}

pub fn fit_histogram(samples: &[f64], bins: usize) -> Result<HistogramFit> {
    check_samples(samples, 1)?;
    if bins == 0 {
        return Err(Error::InvalidParameter("histogram needs at least one bin".into()));
    }
    let (lo, hi) = min_max(samples);
    if lo == hi {
        return Err(Error::DegenerateSample("all samples are equal".into()));
    }
    let edges = equal_width_edges(lo, hi, bins);
    let counts = bin_counts(&edges, samples);
    let m = samples.len() as f64;
    let densities = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, e)| c as f64 / (m * (e[1] - e[0])))
        .collect();
    Ok(HistogramFit { edges, densities, m: samples.len() })
}

impl DensityModel for HistogramFit {
    fn log_density(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::NotANumber("log_density"));
        }
        let d = self.bin_of(x).map_or(0.0, |b| self.densities[b]);
        Ok(if d > 0.0 { d.ln() } else { DENSITY_FLOOR.ln() })
    }

    fn cdf(&self, x: f64) -> f64 {
        if x < self.edges[0] {
            return 0.0;
        }
        let mut acc = 0.0;
        for (d, e) in self.densities.iter().zip(self.edges.windows(2)) {
            if x < e[1] {
                return acc + d * (x - e[0]);
            }
            acc += d * (e[1] - e[0]);
        }
        acc
    }
}

pub(crate) fn min_max(samples: &[f64]) -> (f64, f64) {
    samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Linear-interpolation sample quantile of sorted data (R type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Freedman-Diaconis bin count, clamped to `[10, 200]`. A zero IQR gives 200.
pub fn default_bins(samples: &[f64]) -> usize {
    const MIN_BINS: usize = 10;
    const MAX_BINS: usize = 200;
    if samples.len() < 2 {
        return MIN_BINS;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let range = sorted[sorted.len() - 1] - sorted[0];
    if iqr <= 0.0 {
        return MAX_BINS;
    }
    let h = 2.0 * iqr / (samples.len() as f64).cbrt();
    ((range / h).ceil() as usize).clamp(MIN_BINS, MAX_BINS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Xoshiro256PlusPlus;
    use proptest::prelude::*;

    pub(crate) fn normal_draws(rng: &mut Xoshiro256PlusPlus, m: usize, mu: f64, sigma: f64) -> Vec<f64> {
        // Box-Muller
        let mut out = Vec::with_capacity(m);
        while out.len() < m {
            let u1 = 1.0 - rng.next_f64();
            let u2 = rng.next_f64();
            let r = (-2.0 * u1.ln()).sqrt();
            out.push(mu + sigma * r * (2.0 * std::f64::consts::PI * u2).cos());
            out.push(mu + sigma * r * (2.0 * std::f64::consts::PI * u2).sin());
        }
        out.truncate(m);
        out
    }

    #[test]
    fn gaussian_fit_examples() {
        let g = fit_gaussian(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((g.mu, g.sigma, g.m), (2.0, 1.0, 3));
        assert!(matches!(fit_gaussian(&[5.0, 5.0]), Err(Error::DegenerateSample(_))));
        assert!(matches!(fit_gaussian(&[5.0]), Err(Error::DegenerateSample(_))));
        assert_eq!(fit_gaussian(&[-0.7, 0.7]).unwrap().mu, 0.0);
    }

    #[test]
    fn gaussian_fit_recovers_parameters() {
        let mut r = Xoshiro256PlusPlus::seed_from_u64(17);
        let xs = normal_draws(&mut r, 100_000, 3.0, 0.5);
        let g = fit_gaussian(&xs).unwrap();
        assert!((g.mu - 3.0).abs() < 0.01);
        assert!((g.sigma - 0.5).abs() < 0.01);
    }

    #[test]
    fn gaussian_log_density_at_mode() {
        let g = GaussianFit::new(0.0, 1.0, 10).unwrap();
        assert!((g.log_density(0.0).unwrap() + 0.918_938_5).abs() < 1e-7);
        assert!((g.log_density(0.0).unwrap() - (1.0 / (2.0 * std::f64::consts::PI).sqrt()).ln()).abs() < 1e-15);
        assert!(g.log_density(f64::NAN).is_err());
        assert!((g.cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((g.cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-10);
    }

    #[test]
    fn histogram_examples() {
        let h = fit_histogram(&[0.0, 1.0], 2).unwrap();
        assert_eq!(h.bins(), 2);
        assert!(h.densities.iter().all(|d| (d - 1.0).abs() < 1e-8));
        assert_eq!(h.edges[0], 0.0);
        assert!((h.edges[1] - 0.5).abs() < 1e-8);
        assert!((h.log_density(0.25).unwrap()).abs() < 1e-8);
        assert_eq!(h.log_density(-0.1).unwrap(), DENSITY_FLOOR.ln());
        assert_eq!(h.log_density(1.5).unwrap(), DENSITY_FLOOR.ln());
        assert_eq!(h.bin_of(1.0), Some(1));

        let h = fit_histogram(&[0.0, 0.0, 0.0, 1.0], 2).unwrap();
        assert!((h.densities[0] - 1.5).abs() < 1e-8);
        assert!((h.densities[1] - 0.5).abs() < 1e-8);

        assert!(matches!(fit_histogram(&[2.0, 2.0, 2.0], 4), Err(Error::DegenerateSample(_))));
        assert!(fit_histogram(&[1.0, 2.0], 0).is_err());
    }

    #[test]
    fn empty_bin_uses_floor() {
        let h = fit_histogram(&[0.0, 0.1, 0.9, 1.0], 10).unwrap();
        assert_eq!(h.log_density(0.5).unwrap(), DENSITY_FLOOR.ln());
    }

    #[test]
    fn histogram_cdf_is_piecewise_linear() {
        let h = fit_histogram(&[0.0, 0.0, 0.0, 1.0], 2).unwrap();
        assert_eq!(h.cdf(-1.0), 0.0);
        assert!((h.cdf(0.25) - 0.375).abs() < 1e-8);
        assert!((h.cdf(2.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn default_bins_clamped() {
        let mut r = Xoshiro256PlusPlus::seed_from_u64(4);
        let xs = normal_draws(&mut r, 4000, 0.0, 1.0);
        let b = default_bins(&xs);
        // FD for 4000 normals: range ~7.3 sigma, h ~ 2*1.35/15.9 ~ 0.17 -> ~43 bins
        assert!((30..=60).contains(&b), "{b}");
        assert_eq!(default_bins(&[1.0, 1.0, 1.0, 1.0, 2.0]), 200);
        assert_eq!(default_bins(&[1.0, 2.0]), 10);
    }

    #[test]
    fn labels() {
        assert_eq!("gaussian".parse::<Estimator>().unwrap(), Estimator::Gaussian);
        assert_eq!("histogram".parse::<Estimator>().unwrap(), Estimator::Histogram);
        assert!("kde".parse::<Estimator>().is_err());
    }

    proptest! {
        #[test]
        fn histogram_integrates_to_one(xs in prop::collection::vec(-1e3f64..1e3, 2..300), bins in 1usize..150) {
            if let Ok(h) = fit_histogram(&xs, bins) {
                prop_assert!((h.integral() - 1.0).abs() <= 1e-12);
                let inside: usize = xs.iter().filter(|&&x| h.bin_of(x).is_some()).count();
                prop_assert_eq!(inside, xs.len());
            }
        }
    }
}
