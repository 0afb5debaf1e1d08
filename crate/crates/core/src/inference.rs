//! Estimation of the connection probability from an observed vector of
//! per-neuron statistics, using a sampling-distribution table as a
//! pseudo-likelihood.

use std::fmt;

use statrs::function::factorial::ln_binomial;

use crate::diagnostics::chi2_quantile;
use crate::distfit::{Estimator, SamplingDistributionTable};
use crate::error::{Error, Result};
use crate::stats::StatisticKind;

/// Statistics of `s` observed neurons.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub kind: StatisticKind,
    pub values: Vec<f64>,
}

impl Observation {
    pub fn new(kind: StatisticKind, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("observation needs at least one value".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("observation values must be finite".into()));
        }
        Ok(Self { kind, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Which curve the three-point parabola is fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    /// Likelihood values, rescaled by the peak. Default.
    #[default]
    Likelihood,
    /// Log-likelihood values. Non-default variant.
    LogLikelihood,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EstimateFlags {
    /// Argmax at a grid endpoint; no interpolation was done.
    pub boundary: bool,
    /// The three interpolation points were collinear.
    pub degenerate: bool,
    /// The confidence interval reached the edge of the grid.
    pub clipped: bool,
}

impl fmt::Display for EstimateFlags {
    /// `|`-separated flag names, or `none`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [(self.boundary, "boundary"), (self.degenerate, "degenerate"), (self.clipped, "clipped")]
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, name)| *name)
            .collect();
        if names.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&names.join("|"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub p_tilde: f64,
    pub p_tilde_index: usize,
    pub p_hat: f64,
    /// `(p, log-likelihood)` over the table grid.
    pub loglik: Vec<(f64, f64)>,
    pub ci: Option<ConfidenceInterval>,
    /// Variant label such as `spikefreq_gaussian`.
    pub method: String,
    pub flags: EstimateFlags,
}

/// Variant label `<statistic>_<estimator>`, with `_loglik` appended for the
/// log-likelihood interpolation variant.
pub fn variant_label(kind: StatisticKind, estimator: Estimator, interpolation: Interpolation) -> String {
    match interpolation {
        Interpolation::Likelihood => format!("{kind}_{estimator}"),
        Interpolation::LogLikelihood => format!("{kind}_{estimator}_loglik"),
    }
}

fn check_kind(table: &SamplingDistributionTable, obs: &Observation) -> Result<()> {
    if table.kind() != obs.kind {
        return Err(Error::KindMismatch { table: table.kind().to_string(), obs: obs.kind.to_string() });
    }
    Ok(())
}

/// Sum of log densities of the observed values under the fit at grid point
/// `p_index`.
pub fn log_likelihood(
    table: &SamplingDistributionTable,
    p_index: usize,
    obs: &Observation,
    estimator: Estimator,
) -> Result<f64> {
    check_kind(table, obs)?;
    let entry = table
        .entries()
        .get(p_index)
        .ok_or(Error::IndexOutOfRange { index: p_index, n: table.len() })?;
    let density = entry.density(estimator);
    obs.values.iter().map(|&x| density.log_density(x)).sum()
}

/// Log-likelihood at every grid point.
pub fn loglik_curve(table: &SamplingDistributionTable, obs: &Observation, estimator: Estimator) -> Result<Vec<f64>> {
    check_kind(table, obs)?;
    (0..table.len()).map(|i| log_likelihood(table, i, obs, estimator)).collect()
}

/// Index of the largest value; ties go to the smallest index.
pub fn argmax_index(curve: &[f64]) -> usize {
    let mut best = 0;
    for (i, &y) in curve.iter().enumerate().skip(1) {
        if y > curve[best] {
            best = i;
        }
    }
    best
}

pub fn grid_argmax(table: &SamplingDistributionTable, obs: &Observation, estimator: Estimator) -> Result<usize> {
    Ok(argmax_index(&loglik_curve(table, obs, estimator)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticPeak {
    pub x: f64,
    pub degenerate: bool,
}

/// Vertex of the parabola through three points with `x1 < x2 < x3`.
///
/// Collinear points have no vertex; the middle abscissa is returned with the
/// `degenerate` flag set. The result is clamped to `[x1, x3]`.
pub fn quadratic_peak(x1: f64, y1: f64, x2: f64, y2: f64, x3: f64, y3: f64) -> Result<QuadraticPeak> {
    if !(x1 < x2 && x2 < x3) {
        return Err(Error::InvalidParameter(format!("abscissae must increase: {x1}, {x2}, {x3}")));
    }
    if [y1, y2, y3].iter().any(|y| y.is_nan()) {
        return Err(Error::NotANumber("quadratic_peak"));
    }
    let d1 = y1 * (x3 - x2);
    let d2 = y2 * (x3 - x1);
    let d3 = y3 * (x2 - x1);
    let denom = 2.0 * (d1 - d2 + d3);
    if denom == 0.0 || !denom.is_finite() {
        return Ok(QuadraticPeak { x: x2, degenerate: true });
    }
    let x = (d1 * (x2 + x3) - d2 * (x1 + x3) + d3 * (x1 + x2)) / denom;
    Ok(QuadraticPeak { x: x.clamp(x1, x3), degenerate: false })
}

/// Point estimate from a precomputed log-likelihood curve over `grid`.
///
/// The returned estimate carries no confidence interval and an empty method
/// label.
pub fn estimate_from_curve(grid: &[f64], curve: &[f64], interpolation: Interpolation) -> Result<Estimate> {
    if grid.is_empty() || grid.len() != curve.len() {
        return Err(Error::InvalidParameter("grid and curve must be non-empty and of equal length".into()));
    }
    if curve.iter().any(|y| y.is_nan()) {
        return Err(Error::NotANumber("log-likelihood"));
    }
    let k = argmax_index(curve);
    let mut flags = EstimateFlags::default();
    let p_hat = if k == 0 || k + 1 == grid.len() {
        flags.boundary = true;
        grid[k]
    } else {
        let ys = match interpolation {
            Interpolation::Likelihood => {
                let top = curve[k];
                [(curve[k - 1] - top).exp(), 1.0, (curve[k + 1] - top).exp()]
            }
            Interpolation::LogLikelihood => [curve[k - 1], curve[k], curve[k + 1]],
        };
        let peak = quadratic_peak(grid[k - 1], ys[0], grid[k], ys[1], grid[k + 1], ys[2])?;
        flags.degenerate = peak.degenerate;
        peak.x
    };
    Ok(Estimate {
        p_tilde: grid[k],
        p_tilde_index: k,
        p_hat,
        loglik: grid.iter().copied().zip(curve.iter().copied()).collect(),
        ci: None,
        method: String::new(),
        flags,
    })
}

/// Log-likelihood at `p`, linear between grid points. `p` must lie in the
/// grid range.
pub fn interpolate_curve(grid: &[f64], curve: &[f64], p: f64) -> f64 {
    let j = grid.partition_point(|&g| g <= p);
    if j == 0 {
        return curve[0];
    }
    if j == grid.len() {
        return curve[grid.len() - 1];
    }
    let t = (p - grid[j - 1]) / (grid[j] - grid[j - 1]);
    curve[j - 1] + t * (curve[j] - curve[j - 1])
}

/// Likelihood-ratio interval: the connected part of
/// `{p : logL(p) >= logL(p_hat) - x/2}` around `p_hat`, with `x` the
/// `level`-quantile of chi-squared with one degree of freedom. Returns the
/// interval and whether it was clipped at the grid range.
pub fn interval_from_curve(grid: &[f64], curve: &[f64], p_hat: f64, level: f64) -> Result<(ConfidenceInterval, bool)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!("level must lie in (0, 1), got {level}")));
    }
    if grid.is_empty() || grid.len() != curve.len() {
        return Err(Error::InvalidParameter("grid and curve must be non-empty and of equal length".into()));
    }
    let (gmin, gmax) = (grid[0], grid[grid.len() - 1]);
    if !(gmin..=gmax).contains(&p_hat) {
        return Err(Error::InvalidParameter(format!("p_hat {p_hat} outside grid range")));
    }
    let threshold = interpolate_curve(grid, curve, p_hat) - 0.5 * chi2_quantile(level, 1.0)?;
    let mut clipped = false;

    // first grid index strictly right of p_hat
    let right = grid.partition_point(|&g| g <= p_hat);
    let mut hi = gmax;
    let (mut prev_p, mut prev_y) = (p_hat, interpolate_curve(grid, curve, p_hat));
    let mut found = false;
    for j in right..grid.len() {
        if curve[j] < threshold {
            hi = prev_p + (grid[j] - prev_p) * (prev_y - threshold) / (prev_y - curve[j]);
            found = true;
            break;
        }
        (prev_p, prev_y) = (grid[j], curve[j]);
    }
    if !found {
        clipped = true;
    }

    // last grid index strictly left of p_hat
    let left_end = grid.partition_point(|&g| g < p_hat);
    let mut lo = gmin;
    let (mut prev_p, mut prev_y) = (p_hat, interpolate_curve(grid, curve, p_hat));
    found = false;
    for j in (0..left_end).rev() {
        if curve[j] < threshold {
            lo = prev_p - (prev_p - grid[j]) * (prev_y - threshold) / (prev_y - curve[j]);
            found = true;
            break;
        }
        (prev_p, prev_y) = (grid[j], curve[j]);
    }
    if !found {
        clipped = true;
    }
    Ok((ConfidenceInterval { lo: lo.min(p_hat), hi: hi.max(p_hat), level }, clipped))
}

/// Adds a likelihood-ratio interval to `estimate`, updating its flags.
pub fn confidence_interval(estimate: &mut Estimate, level: f64) -> Result<ConfidenceInterval> {
    let grid: Vec<f64> = estimate.loglik.iter().map(|&(p, _)| p).collect();
    let curve: Vec<f64> = estimate.loglik.iter().map(|&(_, y)| y).collect();
    let (ci, clipped) = interval_from_curve(&grid, &curve, estimate.p_hat, level)?;
    estimate.flags.clipped = clipped;
    estimate.ci = Some(ci);
    Ok(ci)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    pub interpolation: Interpolation,
    /// Confidence level of the interval, or `None` for no interval.
    pub level: Option<f64>,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self { interpolation: Interpolation::Likelihood, level: Some(0.95) }
    }
}

/// Grid argmax refined by three-point interpolation, with a 95% interval.
pub fn estimate_p(table: &SamplingDistributionTable, obs: &Observation, estimator: Estimator) -> Result<Estimate> {
    estimate_p_with(table, obs, estimator, EstimateOptions::default())
}

pub fn estimate_p_with(
    table: &SamplingDistributionTable,
    obs: &Observation,
    estimator: Estimator,
    options: EstimateOptions,
) -> Result<Estimate> {
    let curve = loglik_curve(table, obs, estimator)?;
    let mut est = estimate_from_curve(&table.grid(), &curve, options.interpolation)?;
    est.method = variant_label(table.kind(), estimator, options.interpolation);
    if let Some(level) = options.level {
        confidence_interval(&mut est, level)?;
    }
    Ok(est)
}

/// Likelihood-ratio deviance `2 (logL(p_hat) - logL(p0))` on the linearly
/// interpolated curve. Negative when `p0` sits higher on that curve than
/// `p_hat`, which the refinement step allows.
pub fn deviance(estimate: &Estimate, p0: f64) -> Result<f64> {
    let grid: Vec<f64> = estimate.loglik.iter().map(|&(p, _)| p).collect();
    let curve: Vec<f64> = estimate.loglik.iter().map(|&(_, y)| y).collect();
    if !(grid[0]..=grid[grid.len() - 1]).contains(&p0) {
        return Err(Error::InvalidParameter(format!("p0 {p0} outside grid range")));
    }
    Ok(2.0 * (interpolate_curve(&grid, &curve, estimate.p_hat) - interpolate_curve(&grid, &curve, p0)))
}

fn check_baseline_args(s: usize, p: f64) -> Result<()> {
    if s < 2 {
        return Err(Error::InvalidParameter(format!("s must be at least 2, got {s}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// Mean absolute error of the best possible estimator that sees the full
/// subgraph among `s` observed neurons: `N_c / (s(s-1))` with
/// `N_c ~ Binomial(s(s-1), p)`.
pub fn optimal_reconstruction_mae(s: usize, p: f64) -> Result<f64> {
    check_baseline_args(s, p)?;
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    let n = (s * (s - 1)) as u64;
    let nf = n as f64;
    // E|X/N - p| = 2 E[(p - X/N)^+]
    let k_end = ((nf * p).ceil() as u64).min(n);
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let sum: f64 = (0..k_end)
        .map(|k| {
            let kf = k as f64;
            let pmf = (ln_binomial(n, k) + kf * lp + (nf - kf) * lq).exp();
            pmf * (p - kf / nf)
        })
        .sum();
    Ok(2.0 * sum)
}

/// Standard error `sqrt(p(1-p) / (s(s-1)))` of the same estimator.
pub fn optimal_reconstruction_se(s: usize, p: f64) -> Result<f64> {
    check_baseline_args(s, p)?;
    Ok((p * (1.0 - p) / (s * (s - 1)) as f64).sqrt())
}
