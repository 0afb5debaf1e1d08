//! Empirical checks of the independence and Gaussianity assumptions behind
//! the product likelihood.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::gamma_lr;

use crate::distfit::mean_var;
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, PostAdjacency};
use crate::rng::Xoshiro256PlusPlus;
use crate::stats::{SpikeSummary, StatisticKind};

/// Attempts per pair before giving up on finding two computable statistics.
pub const PAIR_RETRY_CAP: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairSampleMode {
    /// Two distinct neurons chosen uniformly.
    Random,
    /// A neuron with at least one outgoing synapse, and one of its targets.
    PostSynaptic,
}

impl PairSampleMode {
    pub fn label(self) -> &'static str {
        match self {
            PairSampleMode::Random => "random",
            PairSampleMode::PostSynaptic => "post_synaptic",
        }
    }
}

impl fmt::Display for PairSampleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PairSampleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(PairSampleMode::Random),
            "post_synaptic" | "postsynaptic" => Ok(PairSampleMode::PostSynaptic),
            other => Err(Error::Parse(format!("unknown pair mode `{other}`"))),
        }
    }
}

/// Draws pairs of per-neuron statistics from one simulated network.
#[derive(Debug, Clone)]
pub struct PairSampler<'a> {
    summaries: &'a [SpikeSummary],
    kind: StatisticKind,
    horizon: u64,
    post: PostAdjacency,
    with_targets: Vec<usize>,
}

impl<'a> PairSampler<'a> {
    pub fn new(g: &DirectedGraph, summaries: &'a [SpikeSummary], kind: StatisticKind, horizon: u64) -> Result<Self> {
        if summaries.len() != g.n() || g.n() < 2 {
            return Err(Error::InvalidParameter(format!(
                "need one summary per neuron of a graph with at least two neurons (got {} for n={})",
                summaries.len(),
                g.n()
            )));
        }
        let post = g.postsynaptic();
        let with_targets = (0..g.n()).filter(|&j| !post.post(j).is_empty()).collect();
        Ok(Self { summaries, kind, horizon, post, with_targets })
    }

    fn draw_indices(&self, mode: PairSampleMode, rng: &mut Xoshiro256PlusPlus) -> Result<(usize, usize)> {
        let n = self.summaries.len() as u64;
        match mode {
            PairSampleMode::Random => {
                let i = rng.next_below(n);
                let mut j = rng.next_below(n - 1);
                if j >= i {
                    j += 1;
                }
                Ok((i as usize, j as usize))
            }
            PairSampleMode::PostSynaptic => {
                if self.with_targets.is_empty() {
                    return Err(Error::NoEdges);
                }
                let i = self.with_targets[rng.next_below(self.with_targets.len() as u64) as usize];
                let targets = self.post.post(i);
                let j = targets[rng.next_below(targets.len() as u64) as usize] as usize;
                Ok((i, j))
            }
        }
    }

    /// Indices and statistics of one pair. Pairs with an uncomputable
    /// statistic are redrawn, up to [`PAIR_RETRY_CAP`] attempts.
    pub fn sample_indexed(
        &self,
        mode: PairSampleMode,
        rng: &mut Xoshiro256PlusPlus,
    ) -> Result<((usize, usize), (f64, f64))> {
        for _ in 0..PAIR_RETRY_CAP {
            let (i, j) = self.draw_indices(mode, rng)?;
            let a = self.summaries[i].statistic(self.kind, self.horizon);
            let b = self.summaries[j].statistic(self.kind, self.horizon);
            match (a, b) {
                (Ok(a), Ok(b)) => return Ok(((i, j), (a, b))),
                (Err(e), _) | (_, Err(e)) if !matches!(e, Error::InsufficientSpikes | Error::DegenerateIsi) => {
                    return Err(e)
                }
                _ => {}
            }
        }
        Err(Error::RetriesExhausted(PAIR_RETRY_CAP))
    }

    pub fn sample(&self, mode: PairSampleMode, rng: &mut Xoshiro256PlusPlus) -> Result<(f64, f64)> {
        self.sample_indexed(mode, rng).map(|(_, v)| v)
    }
}

/// One pair of statistics `(phi(Y_i), phi(Y_j))` from a simulated network.
pub fn sample_statistic_pair(
    g: &DirectedGraph,
    summaries: &[SpikeSummary],
    kind: StatisticKind,
    horizon: u64,
    mode: PairSampleMode,
    rng: &mut Xoshiro256PlusPlus,
) -> Result<(f64, f64)> {
    PairSampler::new(g, summaries, kind, horizon)?.sample(mode, rng)
}

/// Pearson sample correlation.
pub fn correlation(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(Error::DegenerateSample("correlation needs at least two pairs".into()));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (mx, _) = mean_var(&xs);
    let (my, _) = mean_var(&ys);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if !(sxx > 0.0 && syy > 0.0) {
        return Err(Error::DegenerateSample("correlation of a constant coordinate".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Squared Mahalanobis distance of every vector to the sample mean, under the
/// unbiased sample covariance.
pub fn mahalanobis_sq(vectors: &[Vec<f64>]) -> Result<Vec<f64>> {
    let m = vectors.len();
    let s = vectors.first().map_or(0, Vec::len);
    if s == 0 || vectors.iter().any(|v| v.len() != s) {
        return Err(Error::InvalidParameter("vectors must be non-empty and of equal dimension".into()));
    }
    if m < s + 2 {
        return Err(Error::DegenerateSample(format!("need at least {} vectors of dimension {s}, got {m}", s + 2)));
    }
    let data = DMatrix::from_fn(m, s, |r, c| vectors[r][c]);
    let mean: DVector<f64> = data.row_mean().transpose();
    let centered = DMatrix::from_fn(m, s, |r, c| data[(r, c)] - mean[c]);
    let cov = centered.transpose() * &centered / (m as f64 - 1.0);
    let chol = cov.cholesky().ok_or(Error::SingularCovariance)?;
    // rows of L^-1 (x - mean)^T have squared norm d^2
    let solved = chol.l().solve_lower_triangular(&centered.transpose()).ok_or(Error::SingularCovariance)?;
    let d2: Vec<f64> = solved.column_iter().map(|c| c.norm_squared()).collect();
    if d2.iter().any(|d| !d.is_finite()) {
        return Err(Error::SingularCovariance);
    }
    Ok(d2)
}

/// Sorted samples paired with theoretical quantiles at `(k - 0.5) / m`.
#[derive(Debug, Clone, PartialEq)]
pub struct QqData {
    pub points: Vec<(f64, f64)>,
}

pub fn qq_data<F>(samples: &[f64], theoretical_quantile: F) -> Result<QqData>
where
    F: Fn(f64) -> Result<f64>,
{
    let m = samples.len();
    if m < 2 {
        return Err(Error::DegenerateSample("Q-Q data needs at least two samples".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::NotANumber("qq_data"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let points = sorted
        .into_iter()
        .enumerate()
        .map(|(k, x)| Ok((x, theoretical_quantile((k as f64 + 0.5) / m as f64)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(QqData { points })
}

/// Least-squares slope of empirical on theoretical quantiles.
pub fn qq_slope(qq: &QqData) -> Result<f64> {
    let xs: Vec<f64> = qq.points.iter().map(|p| p.1).collect();
    let ys: Vec<f64> = qq.points.iter().map(|p| p.0).collect();
    let (mx, vx) = mean_var(&xs);
    let (my, _) = mean_var(&ys);
    if !(vx > 0.0) {
        return Err(Error::DegenerateSample("constant theoretical quantiles".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / (vx * (xs.len() as f64 - 1.0)))
}

/// CDF of chi-squared with `dof` degrees of freedom.
pub fn chi2_cdf(x: f64, dof: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(0.5 * dof, 0.5 * x)
    }
}

/// Quantile of chi-squared with `dof` degrees of freedom, solved to relative
/// tolerance 1e-10 by bracketed bisection on the regularized lower
/// incomplete gamma function.
pub fn chi2_quantile(prob: f64, dof: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidParameter(format!("probability must lie in (0, 1), got {prob}")));
    }
    if !(dof > 0.0 && dof.is_finite()) {
        return Err(Error::InvalidParameter(format!("degrees of freedom must be positive, got {dof}")));
    }
    let mut hi = dof.max(1.0);
    while chi2_cdf(hi, dof) < prob {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 * hi || mid == lo || mid == hi {
            break;
        }
        if chi2_cdf(mid, dof) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DirectedGraph;
    use proptest::prelude::*;

    fn rng(seed: u64) -> Xoshiro256PlusPlus {
        Xoshiro256PlusPlus::seed_from_u64(seed)
    }

    fn normal(r: &mut Xoshiro256PlusPlus) -> f64 {
        let u1 = 1.0 - r.next_f64();
        let u2 = r.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    fn summaries_with_counts(counts: &[u64]) -> Vec<SpikeSummary> {
        counts
            .iter()
            .map(|&c| {
                let mut s = SpikeSummary::default();
                for t in 1..=c {
                    s.record(t * t);
                }
                s
            })
            .collect()
    }

    #[test]
    fn chi2_quantile_reference_values() {
        assert!((chi2_quantile(0.95, 1.0).unwrap() - 3.841_458_820_694_124).abs() < 1e-9);
        assert!((chi2_quantile(0.5, 2.0).unwrap() - 2.0 * std::f64::consts::LN_2).abs() < 1e-10);
        assert!((chi2_quantile(0.99, 10.0).unwrap() - 23.209_251_158_954_36).abs() < 1e-8);
        assert!(chi2_quantile(1.0, 1.0).is_err());
        assert!(chi2_quantile(0.5, 0.0).is_err());
    }

    #[test]
    fn postsynaptic_pair_in_complete_pair() {
        let g = DirectedGraph::complete(2, 0.01).unwrap();
        let sums = summaries_with_counts(&[5, 7]);
        let sampler = PairSampler::new(&g, &sums, StatisticKind::SpikeFreq, 100).unwrap();
        let mut r = rng(1);
        for _ in 0..100 {
            let ((i, j), _) = sampler.sample_indexed(PairSampleMode::PostSynaptic, &mut r).unwrap();
            assert_eq!(i + j, 1);
        }
    }

    #[test]
    fn random_pairs_are_distinct() {
        let g = DirectedGraph::empty(5, 0.01).unwrap();
        let sums = summaries_with_counts(&[3, 3, 3, 3, 3]);
        let sampler = PairSampler::new(&g, &sums, StatisticKind::SpikeFreq, 100).unwrap();
        let mut r = rng(2);
        for _ in 0..1000 {
            let ((i, j), _) = sampler.sample_indexed(PairSampleMode::Random, &mut r).unwrap();
            assert_ne!(i, j);
        }
        assert!(matches!(sampler.sample(PairSampleMode::PostSynaptic, &mut r), Err(Error::NoEdges)));
    }

    #[test]
    fn uncomputable_statistics_are_resampled_then_capped() {
        let g = DirectedGraph::complete(3, 0.01).unwrap();
        // neuron 0 has a single spike: no ISI moments
        let sums = summaries_with_counts(&[1, 6, 6]);
        let sampler = PairSampler::new(&g, &sums, StatisticKind::GammaAlpha, 100).unwrap();
        let mut r = rng(3);
        for _ in 0..200 {
            let ((i, j), _) = sampler.sample_indexed(PairSampleMode::Random, &mut r).unwrap();
            assert!(i != 0 && j != 0);
        }
        let dead = summaries_with_counts(&[1, 1, 1]);
        let sampler = PairSampler::new(&g, &dead, StatisticKind::GammaAlpha, 100).unwrap();
        assert!(matches!(sampler.sample(PairSampleMode::Random, &mut r), Err(Error::RetriesExhausted(100))));
    }

    #[test]
    fn correlation_examples() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let same: Vec<(f64, f64)> = xs.iter().map(|&x| (x, x)).collect();
        let neg: Vec<(f64, f64)> = xs.iter().map(|&x| (x, -x)).collect();
        assert!((correlation(&same).unwrap() - 1.0).abs() < 1e-15);
        assert!((correlation(&neg).unwrap() + 1.0).abs() < 1e-15);
        assert!(correlation(&[(1.0, 2.0), (1.0, 3.0)]).is_err());
        assert!(correlation(&[(1.0, 2.0)]).is_err());

        let mut r = rng(4);
        let pairs: Vec<(f64, f64)> = (0..10_000).map(|_| (normal(&mut r), normal(&mut r))).collect();
        assert!(correlation(&pairs).unwrap().abs() < 0.04);
    }

    /// Squared distances by explicit inverse via Gauss-Jordan elimination.
    fn mahalanobis_oracle(vectors: &[Vec<f64>]) -> Vec<f64> {
        let m = vectors.len();
        let s = vectors[0].len();
        let mean: Vec<f64> = (0..s).map(|c| vectors.iter().map(|v| v[c]).sum::<f64>() / m as f64).collect();
        let mut a = vec![vec![0.0; 2 * s]; s];
        for r in 0..s {
            for c in 0..s {
                a[r][c] = vectors.iter().map(|v| (v[r] - mean[r]) * (v[c] - mean[c])).sum::<f64>() / (m as f64 - 1.0);
            }
            a[r][s + r] = 1.0;
        }
        for col in 0..s {
            let piv = (col..s).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
            a.swap(col, piv);
            let d = a[col][col];
            for v in a[col].iter_mut() {
                *v /= d;
            }
            for r in 0..s {
                if r != col {
                    let f = a[r][col];
                    let pivot_row = a[col].clone();
                    for (v, p) in a[r].iter_mut().zip(pivot_row) {
                        *v -= f * p;
                    }
                }
            }
        }
        vectors
            .iter()
            .map(|v| {
                let d: Vec<f64> = (0..s).map(|c| v[c] - mean[c]).collect();
                (0..s).map(|r| (0..s).map(|c| d[r] * a[r][s + c] * d[c]).sum::<f64>()).sum()
            })
            .collect()
    }

    #[test]
    fn mahalanobis_matches_explicit_inverse() {
        let mut r = rng(5);
        let vectors: Vec<Vec<f64>> = (0..40)
            .map(|_| {
                let z: Vec<f64> = (0..4).map(|_| normal(&mut r)).collect();
                vec![z[0], z[0] + 0.5 * z[1], 2.0 * z[2] - z[1], z[3] + 3.0]
            })
            .collect();
        let d2 = mahalanobis_sq(&vectors).unwrap();
        for (a, b) in d2.iter().zip(mahalanobis_oracle(&vectors)) {
            assert!((a - b).abs() < 1e-9 * b.max(1.0));
        }
    }

    #[test]
    fn mahalanobis_edge_cases() {
        // vector at the mean
        let vectors = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0], vec![0.0, 0.0]];
        assert!(mahalanobis_sq(&vectors).unwrap()[4].abs() < 1e-15);
        let collinear: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        assert!(matches!(mahalanobis_sq(&collinear), Err(Error::SingularCovariance)));
        assert!(mahalanobis_sq(&[vec![1.0], vec![2.0]]).is_err());
    }

    #[test]
    fn mahalanobis_calibrated_against_chi2() {
        let mut r = rng(6);
        let vectors: Vec<Vec<f64>> = (0..10_000).map(|_| (0..10).map(|_| normal(&mut r)).collect()).collect();
        let d2 = mahalanobis_sq(&vectors).unwrap();
        let qq = qq_data(&d2, |u| chi2_quantile(u, 10.0)).unwrap();
        let slope = qq_slope(&qq).unwrap();
        assert!((0.95..=1.05).contains(&slope), "{slope}");
    }

    #[test]
    fn qq_examples() {
        let qq = qq_data(&[3.0, 3.0, 3.0], |u| Ok(u)).unwrap();
        assert!(qq.points.iter().all(|p| p.0 == 3.0));
        assert_eq!(qq.points.iter().map(|p| p.1).collect::<Vec<_>>(), vec![1.0 / 6.0, 0.5, 5.0 / 6.0]);
        assert!(qq_data(&[1.0], |u| Ok(u)).is_err());

        let mut r = rng(7);
        let xs: Vec<f64> = (0..20_000).map(|_| r.next_f64()).collect();
        let qq = qq_data(&xs, |u| Ok(u)).unwrap();
        let dev = qq.points.iter().map(|p| (p.0 - p.1).abs()).fold(0.0, f64::max);
        assert!(dev < 0.02, "{dev}");
    }

    proptest! {
        #[test]
        fn correlation_symmetric_and_scale_invariant(
            pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..40),
            a in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], b in -5.0f64..5.0,
            c in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], d in -5.0f64..5.0,
        ) {
            let Ok(r) = correlation(&pairs) else { return Ok(()) };
            let swapped: Vec<(f64, f64)> = pairs.iter().map(|&(x, y)| (y, x)).collect();
            prop_assert!((correlation(&swapped).unwrap() - r).abs() < 1e-12);
            let moved: Vec<(f64, f64)> = pairs.iter().map(|&(x, y)| (a * x + b, c * y + d)).collect();
            let sign = (a * c).signum();
            prop_assert!((correlation(&moved).unwrap() - sign * r).abs() < 1e-10);
        }

        #[test]
        fn mahalanobis_sum_identity(seed in any::<u64>(), s in 1usize..6, extra in 2usize..30) {
            let mut r = rng(seed);
            let m = s + extra;
            let vectors: Vec<Vec<f64>> = (0..m).map(|_| (0..s).map(|_| normal(&mut r)).collect()).collect();
            let d2 = mahalanobis_sq(&vectors).unwrap();
            let total: f64 = d2.iter().sum();
            let expected = ((m - 1) * s) as f64;
            prop_assert!((total - expected).abs() <= 1e-8 * expected);
            prop_assert!(d2.iter().all(|&d| d >= 0.0));
        }

        #[test]
        fn qq_coordinates_non_decreasing(xs in prop::collection::vec(-1e3f64..1e3, 2..100)) {
            let qq = qq_data(&xs, |u| chi2_quantile(u, 3.0)).unwrap();
            prop_assert!(qq.points.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
        }
    }
}
