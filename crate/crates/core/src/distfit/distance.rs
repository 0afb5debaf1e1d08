use statrs::function::erf::erfc_inv;

use super::{bin_counts, check_samples, equal_width_edges, min_max, normal_cdf, normal_pdf, DensityModel, GaussianFit};
use crate::error::{Error, Result};

/// Total variation between the empirical histogram of `samples` on `bins`
/// equal-width bins and `fit` integrated over the same bins.
///
/// Mass of `fit` outside the binned range counts fully towards the distance.
/// The value depends on the bin count.
pub fn tv_distance(samples: &[f64], fit: &dyn DensityModel, bins: usize) -> Result<f64> {
    check_samples(samples, 2)?;
    if bins == 0 {
        return Err(Error::InvalidParameter("tv_distance needs at least one bin".into()));
    }
    let (mut lo, mut hi) = min_max(samples);
    if lo == hi {
        // point mass: give it a narrow bin of its own
        let half = 1e-6 * lo.abs().max(1e-12);
        lo -= half;
        hi += half;
    }
    let edges = equal_width_edges(lo, hi, bins);
    let counts = bin_counts(&edges, samples);
    let m = samples.len() as f64;
    let cdfs: Vec<f64> = edges.iter().map(|&e| fit.cdf(e)).collect();
    let inside: f64 = counts
        .iter()
        .zip(cdfs.windows(2))
        .map(|(&c, f)| (c as f64 / m - (f[1] - f[0])).abs())
        .sum();
    let outside = (cdfs[0] + (1.0 - cdfs[bins])).max(0.0);
    Ok((0.5 * (inside + outside)).clamp(0.0, 1.0))
}

/// Wasserstein-1 distance between the empirical distribution of `samples` and
/// `fit`, integrating the absolute difference of the quantile functions.
pub fn wasserstein_distance(samples: &[f64], fit: &GaussianFit) -> Result<f64> {
    check_samples(samples, 2)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let (mu, sigma) = (fit.mu, fit.sigma);

    // pdf(Phi^-1(u)); zero at u = 0 and u = 1
    let pdf_at_quantile = |u: f64| {
        if u <= 0.0 || u >= 1.0 {
            0.0
        } else {
            normal_pdf(-std::f64::consts::SQRT_2 * erfc_inv(2.0 * u))
        }
    };
    // integral of the Gaussian quantile function over [a, b], given
    // pdf(Phi^-1(a)) and pdf(Phi^-1(b))
    let quantile_integral = |a: f64, b: f64, pa: f64, pb: f64| mu * (b - a) - sigma * (pb - pa);

    let mut total = 0.0;
    let mut a = 0.0;
    let mut pa = 0.0;
    for (k, &c) in sorted.iter().enumerate() {
        let b = (k + 1) as f64 / m as f64;
        let pb = if k + 1 == m { 0.0 } else { pdf_at_quantile(b) };
        let zc = (c - mu) / sigma;
        let uc = normal_cdf(zc);
        let (split, ps) = if uc <= a {
            (a, pa)
        } else if uc >= b {
            (b, pb)
        } else {
            (uc, normal_pdf(zc))
        };
        let below = c * (split - a) - quantile_integral(a, split, pa, ps);
        let above = quantile_integral(split, b, ps, pb) - c * (b - split);
        total += below.max(0.0) + above.max(0.0);
        a = b;
        pa = pb;
    }
    Ok(total)
}
