//! Scalar spike-train statistics: spike frequency and the method-of-moments
//! Gamma shape of the inter-spike interval distribution.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StatisticKind {
    SpikeFreq,
    GammaAlpha,
}

impl StatisticKind {
    pub fn label(self) -> &'static str {
        match self {
            StatisticKind::SpikeFreq => "spikefreq",
            StatisticKind::GammaAlpha => "alpha",
        }
    }
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "spikefreq" => Ok(StatisticKind::SpikeFreq),
            "alpha" => Ok(StatisticKind::GammaAlpha),
            other => Err(Error::Parse(format!("unknown statistic kind `{other}` (expected spikefreq or alpha)"))),
        }
    }
}

/// Inter-spike intervals in time steps; every interval is at least 1.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IsiSample {
    pub intervals: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaMoments {
    /// shape
    pub alpha: f64,
    /// rate
    pub beta: f64,
}

pub fn spike_frequency(spike_times: &[u32], horizon: u64) -> f64 {
    spike_times.len() as f64 / horizon as f64
}

pub fn extract_isis(spike_times: &[u32]) -> IsiSample {
    IsiSample {
        intervals: spike_times.windows(2).map(|w| u64::from(w[1] - w[0])).collect(),
    }
}

/// Moment estimates `alpha = mean^2 / var`, `beta = mean / var`, with the
/// unbiased (m - 1) variance.
pub fn gamma_moments(isis: &IsiSample) -> Result<GammaMoments> {
    let m = isis.intervals.len();
    if m < 2 {
        return Err(Error::InsufficientSpikes);
    }
    let mean = isis.intervals.iter().map(|&x| x as f64).sum::<f64>() / m as f64;
    let ss: f64 = isis.intervals.iter().map(|&x| (x as f64 - mean).powi(2)).sum();
    let var = ss / (m - 1) as f64;
    if var <= 0.0 {
        return Err(Error::DegenerateIsi);
    }
    Ok(GammaMoments { alpha: mean * mean / var, beta: mean / var })
}

pub fn compute_statistic(kind: StatisticKind, spike_times: &[u32], horizon: u64) -> Result<f64> {
    match kind {
        StatisticKind::SpikeFreq => Ok(spike_frequency(spike_times, horizon)),
        StatisticKind::GammaAlpha => gamma_moments(&extract_isis(spike_times)).map(|g| g.alpha),
    }
}

/// Streaming accumulator of one neuron's spike train, sufficient for both
/// statistics without storing spike times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SpikeSummary {
    pub count: u64,
    pub last: u64,
    pub isi_sum: u64,
    pub isi_sumsq: u128,
}

impl SpikeSummary {
    #[inline]
    pub fn record(&mut self, t: u64) {
        if self.count > 0 {
            let isi = t - self.last;
            self.isi_sum += isi;
            self.isi_sumsq += u128::from(isi) * u128::from(isi);
        }
        self.count += 1;
        self.last = t;
    }

    pub fn from_times(spike_times: &[u32]) -> Self {
        let mut s = Self::default();
        for &t in spike_times {
            s.record(u64::from(t));
        }
        s
    }

    pub fn spike_frequency(&self, horizon: u64) -> f64 {
        self.count as f64 / horizon as f64
    }

    /// Same estimator as [`gamma_moments`], evaluated from exact integer
    /// power sums.
    pub fn gamma_moments(&self) -> Result<GammaMoments> {
        if self.count < 3 {
            return Err(Error::InsufficientSpikes);
        }
        let m = u128::from(self.count - 1);
        let s = u128::from(self.isi_sum);
        // m * sum(x^2) - (sum x)^2 = m (m - 1) var
        let scaled = m * self.isi_sumsq - s * s;
        if scaled == 0 {
            return Err(Error::DegenerateIsi);
        }
        let mf = m as f64;
        let mean = s as f64 / mf;
        let var = scaled as f64 / (mf * (mf - 1.0));
        Ok(GammaMoments { alpha: mean * mean / var, beta: mean / var })
    }

    pub fn statistic(&self, kind: StatisticKind, horizon: u64) -> Result<f64> {
        match kind {
            StatisticKind::SpikeFreq => Ok(self.spike_frequency(horizon)),
            StatisticKind::GammaAlpha => self.gamma_moments().map(|g| g.alpha),
        }
    }
}
