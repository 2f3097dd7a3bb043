//! Time-series representation, anti-aliased decimation, windowing,
//! derivatives, and the shared statistics kernel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fir;

/// Window length used throughout the pipeline, in seconds.
pub const DEFAULT_WIN_SEC: f64 = 5.0;
/// Histogram bins for the Shannon-entropy estimator.
pub const DEFAULT_ENTROPY_BINS: usize = 16;

const ZERO_VAR_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Target,
    Reference,
}

impl std::fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChannelKind::Target => write!(f, "target"),
            ChannelKind::Reference => write!(f, "reference"),
        }
    }
}

/// Uniformly sampled EDA channel in microsiemens. Sample `k` sits at time
/// `t0 + k / fs`.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub samples: Vec<f64>,
    pub fs: f64,
    pub subject_id: String,
    pub channel: ChannelKind,
    pub t0: f64,
}

impl TimeSeries {
    /// Build a series, rejecting non-positive sampling rates and any
    /// NaN/infinite sample (the diagnostic lists offending indices).
    pub fn new(
        samples: Vec<f64>,
        fs: f64,
        subject_id: impl Into<String>,
        channel: ChannelKind,
        t0: f64,
    ) -> Result<Self> {
        if !(fs > 0.0) {
            return Err(Error::rejected(format!("sampling rate must be > 0, got {fs}")));
        }
        let bad: Vec<usize> = samples
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_finite())
            .map(|(i, _)| i)
            .take(10)
            .collect();
        if !bad.is_empty() {
            return Err(Error::rejected(format!(
                "non-finite samples at indices {bad:?} (first 10 shown)"
            )));
        }
        Ok(TimeSeries {
            samples,
            fs,
            subject_id: subject_id.into(),
            channel,
            t0,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }
}

/// One non-overlapping analysis window cut from a record.
#[derive(Debug, Clone)]
pub struct Window {
    pub subject_id: String,
    pub index: usize,
    pub samples: Vec<f64>,
    pub fs: f64,
    pub start_time: f64,
}

impl Window {
    /// Half-open time span `[start, end)` covered by this window.
    pub fn span(&self) -> (f64, f64) {
        (
            self.start_time,
            self.start_time + self.samples.len() as f64 / self.fs,
        )
    }
}

/// The shared statistics bundle: mean, median, population variance, range,
/// skewness, and histogram Shannon entropy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatBundle {
    pub mean: f64,
    pub median: f64,
    pub variance: f64,
    pub range: f64,
    pub skewness: f64,
    pub shannon_entropy: f64,
}

/// Anti-aliased integer-factor decimation with zero net phase shift.
///
/// The lowpass is a Hamming windowed sinc of `8*M + 1` taps with cutoff
/// `0.4 * target_fs`, applied with group-delay compensation and reflection
/// padding, after which every M-th sample is kept.
pub fn decimate(ts: &TimeSeries, target_fs: f64) -> Result<TimeSeries> {
    if !(target_fs > 0.0) {
        return Err(Error::rejected(format!("target rate must be > 0, got {target_fs}")));
    }
    let ratio = ts.fs / target_fs;
    let m = ratio.round();
    if (ratio - m).abs() > 1e-9 || m < 1.0 {
        return Err(Error::rejected(format!(
            "decimation factor {ratio} is not a positive integer ({} -> {} Hz)",
            ts.fs, target_fs
        )));
    }
    let m = m as usize;
    if m == 1 {
        return Ok(ts.clone());
    }
    let n_taps = 8 * m + 1;
    if ts.samples.len() <= n_taps {
        return Err(Error::rejected(format!(
            "record of {} samples is shorter than the {n_taps}-tap anti-alias filter",
            ts.samples.len()
        )));
    }
    let cutoff = 0.4 * target_fs / ts.fs;
    let taps = fir::lowpass_hamming(n_taps, cutoff);
    let filtered = fir::filt_centered(&taps, &ts.samples)?;
    let samples: Vec<f64> = filtered.iter().step_by(m).copied().collect();
    Ok(TimeSeries {
        samples,
        fs: target_fs,
        subject_id: ts.subject_id.clone(),
        channel: ts.channel,
        t0: ts.t0,
    })
}

/// Cut a record into non-overlapping, contiguous windows of `win_sec`
/// seconds; a trailing partial window is dropped.
pub fn segment(ts: &TimeSeries, win_sec: f64) -> Result<Vec<Window>> {
    if !(win_sec > 0.0) {
        return Err(Error::rejected(format!("window length must be > 0, got {win_sec}")));
    }
    let per = ts.fs * win_sec;
    if (per - per.round()).abs() > 1e-9 {
        return Err(Error::rejected(format!(
            "fs * win_sec = {per} is not an integer sample count"
        )));
    }
    let per = per.round() as usize;
    let n_windows = ts.samples.len() / per;
    let mut out = Vec::with_capacity(n_windows);
    for index in 0..n_windows {
        out.push(Window {
            subject_id: ts.subject_id.clone(),
            index,
            samples: ts.samples[index * per..(index + 1) * per].to_vec(),
            fs: ts.fs,
            start_time: ts.t0 + index as f64 * win_sec,
        });
    }
    Ok(out)
}

/// First or second finite difference scaled to physical units (µS/s, µS/s²).
pub fn derivative(samples: &[f64], fs: f64, order: u8) -> Result<Vec<f64>> {
    if order != 1 && order != 2 {
        return Err(Error::rejected(format!("derivative order must be 1 or 2, got {order}")));
    }
    if samples.len() < order as usize + 1 {
        return Err(Error::rejected(format!(
            "need at least {} samples for order-{order} derivative, got {}",
            order + 1,
            samples.len()
        )));
    }
    let d1: Vec<f64> = samples.windows(2).map(|w| (w[1] - w[0]) * fs).collect();
    if order == 1 {
        return Ok(d1);
    }
    Ok(d1.windows(2).map(|w| (w[1] - w[0]) * fs).collect())
}

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Population (biased) variance.
pub fn population_variance(samples: &[f64]) -> f64 {
    let m = mean(samples);
    samples.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / samples.len() as f64
}

/// Median; even lengths take the mean of the two central order statistics.
pub fn median(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Shannon entropy (bits) of an equal-width histogram over the sample range.
/// A constant input has zero entropy.
pub fn shannon_entropy(samples: &[f64], n_bins: usize) -> f64 {
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = hi - lo;
    if width <= 0.0 {
        return 0.0;
    }
    let mut counts = vec![0usize; n_bins];
    for v in samples {
        let mut bin = ((v - lo) / width * n_bins as f64) as usize;
        if bin >= n_bins {
            bin = n_bins - 1;
        }
        counts[bin] += 1;
    }
    let n = samples.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// The shared statistics kernel.
pub fn stats(samples: &[f64], n_bins: usize) -> Result<StatBundle> {
    if samples.is_empty() {
        return Err(Error::rejected("stats of an empty sequence"));
    }
    if n_bins == 0 {
        return Err(Error::rejected("entropy histogram needs at least one bin"));
    }
    let m = mean(samples);
    let n = samples.len() as f64;
    let m2 = samples.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    let m3 = samples.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n;
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let skewness = if m2 < ZERO_VAR_EPS { 0.0 } else { m3 / m2.powf(1.5) };
    Ok(StatBundle {
        mean: m,
        median: median(samples),
        variance: m2,
        range: hi - lo,
        skewness,
        shannon_entropy: shannon_entropy(samples, n_bins),
    })
}
