//! Fixed-band complex-demodulation decomposition into 12 non-overlapping
//! frequency bands, mode-split reconstruction, and the band-derived window
//! features.
//!
//! Band `i` covers `[(i-1)*B, i*B)` Hz with `B = (fs/2) / n_bands`. Band 1
//! is a direct zero-phase lowpass at cutoff `B`; every other band shifts its
//! center frequency to DC, lowpasses at `B/2`, and remodulates:
//! `2*Re{ LPF(x(t) e^{-j2πf_c t}) e^{+j2πf_c t} }`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::fir;
use crate::signal::{self, TimeSeries};

/// Number of bands used by the pipeline.
pub const DEFAULT_BANDS: usize = 12;
/// Lowpass length used for every band filter (two centered passes).
pub const FILTER_TAPS: usize = 129;
/// Modes carrying the slow EDA dynamics.
pub const LOW_MODES: [usize; 3] = [1, 2, 3];

const RATIO_EPS: f64 = 1e-12;

/// One real band-limited component of a record.
#[derive(Debug, Clone)]
pub struct BandComponent {
    /// 1-based band index.
    pub band_index: usize,
    /// Band interval `[low_hz, high_hz)`.
    pub low_hz: f64,
    pub high_hz: f64,
    pub center_hz: f64,
    pub samples: Vec<f64>,
}

/// All band components of one record, index-ordered.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub source_id: String,
    pub fs: f64,
    pub t0: f64,
    pub channel: crate::signal::ChannelKind,
    pub components: Vec<BandComponent>,
}

/// Statistics of the low/high mode-split reconstructions over one window.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VfcdmFeatures {
    pub mean_low: f64,
    pub var_low: f64,
    pub range_low: f64,
    pub mean_high: f64,
    pub var_high: f64,
    pub range_high: f64,
    pub var_ratio: f64,
    pub mean_ratio: f64,
    pub range_ratio: f64,
}

/// Decompose a full record into `n_bands` components. Bands are filtered
/// independently and may run in parallel; the result is deterministic.
pub fn cdm_decompose(ts: &TimeSeries, n_bands: usize) -> Result<Decomposition> {
    if n_bands == 0 {
        return Err(Error::rejected("need at least one band"));
    }
    if ts.samples.len() < 4 * FILTER_TAPS {
        return Err(Error::rejected(format!(
            "record of {} samples is shorter than 4x the {FILTER_TAPS}-tap band filter",
            ts.samples.len()
        )));
    }
    let band_width = (ts.fs / 2.0) / n_bands as f64;
    let components = exec::map_range(n_bands, |i| {
        let band_index = i + 1;
        let low_hz = i as f64 * band_width;
        let high_hz = low_hz + band_width;
        let center_hz = low_hz + band_width / 2.0;
        let samples = if band_index == 1 {
            // direct lowpass avoids the factor-of-2 distortion of 2*Re{.} at DC
            let taps = fir::lowpass_hamming(FILTER_TAPS, band_width / ts.fs);
            fir::filt_zero_phase_twice(&taps, &ts.samples)
        } else {
            demodulated_band(&ts.samples, ts.fs, center_hz, band_width / 2.0)
        };
        samples.map(|samples| BandComponent {
            band_index,
            low_hz,
            high_hz,
            center_hz,
            samples,
        })
    });
    let components: Vec<BandComponent> = components.into_iter().collect::<Result<_>>()?;
    Ok(Decomposition {
        source_id: ts.subject_id.clone(),
        fs: ts.fs,
        t0: ts.t0,
        channel: ts.channel,
        components,
    })
}

fn demodulated_band(x: &[f64], fs: f64, center_hz: f64, cutoff_hz: f64) -> Result<Vec<f64>> {
    let taps = fir::lowpass_hamming(FILTER_TAPS, cutoff_hz / fs);
    let w = 2.0 * std::f64::consts::PI * center_hz / fs;
    let mut re = Vec::with_capacity(x.len());
    let mut im = Vec::with_capacity(x.len());
    for (k, v) in x.iter().enumerate() {
        let phase = w * k as f64;
        re.push(v * phase.cos());
        im.push(-v * phase.sin());
    }
    let re = fir::filt_zero_phase_twice(&taps, &re)?;
    let im = fir::filt_zero_phase_twice(&taps, &im)?;
    let out = (0..x.len())
        .map(|k| {
            let phase = w * k as f64;
            2.0 * (re[k] * phase.cos() - im[k] * phase.sin())
        })
        .collect();
    Ok(out)
}

/// Pointwise sum of the selected modes. `mode_set` entries are 1-based band
/// indices; duplicates collapse.
pub fn reconstruct(d: &Decomposition, mode_set: &[usize]) -> Result<TimeSeries> {
    let modes: BTreeSet<usize> = mode_set.iter().copied().collect();
    if modes.is_empty() {
        return Err(Error::rejected("empty mode set"));
    }
    if let Some(bad) = modes
        .iter()
        .find(|&&m| m == 0 || m > d.components.len())
    {
        return Err(Error::rejected(format!(
            "mode {bad} out of range 1..={}",
            d.components.len()
        )));
    }
    let n = d.components[0].samples.len();
    let mut samples = vec![0.0; n];
    for m in &modes {
        for (acc, v) in samples.iter_mut().zip(&d.components[m - 1].samples) {
            *acc += v;
        }
    }
    TimeSeries::new(samples, d.fs, d.source_id.clone(), d.channel, d.t0)
}

/// Band indices for the high-mode reconstruction (everything above the low
/// modes).
pub fn high_modes(n_bands: usize) -> Vec<usize> {
    (4..=n_bands).collect()
}

/// Window statistics of the two reconstructions plus their ratios.
pub fn vfcdm_features(low_win: &[f64], high_win: &[f64]) -> Result<VfcdmFeatures> {
    if low_win.len() != high_win.len() {
        return Err(Error::rejected(format!(
            "slice length mismatch: {} vs {}",
            low_win.len(),
            high_win.len()
        )));
    }
    if low_win.is_empty() {
        return Err(Error::rejected("empty window slices"));
    }
    let mean_low = signal::mean(low_win);
    let var_low = signal::population_variance(low_win);
    let range_low = range(low_win);
    let mean_high = signal::mean(high_win);
    let var_high = signal::population_variance(high_win);
    let range_high = range(high_win);
    Ok(VfcdmFeatures {
        mean_low,
        var_low,
        range_low,
        mean_high,
        var_high,
        range_high,
        var_ratio: var_low / (var_high + RATIO_EPS),
        mean_ratio: mean_low / (mean_high.abs() + RATIO_EPS),
        range_ratio: range_low / (range_high + RATIO_EPS),
    })
}

fn range(xs: &[f64]) -> f64 {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}
