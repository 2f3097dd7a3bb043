//! Assembly of the canonical 52-dimensional feature vector from a target
//! window and its sliced band reconstructions: AR(2) model features, raw
//! statistics, derivative statistics, 3-level Haar wavelet statistics, and
//! the band-split features.

use crate::error::{Error, Result};
use crate::exec;
use crate::labeling::QualityLabel;
use crate::signal::{self, TimeSeries, Window, DEFAULT_ENTROPY_BINS};
use crate::vfcdm::{self, LOW_MODES};

/// Version tag of the canonical index map, embedded in every features file
/// and model so mismatched layouts are caught at load time.
pub const FEATURE_MAP_VERSION: &str = "fmap-1";

/// Canonical feature names, in index order (1-based positions 1..=52).
///
/// Layout: 1-3 AR(2); 4-9 raw-window statistics; 10-19 first/second
/// derivative statistics; 20-43 wavelet-band statistics (cd1, cd2, cd3,
/// ca3); 44-52 band-reconstruction statistics and ratios.
pub const FEATURE_NAMES: [&str; 52] = [
    "ar_a1",
    "ar_a2",
    "ar_noise_var",
    "raw_mean",
    "raw_median",
    "raw_variance",
    "raw_entropy",
    "raw_range",
    "raw_skewness",
    "d1_mean",
    "d1_variance",
    "d1_max_abs",
    "d1_min_abs",
    "d1_mean_abs",
    "d2_mean",
    "d2_variance",
    "d2_max_abs",
    "d2_min_abs",
    "d2_mean_abs",
    "cd1_mean",
    "cd1_median",
    "cd1_variance",
    "cd1_entropy",
    "cd1_range",
    "cd1_n_above_zero",
    "cd2_mean",
    "cd2_median",
    "cd2_variance",
    "cd2_entropy",
    "cd2_range",
    "cd2_n_above_zero",
    "cd3_mean",
    "cd3_median",
    "cd3_variance",
    "cd3_entropy",
    "cd3_range",
    "cd3_n_above_zero",
    "ca3_mean",
    "ca3_median",
    "ca3_variance",
    "ca3_entropy",
    "ca3_range",
    "ca3_n_above_zero",
    "vf_low_mean",
    "vf_low_variance",
    "vf_low_range",
    "vf_high_mean",
    "vf_high_variance",
    "vf_high_range",
    "vf_var_ratio",
    "vf_mean_ratio",
    "vf_range_ratio",
];

pub const N_FEATURES: usize = 52;

const ZERO_VAR_EPS: f64 = 1e-12;

/// AR(2) fit in the convention `x[t] = a1*x[t-1] + a2*x[t-2] + e[t]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArFit {
    pub a1: f64,
    pub a2: f64,
    pub noise_var: f64,
}

/// Orthonormal 3-level Haar analysis of one window.
#[derive(Debug, Clone)]
pub struct WaveletBands {
    pub cd1: Vec<f64>,
    pub cd2: Vec<f64>,
    pub cd3: Vec<f64>,
    pub ca3: Vec<f64>,
}

/// The canonical 52-dimensional vector plus label and group metadata.
#[derive(Debug, Clone)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: QualityLabel,
    pub subject_id: String,
    pub window_index: usize,
}

/// Yule-Walker AR(2) estimate on the mean-removed window using biased
/// autocorrelations. A zero-variance window fits as (0, 0, 0).
pub fn fit_ar2(samples: &[f64]) -> Result<ArFit> {
    if samples.len() < 8 {
        return Err(Error::rejected(format!(
            "AR(2) fit needs at least 8 samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len();
    let m = signal::mean(samples);
    let x: Vec<f64> = samples.iter().map(|v| v - m).collect();
    let acov = |lag: usize| -> f64 {
        x[lag..].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / n as f64
    };
    let r0 = acov(0);
    if r0 < ZERO_VAR_EPS {
        return Ok(ArFit {
            a1: 0.0,
            a2: 0.0,
            noise_var: 0.0,
        });
    }
    let r1 = acov(1);
    let r2 = acov(2);
    let det = r0 * r0 - r1 * r1;
    let (a1, a2) = if det.abs() < 1e-15 * r0 * r0 {
        // near-singular Toeplitz system; fall back to the AR(1) solution
        (r1 / r0, 0.0)
    } else {
        ((r0 * r1 - r1 * r2) / det, (r0 * r2 - r1 * r1) / det)
    };
    let noise_var = (r0 - a1 * r1 - a2 * r2).max(0.0);
    Ok(ArFit { a1, a2, noise_var })
}

/// Orthonormal Haar analysis step: `a[k] = (x[2k]+x[2k+1])/sqrt(2)`,
/// `d[k] = (x[2k]-x[2k+1])/sqrt(2)`.
fn haar_step(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let half = x.len() / 2;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut approx = Vec::with_capacity(half);
    let mut detail = Vec::with_capacity(half);
    for k in 0..half {
        approx.push((x[2 * k] + x[2 * k + 1]) * s);
        detail.push((x[2 * k] - x[2 * k + 1]) * s);
    }
    (approx, detail)
}

/// Three cascaded Haar levels; the input length must be divisible by 8.
pub fn haar_dwt3(samples: &[f64]) -> Result<WaveletBands> {
    if samples.is_empty() || samples.len() % 8 != 0 {
        return Err(Error::rejected(format!(
            "3-level Haar needs a length divisible by 8, got {}",
            samples.len()
        )));
    }
    let (ca1, cd1) = haar_step(samples);
    let (ca2, cd2) = haar_step(&ca1);
    let (ca3, cd3) = haar_step(&ca2);
    Ok(WaveletBands { cd1, cd2, cd3, ca3 })
}

/// Six statistics per wavelet band: mean, median, variance, Shannon entropy,
/// range, and the count of strictly positive coefficients. Band order is
/// cd1, cd2, cd3, ca3.
pub fn wavelet_features(bands: &WaveletBands) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(24);
    for band in [&bands.cd1, &bands.cd2, &bands.cd3, &bands.ca3] {
        let s = signal::stats(band, DEFAULT_ENTROPY_BINS)?;
        let above = band.iter().filter(|v| **v > 0.0).count() as f64;
        out.extend_from_slice(&[s.mean, s.median, s.variance, s.shannon_entropy, s.range, above]);
    }
    Ok(out)
}

/// Five statistics per derivative (first then second): mean, variance,
/// max |.|, min |.|, mean |.|.
pub fn derivative_features(window: &Window) -> Result<Vec<f64>> {
    if window.samples.len() < 3 {
        return Err(Error::rejected(format!(
            "derivative features need at least 3 samples, got {}",
            window.samples.len()
        )));
    }
    let mut out = Vec::with_capacity(10);
    for order in [1u8, 2] {
        let d = signal::derivative(&window.samples, window.fs, order)?;
        let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
        out.push(signal::mean(&d));
        out.push(signal::population_variance(&d));
        out.push(abs.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        out.push(abs.iter().copied().fold(f64::INFINITY, f64::min));
        out.push(signal::mean(&abs));
    }
    Ok(out)
}

/// Raw 52-value feature row for one window and its reconstruction slices, in
/// canonical order. Any non-finite value is an error naming the feature.
pub fn feature_values(window: &Window, low_slice: &[f64], high_slice: &[f64]) -> Result<Vec<f64>> {
    if low_slice.len() != window.samples.len() || high_slice.len() != window.samples.len() {
        return Err(Error::rejected(format!(
            "slice lengths ({}, {}) do not match window length {}",
            low_slice.len(),
            high_slice.len(),
            window.samples.len()
        )));
    }
    let ar = fit_ar2(&window.samples)?;
    let raw = signal::stats(&window.samples, DEFAULT_ENTROPY_BINS)?;
    let deriv = derivative_features(window)?;
    let wav = wavelet_features(&haar_dwt3(&window.samples)?)?;
    let vf = vfcdm::vfcdm_features(low_slice, high_slice)?;

    let mut values = Vec::with_capacity(N_FEATURES);
    values.extend_from_slice(&[ar.a1, ar.a2, ar.noise_var]);
    values.extend_from_slice(&[
        raw.mean,
        raw.median,
        raw.variance,
        raw.shannon_entropy,
        raw.range,
        raw.skewness,
    ]);
    values.extend_from_slice(&deriv);
    values.extend_from_slice(&wav);
    values.extend_from_slice(&[
        vf.mean_low,
        vf.var_low,
        vf.range_low,
        vf.mean_high,
        vf.var_high,
        vf.range_high,
        vf.var_ratio,
        vf.mean_ratio,
        vf.range_ratio,
    ]);
    debug_assert_eq!(values.len(), N_FEATURES);
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Feature {
                index: i + 1,
                name: FEATURE_NAMES[i],
            });
        }
    }
    Ok(values)
}

/// Build the labeled feature vector for one window.
pub fn assemble(
    window: &Window,
    low_slice: &[f64],
    high_slice: &[f64],
    label: QualityLabel,
    subject_id: &str,
) -> Result<FeatureVector> {
    let values = feature_values(window, low_slice, high_slice)?;
    Ok(FeatureVector {
        values,
        label,
        subject_id: subject_id.to_string(),
        window_index: window.index,
    })
}

/// Decompose a full record once, slice the low/high reconstructions per
/// window, and compute every window's raw feature row. Windows are
/// independent and run in parallel; output order follows window index.
pub fn extract_record(ts: &TimeSeries, win_sec: f64) -> Result<Vec<(Window, Vec<f64>)>> {
    let windows = signal::segment(ts, win_sec)?;
    if windows.is_empty() {
        return Ok(Vec::new());
    }
    let decomp = vfcdm::cdm_decompose(ts, vfcdm::DEFAULT_BANDS)?;
    let low = vfcdm::reconstruct(&decomp, &LOW_MODES)?;
    let high = vfcdm::reconstruct(&decomp, &vfcdm::high_modes(vfcdm::DEFAULT_BANDS))?;
    let per = windows[0].samples.len();
    let rows = exec::map_slice(&windows, |w| {
        let lo = &low.samples[w.index * per..(w.index + 1) * per];
        let hi = &high.samples[w.index * per..(w.index + 1) * per];
        feature_values(w, lo, hi)
    });
    windows
        .into_iter()
        .zip(rows)
        .map(|(w, r)| r.map(|values| (w, values)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::ChannelKind;
    use rand::Rng;

    fn window(samples: Vec<f64>) -> Window {
        Window {
            subject_id: "s1".into(),
            index: 0,
            samples,
            fs: 8.0,
            start_time: 0.0,
        }
    }

    #[test]
    fn ar_constant_window_is_zero_fit() {
        let fit = fit_ar2(&vec![4.2; 40]).unwrap();
        assert_eq!(fit, ArFit { a1: 0.0, a2: 0.0, noise_var: 0.0 });
    }

    #[test]
    fn ar_recovers_simulated_process() {
        // x[t] = 0.5 x[t-1] - 0.3 x[t-2] + e[t], unit-variance white e
        let mut rng = crate::seeds::unit_rng(53, "ar", 0);
        let n = 10_000;
        let burn = 500;
        let mut x = vec![0.0; n + burn];
        for t in 2..n + burn {
            let e: f64 = rng.sample(rand_distr::StandardNormal);
            x[t] = 0.5 * x[t - 1] - 0.3 * x[t - 2] + e;
        }
        let fit = fit_ar2(&x[burn..]).unwrap();
        assert!((fit.a1 - 0.5).abs() <= 0.05, "a1 {}", fit.a1);
        assert!((fit.a2 + 0.3).abs() <= 0.05, "a2 {}", fit.a2);
    }

    #[test]
    fn ar_white_noise_has_near_zero_coefficients() {
        let mut rng = crate::seeds::unit_rng(59, "white", 0);
        let sigma = 1.7f64;
        let x: Vec<f64> = (0..10_000)
            .map(|_| sigma * rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let fit = fit_ar2(&x).unwrap();
        assert!(fit.a1.abs() <= 0.05);
        assert!(fit.a2.abs() <= 0.05);
        let var = sigma * sigma;
        assert!((fit.noise_var - var).abs() <= 0.1 * var, "nv {}", fit.noise_var);
    }

    #[test]
    fn ar_error_shrinks_with_sample_count() {
        // median estimator error at n=10000 beats n=100 over 100 trials
        let err_at = |n: usize, trial: u64| -> f64 {
            let mut rng = crate::seeds::unit_rng(61, "shrink", trial);
            let burn = 200;
            let mut x = vec![0.0; n + burn];
            for t in 2..n + burn {
                let e: f64 = rng.sample(rand_distr::StandardNormal);
                x[t] = 0.5 * x[t - 1] - 0.3 * x[t - 2] + e;
            }
            let f = fit_ar2(&x[burn..]).unwrap();
            ((f.a1 - 0.5).powi(2) + (f.a2 + 0.3).powi(2)).sqrt()
        };
        let mut small: Vec<f64> = (0..100).map(|t| err_at(100, t)).collect();
        let mut large: Vec<f64> = (0..100).map(|t| err_at(10_000, t + 1000)).collect();
        small.sort_by(f64::total_cmp);
        large.sort_by(f64::total_cmp);
        assert!(large[50] < small[50], "median errors: {} vs {}", large[50], small[50]);
    }

    #[test]
    fn ar_rejects_short_input() {
        assert!(fit_ar2(&[1.0; 7]).is_err());
    }

    #[test]
    fn haar_constant_and_spike() {
        let c = 1.3;
        let bands = haar_dwt3(&vec![c; 40]).unwrap();
        assert_eq!(bands.cd1.len(), 20);
        assert_eq!(bands.cd2.len(), 10);
        assert_eq!(bands.cd3.len(), 5);
        assert_eq!(bands.ca3.len(), 5);
        for d in bands.cd1.iter().chain(&bands.cd2).chain(&bands.cd3) {
            assert!(d.abs() < 1e-12);
        }
        let expect = c * 2f64.powf(1.5);
        for a in &bands.ca3 {
            assert!((a - expect).abs() < 1e-12);
        }

        let mut spike = vec![0.0; 40];
        spike[0] = 1.0;
        let bands = haar_dwt3(&spike).unwrap();
        assert!((bands.cd1[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let coeff_energy: f64 = bands
            .cd1
            .iter()
            .chain(&bands.cd2)
            .chain(&bands.cd3)
            .chain(&bands.ca3)
            .map(|v| v * v)
            .sum();
        assert!((coeff_energy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn haar_conserves_energy() {
        let mut rng = crate::seeds::unit_rng(67, "haar", 0);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..40).map(|_| rng.random_range(-5.0..5.0)).collect();
            let bands = haar_dwt3(&x).unwrap();
            let sig: f64 = x.iter().map(|v| v * v).sum();
            let coeff: f64 = bands
                .cd1
                .iter()
                .chain(&bands.cd2)
                .chain(&bands.cd3)
                .chain(&bands.ca3)
                .map(|v| v * v)
                .sum();
            assert!((sig - coeff).abs() <= 1e-9 * sig.max(1.0));
        }
    }

    #[test]
    fn haar_rejects_bad_length() {
        assert!(haar_dwt3(&[1.0; 36]).is_err());
        assert!(haar_dwt3(&[]).is_err());
    }

    #[test]
    fn wavelet_stats_match_shared_kernel() {
        let mut rng = crate::seeds::unit_rng(71, "wstats", 0);
        let x: Vec<f64> = (0..40).map(|_| rng.random_range(-2.0..2.0)).collect();
        let bands = haar_dwt3(&x).unwrap();
        let feats = wavelet_features(&bands).unwrap();
        for (bi, band) in [&bands.cd1, &bands.cd2, &bands.cd3, &bands.ca3]
            .into_iter()
            .enumerate()
        {
            let s = signal::stats(band, DEFAULT_ENTROPY_BINS).unwrap();
            let got = &feats[bi * 6..bi * 6 + 6];
            assert_eq!(got[0], s.mean);
            assert_eq!(got[1], s.median);
            assert_eq!(got[2], s.variance);
            assert_eq!(got[3], s.shannon_entropy);
            assert_eq!(got[4], s.range);
            assert_eq!(got[5], band.iter().filter(|v| **v > 0.0).count() as f64);
        }
    }

    #[test]
    fn count_above_zero_is_strict() {
        let mut x = vec![0.0; 40];
        x[0] = 2.0; // cd1[0] = +sqrt(2), everything else 0
        x[1] = 0.0;
        let bands = haar_dwt3(&x).unwrap();
        let feats = wavelet_features(&bands).unwrap();
        assert_eq!(feats[5], 1.0, "cd1 strictly-positive count");
    }

    #[test]
    fn derivative_features_on_ramp_and_sawtooth() {
        let fs = 8.0;
        let ramp: Vec<f64> = (0..40).map(|k| 0.5 * k as f64 / fs).collect();
        let f = derivative_features(&window(ramp)).unwrap();
        for (i, expect) in [0.5, 0.0, 0.5, 0.5, 0.5].iter().enumerate() {
            assert!((f[i] - expect).abs() < 1e-9, "d1 feature {i}");
        }
        for v in &f[5..10] {
            assert!(v.abs() < 1e-9);
        }

        let flat = derivative_features(&window(vec![3.0; 40])).unwrap();
        assert!(flat.iter().all(|v| v.abs() < 1e-12));

        // alternating 0/1 sawtooth: d1 alternates +8/-8
        let saw: Vec<f64> = (0..40).map(|k| (k % 2) as f64).collect();
        let f = derivative_features(&window(saw.clone())).unwrap();
        let d1 = signal::derivative(&saw, fs, 1).unwrap();
        assert!((f[0] - signal::mean(&d1)).abs() < 1e-12);
        assert!((f[0] - 8.0 / 39.0).abs() < 1e-9, "parity mean {}", f[0]);
        assert_eq!(f[2], 8.0);
    }

    #[test]
    fn assemble_shape_and_degenerate_blocks() {
        let mut rng = crate::seeds::unit_rng(73, "asm", 0);
        let w = window((0..40).map(|_| rng.random_range(0.0..5.0)).collect());
        let lo: Vec<f64> = (0..40).map(|_| rng.random_range(0.0..5.0)).collect();
        let hi: Vec<f64> = (0..40).map(|_| rng.random_range(-0.1..0.1)).collect();
        let fv = assemble(&w, &lo, &hi, QualityLabel::Clean, "s1").unwrap();
        assert_eq!(fv.values.len(), 52);

        let flat = window(vec![2.0; 40]);
        let fv = assemble(&flat, &vec![0.0; 40], &vec![0.0; 40], QualityLabel::Clean, "s1").unwrap();
        assert_eq!(&fv.values[0..3], &[0.0, 0.0, 0.0]);
        assert!(fv.values[9..19].iter().all(|v| *v == 0.0));
        // detail-band stats all zero
        for band in 0..3 {
            assert!(fv.values[19 + band * 6..25 + band * 6].iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn assemble_is_deterministic() {
        let mut rng = crate::seeds::unit_rng(79, "asmdet", 0);
        let samples: Vec<f64> = (0..40).map(|_| rng.random_range(0.0..5.0)).collect();
        let lo: Vec<f64> = (0..40).map(|_| rng.random_range(0.0..5.0)).collect();
        let hi: Vec<f64> = (0..40).map(|_| rng.random_range(-0.1..0.1)).collect();
        let a = assemble(&window(samples.clone()), &lo, &hi, QualityLabel::Clean, "s1").unwrap();
        let b = assemble(&window(samples), &lo, &hi, QualityLabel::Clean, "s1").unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn offset_invariance_of_shift_blind_features() {
        let mut rng = crate::seeds::unit_rng(83, "offset", 0);
        for _ in 0..20 {
            let samples: Vec<f64> = (0..40).map(|_| rng.random_range(0.0..5.0)).collect();
            let c = rng.random_range(-3.0..3.0);
            let shifted: Vec<f64> = samples.iter().map(|v| v + c).collect();

            let ar_a = fit_ar2(&samples).unwrap();
            let ar_b = fit_ar2(&shifted).unwrap();
            assert!((ar_a.a1 - ar_b.a1).abs() < 1e-9);
            assert!((ar_a.a2 - ar_b.a2).abs() < 1e-9);

            let d_a = derivative_features(&window(samples.clone())).unwrap();
            let d_b = derivative_features(&window(shifted.clone())).unwrap();
            for (u, v) in d_a.iter().zip(&d_b) {
                assert!((u - v).abs() < 1e-9);
            }

            // detail bands are offset-blind (a shifted constant lands in ca3)
            let wa = haar_dwt3(&samples).unwrap();
            let wb = haar_dwt3(&shifted).unwrap();
            for (u, v) in wa
                .cd1
                .iter()
                .chain(&wa.cd2)
                .chain(&wa.cd3)
                .zip(wb.cd1.iter().chain(&wb.cd2).chain(&wb.cd3))
            {
                assert!((u - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn assemble_rejects_mismatched_slices() {
        let w = window(vec![1.0; 40]);
        assert!(assemble(&w, &vec![0.0; 39], &vec![0.0; 40], QualityLabel::Clean, "s1").is_err());
    }

    #[test]
    fn extract_record_rows_are_reproducible() {
        let mut rng = crate::seeds::unit_rng(89, "rec", 0);
        let samples: Vec<f64> = (0..800).map(|_| rng.random_range(1.0..3.0)).collect();
        let ts = TimeSeries::new(samples, 8.0, "s1", ChannelKind::Target, 0.0).unwrap();
        let a = extract_record(&ts, 5.0).unwrap();
        let b = extract_record(&ts, 5.0).unwrap();
        assert_eq!(a.len(), 20);
        for ((wa, ra), (wb, rb)) in a.iter().zip(&b) {
            assert_eq!(wa.index, wb.index);
            assert_eq!(ra, rb);
        }
    }
}
