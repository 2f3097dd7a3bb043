//! Windowed-sinc FIR lowpass design and zero-phase application.

use crate::error::{Error, Result};

/// Hamming window of length `n`.
pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let denom = (n - 1) as f64;
    (0..n)
        .map(|k| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * k as f64 / denom).cos())
        .collect()
}

/// Hamming-windowed sinc lowpass. `cutoff` is in cycles/sample, in (0, 0.5).
/// Taps are normalized to unit DC gain; `n_taps` must be odd so the group
/// delay is an integer number of samples.
pub fn lowpass_hamming(n_taps: usize, cutoff: f64) -> Vec<f64> {
    assert!(n_taps % 2 == 1, "tap count must be odd");
    assert!(cutoff > 0.0 && cutoff < 0.5, "cutoff must be in (0, 0.5)");
    let mid = (n_taps - 1) as f64 / 2.0;
    let win = hamming(n_taps);
    let mut taps: Vec<f64> = (0..n_taps)
        .map(|k| {
            let x = k as f64 - mid;
            let s = if x == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * std::f64::consts::PI * cutoff * x).sin() / (std::f64::consts::PI * x)
            };
            s * win[k]
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Mirror the signal (without repeating the edge sample) by `pad` samples on
/// each side. Requires `pad <= len - 1`.
pub fn reflect_pad(x: &[f64], pad: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if n == 0 || pad > n - 1 {
        return Err(Error::rejected(format!(
            "record of {n} samples is too short for a reflection pad of {pad}"
        )));
    }
    let mut out = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        out.push(x[i]);
    }
    out.extend_from_slice(x);
    for i in (n - 1 - pad..n - 1).rev() {
        out.push(x[i]);
    }
    Ok(out)
}

/// Apply a symmetric FIR filter with group-delay compensation: the output is
/// the same length as the input and has zero net phase shift. Edges use
/// reflection padding.
pub fn filt_centered(taps: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let half = (taps.len() - 1) / 2;
    let padded = reflect_pad(x, half)?;
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = 0.0;
        let seg = &padded[k..k + taps.len()];
        for (t, v) in taps.iter().zip(seg) {
            acc += t * v;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Two centered passes of the same symmetric filter; the magnitude response
/// is squared and the phase stays zero.
pub fn filt_zero_phase_twice(taps: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let once = filt_centered(taps, x)?;
    filt_centered(taps, &once)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dc_gain_is_unity() {
        let taps = lowpass_hamming(65, 0.1);
        let sum: f64 = taps.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let x = vec![3.0; 200];
        let y = filt_centered(&taps, &x).unwrap();
        for v in y {
            assert!((v - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn taps_are_symmetric() {
        let taps = lowpass_hamming(33, 0.2);
        for k in 0..taps.len() {
            assert!((taps[k] - taps[taps.len() - 1 - k]).abs() < 1e-15);
        }
    }

    #[test]
    fn passband_tone_passes_with_zero_phase() {
        // 0.02 cyc/sample tone, cutoff 0.1: deep in the passband.
        let n = 2000;
        let x: Vec<f64> = (0..n)
            .map(|k| (2.0 * std::f64::consts::PI * 0.02 * k as f64).sin())
            .collect();
        let taps = lowpass_hamming(129, 0.1);
        let y = filt_centered(&taps, &x).unwrap();
        // interior: skip one filter length at each edge; the Hamming design
        // leaves ~0.1% passband droop at this frequency
        for k in 129..n - 129 {
            assert!(
                (y[k] - x[k]).abs() < 2.5e-3,
                "sample {k}: {} vs {}",
                y[k],
                x[k]
            );
        }
    }

    #[test]
    fn stopband_tone_is_rejected() {
        let n = 2000;
        let x: Vec<f64> = (0..n)
            .map(|k| (2.0 * std::f64::consts::PI * 0.25 * k as f64).sin())
            .collect();
        let taps = lowpass_hamming(129, 0.1);
        let y = filt_centered(&taps, &x).unwrap();
        let rms = (y[200..1800].iter().map(|v| v * v).sum::<f64>() / 1600.0).sqrt();
        assert!(rms < 3e-3, "stopband rms {rms}");
    }

    #[test]
    fn reflect_pad_mirrors_without_edge_duplicate() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let p = reflect_pad(&x, 2).unwrap();
        assert_eq!(p, vec![3.0, 2.0, 1.0, 2.0, 3.0, 4.0, 3.0, 2.0]);
    }

    #[test]
    fn reflect_pad_rejects_short_input() {
        assert!(reflect_pad(&[1.0, 2.0], 4).is_err());
    }
}
