//! Rule-based quality screen: per-sample range and slope rules with
//! morphological dilation, rolled up to window labels for comparison against
//! the correlation-labeled classifiers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::QualityLabel;
use crate::signal::{TimeSeries, Window};

/// Validity thresholds. The numeric defaults are configuration, not
/// measurement: out-of-range bounds 0.05-60 µS, slope cap 10 µS/s, and a 5 s
/// invalid-neighborhood radius.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    pub eda_min: f64,
    pub eda_max: f64,
    pub max_slope: f64,
    pub dilation_radius_s: f64,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            eda_min: 0.05,
            eda_max: 60.0,
            max_slope: 10.0,
            dilation_radius_s: 5.0,
        }
    }
}

impl RuleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eda_min < self.eda_max) || !(self.max_slope > 0.0) || self.dilation_radius_s < 0.0
        {
            return Err(Error::rejected(format!(
                "rule config out of order: min {} max {} slope {} radius {}",
                self.eda_min, self.eda_max, self.max_slope, self.dilation_radius_s
            )));
        }
        Ok(())
    }
}

/// Per-sample invalid mask: out-of-range values, excessive first-difference
/// slopes (both endpoints of a steep step are marked), then dilation by the
/// configured radius.
pub fn rule_mask(ts: &TimeSeries, cfg: &RuleConfig) -> Result<Vec<bool>> {
    cfg.validate()?;
    let n = ts.samples.len();
    let mut invalid = vec![false; n];
    for (k, v) in ts.samples.iter().enumerate() {
        if *v < cfg.eda_min || *v > cfg.eda_max {
            invalid[k] = true;
        }
    }
    for k in 0..n.saturating_sub(1) {
        let slope = (ts.samples[k + 1] - ts.samples[k]) * ts.fs;
        if slope.abs() > cfg.max_slope {
            invalid[k] = true;
            invalid[k + 1] = true;
        }
    }
    let radius = (cfg.dilation_radius_s * ts.fs).round() as usize;
    if radius == 0 {
        return Ok(invalid);
    }
    let mut dilated = vec![false; n];
    for (k, flag) in invalid.iter().enumerate() {
        if *flag {
            let lo = k.saturating_sub(radius);
            let hi = (k + radius).min(n - 1);
            for d in dilated.iter_mut().take(hi + 1).skip(lo) {
                *d = true;
            }
        }
    }
    Ok(dilated)
}

/// Any invalid sample makes the window Noisy; the rules never discard.
pub fn rule_label(window: &Window, mask_slice: &[bool]) -> Result<QualityLabel> {
    if mask_slice.len() != window.samples.len() {
        return Err(Error::rejected(format!(
            "mask slice of {} does not align with window of {}",
            mask_slice.len(),
            window.samples.len()
        )));
    }
    Ok(if mask_slice.iter().any(|m| *m) {
        QualityLabel::Noisy
    } else {
        QualityLabel::Clean
    })
}

/// Label every window of a record from its full-record mask.
pub fn rule_label_record(
    ts: &TimeSeries,
    windows: &[Window],
    cfg: &RuleConfig,
) -> Result<Vec<QualityLabel>> {
    let mask = rule_mask(ts, cfg)?;
    windows
        .iter()
        .map(|w| {
            let per = w.samples.len();
            let start = w.index * per;
            rule_label(w, &mask[start..start + per])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{segment, ChannelKind};

    fn series(samples: Vec<f64>) -> TimeSeries {
        TimeSeries::new(samples, 8.0, "s1", ChannelKind::Target, 0.0).unwrap()
    }

    #[test]
    fn flat_record_is_all_valid() {
        let ts = series(vec![5.0; 400]);
        let mask = rule_mask(&ts, &RuleConfig::default()).unwrap();
        assert!(mask.iter().all(|m| !m));
    }

    #[test]
    fn single_low_sample_dilates_to_40_each_side() {
        // baseline 0.5 µS keeps the dip's slope under the cap, so only the
        // range rule fires at the dip itself
        let mut samples = vec![0.5; 400];
        samples[200] = 0.01;
        let ts = series(samples);
        let mask = rule_mask(&ts, &RuleConfig::default()).unwrap();
        let marked: Vec<usize> = mask
            .iter()
            .enumerate()
            .filter(|(_, m)| **m)
            .map(|(k, _)| k)
            .collect();
        assert_eq!(marked.first(), Some(&160));
        assert_eq!(marked.last(), Some(&240));
        assert_eq!(marked.len(), 81);
    }

    #[test]
    fn steep_ramp_trips_the_slope_rule() {
        // 15 µS/s exceeds the 10 µS/s cap at every step
        let ts = series((0..400).map(|k| 1.0 + 15.0 * k as f64 / 8.0).collect());
        let cfg = RuleConfig {
            eda_max: f64::INFINITY,
            ..Default::default()
        };
        let mask = rule_mask(&ts, &cfg).unwrap();
        assert!(mask.iter().all(|m| *m));
    }

    #[test]
    fn window_rollup_is_any_invalid() {
        let mut samples = vec![5.0; 400];
        samples[100] = 70.0; // above eda_max, window index 2
        let ts = series(samples);
        let windows = segment(&ts, 5.0).unwrap();
        let labels = rule_label_record(&ts, &windows, &RuleConfig::default()).unwrap();
        // dilation (40 samples) reaches windows 1..=3
        assert_eq!(labels[0], QualityLabel::Clean);
        assert_eq!(labels[1], QualityLabel::Noisy);
        assert_eq!(labels[2], QualityLabel::Noisy);
        assert_eq!(labels[3], QualityLabel::Noisy);
        assert_eq!(labels[4], QualityLabel::Clean);
        assert!(!labels.contains(&QualityLabel::Discarded));
    }

    #[test]
    fn dilation_reaches_adjacent_window() {
        let mut samples = vec![5.0; 400];
        samples[119] = 70.0; // last sample of window 2
        let ts = series(samples);
        let windows = segment(&ts, 5.0).unwrap();
        let labels = rule_label_record(&ts, &windows, &RuleConfig::default()).unwrap();
        assert_eq!(labels[3], QualityLabel::Noisy); // neighbor via dilation
    }

    #[test]
    fn growing_dilation_never_cleans_a_window() {
        let mut samples = vec![5.0; 800];
        samples[300] = 0.0;
        samples[650] = 70.0;
        let ts = series(samples);
        let windows = segment(&ts, 5.0).unwrap();
        let mut prev_noisy: Vec<usize> = Vec::new();
        for radius in [0.0, 1.0, 2.5, 5.0, 10.0] {
            let cfg = RuleConfig {
                dilation_radius_s: radius,
                ..Default::default()
            };
            let labels = rule_label_record(&ts, &windows, &cfg).unwrap();
            let noisy: Vec<usize> = labels
                .iter()
                .enumerate()
                .filter(|(_, l)| **l == QualityLabel::Noisy)
                .map(|(i, _)| i)
                .collect();
            for w in &prev_noisy {
                assert!(noisy.contains(w), "radius {radius} un-flagged window {w}");
            }
            prev_noisy = noisy;
        }
    }

    #[test]
    fn open_thresholds_pass_everything() {
        let mut samples = vec![5.0; 400];
        samples[10] = 0.0001;
        samples[11] = 90.0;
        let ts = series(samples);
        let cfg = RuleConfig {
            eda_min: f64::NEG_INFINITY,
            eda_max: f64::INFINITY,
            max_slope: f64::INFINITY,
            dilation_radius_s: 5.0,
        };
        let windows = segment(&ts, 5.0).unwrap();
        let labels = rule_label_record(&ts, &windows, &cfg).unwrap();
        assert!(labels.iter().all(|l| *l == QualityLabel::Clean));
    }

    #[test]
    fn rule_label_rejects_misaligned_mask() {
        let ts = series(vec![1.0; 80]);
        let windows = segment(&ts, 5.0).unwrap();
        assert!(rule_label(&windows[0], &vec![false; 39]).is_err());
    }
}
