//! Seeded generator of paired (reference, target) EDA records with
//! ground-truth artifact masks, emulating a two-hand protocol: both channels
//! share the tonic drift and SCR train, the reference gets small
//! channel-mismatch jitter, and the target gets injected artifacts.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::labeling::QualityLabel;
use crate::seeds;
use crate::signal::{ChannelKind, TimeSeries};

/// Artifact arrival rates are events per minute; magnitudes are drawn per
/// event from the waveform catalogue.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ArtifactRates {
    pub step: f64,
    pub spike: f64,
    pub burst: f64,
    pub saturation: f64,
    pub detach: f64,
}

impl Default for ArtifactRates {
    fn default() -> Self {
        ArtifactRates {
            step: 0.2,
            spike: 0.5,
            burst: 0.3,
            saturation: 0.1,
            detach: 0.2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub duration_s: f64,
    pub fs: f64,
    /// SCR (phasic event) arrivals per minute.
    pub scr_rate_per_min: f64,
    pub tonic_level_us: f64,
    /// Random-walk drift scale: displacement std after one minute.
    pub drift_us_per_min: f64,
    /// Per-channel white measurement noise, µS.
    pub noise_us: f64,
    /// Reference-channel SCR amplitude mismatch, fraction.
    pub amp_jitter: f64,
    /// Reference-channel SCR onset mismatch, seconds.
    pub timing_jitter_s: f64,
    pub rates: ArtifactRates,
    /// Rail value written during saturation events, µS.
    pub saturation_level_us: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_subjects: 10,
            duration_s: 600.0,
            fs: 8.0,
            scr_rate_per_min: 4.0,
            tonic_level_us: 2.0,
            drift_us_per_min: 0.5,
            noise_us: 0.003,
            amp_jitter: 0.05,
            timing_jitter_s: 0.05,
            rates: ArtifactRates::default(),
            saturation_level_us: 64.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects == 0 {
            return Err(Error::rejected("config asks for zero subjects"));
        }
        if !(self.fs > 0.0) || !(self.duration_s > 0.0) {
            return Err(Error::rejected("fs and duration must be positive"));
        }
        if self.duration_s < 50.0 {
            return Err(Error::rejected(format!(
                "duration {} s is under the 10-window minimum",
                self.duration_s
            )));
        }
        let rates = [
            self.scr_rate_per_min,
            self.rates.step,
            self.rates.spike,
            self.rates.burst,
            self.rates.saturation,
            self.rates.detach,
        ];
        if rates.iter().any(|r| *r < 0.0) {
            return Err(Error::rejected("negative event rate"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtifactKind {
    Step,
    Spike,
    Burst,
    Saturation,
    Detach,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactEvent {
    pub kind: ArtifactKind,
    pub onset_s: f64,
    pub duration_s: f64,
    pub magnitude: f64,
}

/// One subject's paired channels, ground-truth mask, and event log.
#[derive(Debug, Clone)]
pub struct SynthRecord {
    pub reference: TimeSeries,
    pub target: TimeSeries,
    pub artifact_mask: Vec<bool>,
    pub events: Vec<ArtifactEvent>,
}

const SCR_RISE_S: f64 = 0.75;
const SCR_DECAY_S: f64 = 2.0;
const SCR_KERNEL_S: f64 = 20.0;

fn add_scr(samples: &mut [f64], fs: f64, onset: usize, amplitude: f64) {
    let kernel_len = (SCR_KERNEL_S * fs) as usize;
    for k in 0..kernel_len {
        let idx = onset + k;
        if idx >= samples.len() {
            break;
        }
        let t = k as f64 / fs;
        samples[idx] += amplitude * ((-t / SCR_DECAY_S).exp() - (-t / SCR_RISE_S).exp());
    }
}

/// Poisson arrivals as a per-sample Bernoulli scan; the draw order is fixed
/// so records are seed-reproducible.
fn arrivals(rng: &mut rand_chacha::ChaCha8Rng, n: usize, rate_per_min: f64, fs: f64) -> Vec<usize> {
    let p = rate_per_min / (60.0 * fs);
    (0..n).filter(|_| rng.random::<f64>() < p).collect()
}

/// Generate one subject's record pair. Subjects derive independent RNG
/// streams from `(cfg.seed, subject_index)`.
pub fn gen_subject(cfg: &SynthConfig, subject_index: usize) -> Result<SynthRecord> {
    cfg.validate()?;
    let mut rng = seeds::unit_rng(cfg.seed, "synth-subject", subject_index as u64);
    let n = (cfg.duration_s * cfg.fs).round() as usize;
    let fs = cfg.fs;

    // shared tonic drift: bounded random walk
    let sigma_step = cfg.drift_us_per_min / (60.0 * fs).sqrt();
    let lo = (0.25 * cfg.tonic_level_us).max(0.05);
    let hi = 4.0 * cfg.tonic_level_us;
    let mut tonic = Vec::with_capacity(n);
    let mut level = cfg.tonic_level_us;
    for _ in 0..n {
        tonic.push(level);
        level += sigma_step * rng.sample::<f64, _>(StandardNormal);
        if level < lo {
            level = 2.0 * lo - level;
        }
        if level > hi {
            level = 2.0 * hi - level;
        }
    }

    // shared SCR train; the reference copy gets amplitude/timing mismatch
    let mut clean = tonic.clone();
    let mut reference = tonic;
    for onset in arrivals(&mut rng, n, cfg.scr_rate_per_min, fs) {
        let amplitude = rng.random_range(0.1..1.0);
        add_scr(&mut clean, fs, onset, amplitude);
        let ref_amp = amplitude * (1.0 + rng.random_range(-cfg.amp_jitter..=cfg.amp_jitter));
        let shift = (rng.random_range(-cfg.timing_jitter_s..=cfg.timing_jitter_s) * fs).round()
            as isize;
        let ref_onset = (onset as isize + shift).max(0) as usize;
        add_scr(&mut reference, fs, ref_onset, ref_amp);
    }

    // independent measurement noise per channel
    let mut target = clean.clone();
    for v in &mut reference {
        *v += cfg.noise_us * rng.sample::<f64, _>(StandardNormal);
    }
    for v in &mut target {
        *v += cfg.noise_us * rng.sample::<f64, _>(StandardNormal);
    }

    // artifact injection on the target only
    let mut mask = vec![false; n];
    let mut events = Vec::new();
    let mark = |mask: &mut Vec<bool>, from: usize, len: usize| {
        for m in mask.iter_mut().skip(from).take(len) {
            *m = true;
        }
    };

    for onset in arrivals(&mut rng, n, cfg.rates.step, fs) {
        let dur_s = rng.random_range(2.0..8.0);
        let len = ((dur_s * fs) as usize).min(n - onset);
        let mag = rng.random_range(0.5..5.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        for v in target.iter_mut().skip(onset).take(len) {
            *v += mag;
        }
        mark(&mut mask, onset, len);
        events.push(ArtifactEvent {
            kind: ArtifactKind::Step,
            onset_s: onset as f64 / fs,
            duration_s: len as f64 / fs,
            magnitude: mag,
        });
    }
    for onset in arrivals(&mut rng, n, cfg.rates.spike, fs) {
        let len = rng.random_range(1..=3usize).min(n - onset);
        let mag = rng.random_range(1.0..10.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        for v in target.iter_mut().skip(onset).take(len) {
            *v += mag;
        }
        mark(&mut mask, onset, len);
        events.push(ArtifactEvent {
            kind: ArtifactKind::Spike,
            onset_s: onset as f64 / fs,
            duration_s: len as f64 / fs,
            magnitude: mag,
        });
    }
    for onset in arrivals(&mut rng, n, cfg.rates.burst, fs) {
        let dur_s = rng.random_range(2.0..10.0);
        let len = ((dur_s * fs) as usize).min(n - onset);
        let freq = rng.random_range(1.0..4.0);
        let amp = rng.random_range(0.3..3.0);
        for k in 0..len {
            target[onset + k] +=
                amp * (2.0 * std::f64::consts::PI * freq * k as f64 / fs).sin();
        }
        mark(&mut mask, onset, len);
        events.push(ArtifactEvent {
            kind: ArtifactKind::Burst,
            onset_s: onset as f64 / fs,
            duration_s: len as f64 / fs,
            magnitude: amp,
        });
    }
    for onset in arrivals(&mut rng, n, cfg.rates.detach, fs) {
        let dur_s = rng.random_range(2.0..6.0);
        let len = ((dur_s * fs) as usize).min(n - onset);
        let tau = rng.random_range(0.5..2.0);
        for k in 0..len {
            target[onset + k] = clean[onset + k] * (-(k as f64 / fs) / tau).exp();
        }
        mark(&mut mask, onset, len);
        events.push(ArtifactEvent {
            kind: ArtifactKind::Detach,
            onset_s: onset as f64 / fs,
            duration_s: len as f64 / fs,
            magnitude: tau,
        });
    }
    for onset in arrivals(&mut rng, n, cfg.rates.saturation, fs) {
        let dur_s = rng.random_range(1.0..5.0);
        let len = ((dur_s * fs) as usize).min(n - onset);
        for v in target.iter_mut().skip(onset).take(len) {
            *v = cfg.saturation_level_us;
        }
        mark(&mut mask, onset, len);
        events.push(ArtifactEvent {
            kind: ArtifactKind::Saturation,
            onset_s: onset as f64 / fs,
            duration_s: len as f64 / fs,
            magnitude: cfg.saturation_level_us,
        });
    }
    events.sort_by(|a, b| a.onset_s.total_cmp(&b.onset_s));

    for v in reference.iter_mut().chain(target.iter_mut()) {
        if *v < 0.0 {
            *v = 0.0;
        }
    }

    let subject_id = subject_label(subject_index);
    Ok(SynthRecord {
        reference: TimeSeries::new(reference, fs, &subject_id, ChannelKind::Reference, 0.0)?,
        target: TimeSeries::new(target, fs, &subject_id, ChannelKind::Target, 0.0)?,
        artifact_mask: mask,
        events,
    })
}

pub fn subject_label(index: usize) -> String {
    format!("S{:02}", index + 1)
}

/// Generate the whole corpus; subjects are independent and run in parallel.
pub fn gen_corpus(cfg: &SynthConfig) -> Result<Vec<SynthRecord>> {
    cfg.validate()?;
    exec::map_range(cfg.n_subjects, |s| gen_subject(cfg, s))
        .into_iter()
        .collect()
}

/// Ground-truth window labels: Noisy when more than `frac` of the window's
/// samples are masked.
pub fn mask_to_truth_labels(
    mask: &[bool],
    fs: f64,
    win_sec: f64,
    frac: f64,
) -> Vec<QualityLabel> {
    let per = (fs * win_sec).round() as usize;
    let n_windows = mask.len() / per;
    (0..n_windows)
        .map(|i| {
            let masked = mask[i * per..(i + 1) * per].iter().filter(|m| **m).count();
            if masked as f64 / per as f64 > frac {
                QualityLabel::Noisy
            } else {
                QualityLabel::Clean
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling;
    use crate::signal::segment;

    #[test]
    fn flat_config_gives_constant_channels() {
        let cfg = SynthConfig {
            scr_rate_per_min: 0.0,
            drift_us_per_min: 0.0,
            noise_us: 0.0,
            amp_jitter: 0.0,
            timing_jitter_s: 0.0,
            rates: ArtifactRates {
                step: 0.0,
                spike: 0.0,
                burst: 0.0,
                saturation: 0.0,
                detach: 0.0,
            },
            n_subjects: 1,
            duration_s: 60.0,
            ..Default::default()
        };
        let rec = gen_subject(&cfg, 0).unwrap();
        assert!(rec.artifact_mask.iter().all(|m| !m));
        for v in rec.target.samples.iter().chain(&rec.reference.samples) {
            assert_eq!(*v, 2.0);
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = SynthConfig {
            n_subjects: 2,
            duration_s: 120.0,
            seed: 42,
            ..Default::default()
        };
        let a = gen_subject(&cfg, 1).unwrap();
        let b = gen_subject(&cfg, 1).unwrap();
        assert_eq!(a.target.samples, b.target.samples);
        assert_eq!(a.reference.samples, b.reference.samples);
        assert_eq!(a.artifact_mask, b.artifact_mask);
        let other = gen_subject(&cfg, 0).unwrap();
        assert_ne!(a.target.samples, other.target.samples);
    }

    #[test]
    fn clean_signal_stays_nonnegative() {
        let cfg = SynthConfig {
            n_subjects: 3,
            duration_s: 300.0,
            seed: 7,
            ..Default::default()
        };
        for rec in gen_corpus(&cfg).unwrap() {
            assert!(rec.reference.samples.iter().all(|v| *v >= 0.0));
            assert!(rec.target.samples.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn artifact_free_corpus_correlates_above_override() {
        // calibration: with artifacts off, at least 99% of window pairs must
        // clear r > 0.95
        let cfg = SynthConfig {
            rates: ArtifactRates {
                step: 0.0,
                spike: 0.0,
                burst: 0.0,
                saturation: 0.0,
                detach: 0.0,
            },
            n_subjects: 5,
            duration_s: 600.0,
            seed: 11,
            ..Default::default()
        };
        let mut total = 0usize;
        let mut high = 0usize;
        for rec in gen_corpus(&cfg).unwrap() {
            assert!(rec.artifact_mask.iter().all(|m| !m));
            let t = segment(&rec.target, 5.0).unwrap();
            let r = segment(&rec.reference, 5.0).unwrap();
            for (tw, rw) in t.iter().zip(&r) {
                let rho = labeling::pearson(&tw.samples, &rw.samples, 1e-12).unwrap();
                total += 1;
                high += (rho > 0.95) as usize;
            }
        }
        let share = high as f64 / total as f64;
        assert!(share >= 0.99, "only {share:.4} of windows above 0.95");
    }

    #[test]
    fn mask_rollup_threshold_arithmetic() {
        let mut mask = vec![false; 120]; // 3 windows at fs 8
        assert_eq!(
            mask_to_truth_labels(&mask, 8.0, 5.0, 0.05),
            vec![QualityLabel::Clean; 3]
        );
        for m in mask.iter_mut().take(40) {
            *m = true;
        }
        // exactly 3 of 40 masked in window 1: 7.5% > 5%
        mask[45] = true;
        mask[50] = true;
        mask[55] = true;
        let labels = mask_to_truth_labels(&mask, 8.0, 5.0, 0.05);
        assert_eq!(labels[0], QualityLabel::Noisy);
        assert_eq!(labels[1], QualityLabel::Noisy);
        assert_eq!(labels[2], QualityLabel::Clean);
        // 2 of 40 (5%) does not exceed the threshold
        let mut edge = vec![false; 40];
        edge[0] = true;
        edge[1] = true;
        assert_eq!(mask_to_truth_labels(&edge, 8.0, 5.0, 0.05)[0], QualityLabel::Clean);
    }

    #[test]
    fn truth_labels_mostly_agree_with_correlation_labeler() {
        // pipeline fidelity on the default calibration: >= 90% agreement
        let cfg = SynthConfig {
            n_subjects: 4,
            duration_s: 600.0,
            seed: 13,
            ..Default::default()
        };
        let label_cfg = labeling::LabelConfig::default();
        let mut agree = 0usize;
        let mut total = 0usize;
        for rec in gen_corpus(&cfg).unwrap() {
            let truth = mask_to_truth_labels(&rec.artifact_mask, cfg.fs, 5.0, 0.05);
            let t = segment(&rec.target, 5.0).unwrap();
            let r = segment(&rec.reference, 5.0).unwrap();
            let labeled =
                labeling::label_record(&t, &r, &labeling::ReviewerMarks::default(), &label_cfg)
                    .unwrap();
            for (lw, tl) in labeled.iter().zip(&truth) {
                total += 1;
                agree += (lw.label == *tl) as usize;
            }
        }
        let share = agree as f64 / total as f64;
        assert!(share >= 0.90, "labeler agreement {share:.4}");
    }

    #[test]
    fn rejects_empty_and_short_configs() {
        let cfg = SynthConfig {
            n_subjects: 0,
            ..Default::default()
        };
        assert!(gen_corpus(&cfg).is_err());
        let cfg = SynthConfig {
            duration_s: 20.0,
            ..Default::default()
        };
        assert!(gen_subject(&cfg, 0).is_err());
    }
}
