//! Clean/noisy adjudication of target windows by zero-lag correlation
//! against the simultaneous reference channel, with reviewer-mark override.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Window;

/// Decision thresholds. A window whose reference was marked noisy by a
/// reviewer is discarded unless the channel correlation is very high.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelConfig {
    pub clean_threshold: f64,
    pub override_threshold: f64,
    pub zero_var_epsilon: f64,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            clean_threshold: 0.85,
            override_threshold: 0.95,
            zero_var_epsilon: 1e-12,
        }
    }
}

impl LabelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.clean_threshold
            && self.clean_threshold < self.override_threshold
            && self.override_threshold <= 1.0)
        {
            return Err(Error::rejected(format!(
                "need 0 < clean_threshold ({}) < override_threshold ({}) <= 1",
                self.clean_threshold, self.override_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QualityLabel {
    Clean,
    Noisy,
    Discarded,
}

impl std::fmt::Display for QualityLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QualityLabel::Clean => write!(f, "Clean"),
            QualityLabel::Noisy => write!(f, "Noisy"),
            QualityLabel::Discarded => write!(f, "Discarded"),
        }
    }
}

impl std::str::FromStr for QualityLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Clean" => Ok(QualityLabel::Clean),
            "Noisy" => Ok(QualityLabel::Noisy),
            "Discarded" => Ok(QualityLabel::Discarded),
            other => Err(Error::format(format!("unknown label {other:?}"))),
        }
    }
}

/// One reviewer's half-open noisy interval on the reference channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarkEntry {
    pub reviewer: String,
    pub start_s: f64,
    pub end_s: f64,
}

/// Marked-noisy intervals from the independent reviewers.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReviewerMarks {
    pub entries: Vec<MarkEntry>,
}

impl ReviewerMarks {
    pub fn new(entries: Vec<MarkEntry>) -> Self {
        ReviewerMarks { entries }
    }
}

/// A labeled target window together with the evidence behind its label.
#[derive(Debug, Clone)]
pub struct LabeledWindow {
    pub window: Window,
    pub r: f64,
    pub ref_marked_noisy: bool,
    pub label: QualityLabel,
}

/// Zero-lag Pearson correlation with pinned degenerate rules: two flat
/// windows at the same level correlate perfectly, one flat window against a
/// varying one not at all.
pub fn pearson(x: &[f64], y: &[f64], zero_var_epsilon: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::rejected(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::rejected("correlation needs at least 2 samples"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let vx = sxx / n;
    let vy = syy / n;
    let x_flat = vx < zero_var_epsilon;
    let y_flat = vy < zero_var_epsilon;
    if x_flat && y_flat {
        return Ok(if (mx - my).abs() < zero_var_epsilon { 1.0 } else { 0.0 });
    }
    if x_flat || y_flat {
        return Ok(0.0);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// True iff any reviewer's interval overlaps `[start_s, end_s)` by at least
/// one sample period.
pub fn ref_marked(start_s: f64, end_s: f64, sample_period_s: f64, marks: &ReviewerMarks) -> bool {
    marks.entries.iter().any(|m| {
        let overlap = end_s.min(m.end_s) - start_s.max(m.start_s);
        overlap >= sample_period_s
    })
}

/// Apply the decision rule to an aligned target/reference window pair.
pub fn label_window(
    target: &Window,
    reference: &Window,
    marked: bool,
    cfg: &LabelConfig,
) -> Result<LabeledWindow> {
    if target.index != reference.index
        || target.fs != reference.fs
        || target.samples.len() != reference.samples.len()
    {
        return Err(Error::rejected(format!(
            "misaligned windows: target (index {}, fs {}, len {}) vs reference (index {}, fs {}, len {})",
            target.index,
            target.fs,
            target.samples.len(),
            reference.index,
            reference.fs,
            reference.samples.len()
        )));
    }
    cfg.validate()?;
    let r = pearson(&target.samples, &reference.samples, cfg.zero_var_epsilon)?;
    let label = if marked {
        if r > cfg.override_threshold {
            QualityLabel::Clean
        } else {
            QualityLabel::Discarded
        }
    } else if r > cfg.clean_threshold {
        QualityLabel::Clean
    } else {
        QualityLabel::Noisy
    };
    Ok(LabeledWindow {
        window: target.clone(),
        r,
        ref_marked_noisy: marked,
        label,
    })
}

/// Label every window pair of a record. Output order follows window index.
pub fn label_record(
    targets: &[Window],
    references: &[Window],
    marks: &ReviewerMarks,
    cfg: &LabelConfig,
) -> Result<Vec<LabeledWindow>> {
    if targets.len() != references.len() {
        return Err(Error::rejected(format!(
            "window count mismatch: {} target vs {} reference",
            targets.len(),
            references.len()
        )));
    }
    let pairs: Vec<(usize, &Window, &Window)> = targets
        .iter()
        .zip(references)
        .enumerate()
        .map(|(i, (t, r))| (i, t, r))
        .collect();
    let labeled = crate::exec::map_slice(&pairs, |(_, t, r)| {
        let (start, end) = r.span();
        let marked = ref_marked(start, end, 1.0 / r.fs, marks);
        label_window(t, r, marked, cfg)
    });
    labeled.into_iter().collect()
}
