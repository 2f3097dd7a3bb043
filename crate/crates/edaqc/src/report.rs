//! Evaluation reporting: per-feature class-separation tests, tracking of
//! features selected across folds, and the rule-based comparison summary.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, FEATURE_NAMES, N_FEATURES};
use crate::io::LabelRow;
use crate::labeling::QualityLabel;
use crate::ml::{welch_t_test, Confusion, Dataset, EvalReport, CLEAN, NOISY};

/// Welch test of one feature between the clean and noisy classes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureTest {
    /// 1-based canonical feature index.
    pub index: usize,
    pub name: String,
    pub t: f64,
    pub p: f64,
}

/// Per-feature Welch t-tests over all rows (clean vs noisy values). Features
/// are skipped when either class has fewer than 2 rows.
pub fn welch_table(ds: &Dataset) -> Vec<FeatureTest> {
    let mut out = Vec::new();
    for j in 0..ds.n_features().min(N_FEATURES) {
        let clean: Vec<f64> = (0..ds.n_rows())
            .filter(|&i| ds.y[i] == CLEAN)
            .map(|i| ds.x[i][j])
            .collect();
        let noisy: Vec<f64> = (0..ds.n_rows())
            .filter(|&i| ds.y[i] == NOISY)
            .map(|i| ds.x[i][j])
            .collect();
        if clean.len() < 2 || noisy.len() < 2 {
            continue;
        }
        if let Ok((t, p)) = welch_t_test(&clean, &noisy) {
            out.push(FeatureTest {
                index: j + 1,
                name: FEATURE_NAMES[j].to_string(),
                t,
                p,
            });
        }
    }
    out
}

/// How often each feature was selected across LOSO folds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionTrackingRow {
    /// 1-based canonical feature index.
    pub index: usize,
    pub name: String,
    pub folds_selected: usize,
    pub total_folds: usize,
}

/// Count selections per feature, most-consistent first (ties by index).
pub fn selection_tracking(report: &EvalReport) -> Vec<SelectionTrackingRow> {
    let total = report.folds.len();
    let mut counts = vec![0usize; N_FEATURES];
    for fold in &report.folds {
        for &j in &fold.selected_features {
            if j < N_FEATURES {
                counts[j] += 1;
            }
        }
    }
    let mut rows: Vec<SelectionTrackingRow> = counts
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0)
        .map(|(j, c)| SelectionTrackingRow {
            index: j + 1,
            name: FEATURE_NAMES[j].to_string(),
            folds_selected: *c,
            total_folds: total,
        })
        .collect();
    rows.sort_by(|a, b| b.folds_selected.cmp(&a.folds_selected).then(a.index.cmp(&b.index)));
    rows
}

/// Features selected in more than half the folds (the consistent set).
pub fn consistently_selected(report: &EvalReport) -> Vec<usize> {
    selection_tracking(report)
        .into_iter()
        .filter(|r| 2 * r.folds_selected > r.total_folds)
        .map(|r| r.index - 1)
        .collect()
}

/// Rule-screen accuracy against the correlation labels, per subject and
/// aggregated, over exactly the windows present in the features file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub per_subject: Vec<SubjectAccuracy>,
    pub mean_accuracy: f64,
    /// Population standard deviation across subjects.
    pub std_accuracy: f64,
    pub confusion: Confusion,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubjectAccuracy {
    pub subject_id: String,
    pub n_windows: usize,
    pub accuracy: f64,
}

pub fn baseline_summary(
    feature_rows: &[FeatureVector],
    rule_labels: &[LabelRow],
) -> Result<BaselineSummary> {
    let rule_of: HashMap<(String, usize), QualityLabel> = rule_labels
        .iter()
        .map(|r| ((r.subject_id.clone(), r.window_index), r.label))
        .collect();
    let mut per: HashMap<String, (usize, usize)> = HashMap::new();
    let mut confusion = Confusion::default();
    for fv in feature_rows {
        if fv.label == QualityLabel::Discarded {
            continue;
        }
        let key = (fv.subject_id.clone(), fv.window_index);
        let Some(rule) = rule_of.get(&key) else {
            return Err(Error::format(format!(
                "rule labels missing window {} of subject {}",
                fv.window_index, fv.subject_id
            )));
        };
        let truth = u8::from(fv.label == QualityLabel::Noisy);
        let pred = u8::from(*rule == QualityLabel::Noisy);
        let entry = per.entry(fv.subject_id.clone()).or_insert((0, 0));
        entry.1 += 1;
        entry.0 += usize::from(pred == truth);
        match (pred, truth) {
            (NOISY, NOISY) => confusion.tp += 1,
            (NOISY, CLEAN) => confusion.fp += 1,
            (CLEAN, CLEAN) => confusion.tn += 1,
            _ => confusion.fn_ += 1,
        }
    }
    if per.is_empty() {
        return Err(Error::rejected("no windows to compare"));
    }
    let mut per_subject: Vec<SubjectAccuracy> = per
        .into_iter()
        .map(|(subject_id, (hits, n))| SubjectAccuracy {
            subject_id,
            n_windows: n,
            accuracy: hits as f64 / n as f64,
        })
        .collect();
    per_subject.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
    let accs: Vec<f64> = per_subject.iter().map(|s| s.accuracy).collect();
    Ok(BaselineSummary {
        mean_accuracy: crate::signal::mean(&accs),
        std_accuracy: crate::signal::population_variance(&accs).sqrt(),
        per_subject,
        confusion,
    })
}

/// Everything `evaluate` writes: the LOSO report per classifier, the rule
/// baseline, the per-feature tests, and the selection tracking.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub ml: EvalReport,
    pub baseline: Option<BaselineSummary>,
    pub welch: Vec<FeatureTest>,
    pub selection_tracking: Vec<SelectionTrackingRow>,
}

/// Table-style text rendering of a comparison report.
pub fn render_text(report: &ComparisonReport) -> String {
    let mut out = String::new();
    out.push_str("method               mean accuracy   std\n");
    if let Some(b) = &report.baseline {
        out.push_str(&format!(
            "rules                {:>12.2}% {:>6.2}%\n",
            100.0 * b.mean_accuracy,
            100.0 * b.std_accuracy
        ));
    }
    out.push_str(&format!(
        "{:<20} {:>12.2}% {:>6.2}%\n",
        format!("this pipeline ({})", report.ml.classifier),
        100.0 * report.ml.mean_accuracy,
        100.0 * report.ml.std_accuracy
    ));
    out.push_str(&format!(
        "folds: {}   balanced accuracy: {:.2}%   leakage audit: {}\n",
        report.ml.folds.len(),
        100.0 * report.ml.mean_balanced_accuracy,
        if report.ml.audit_ok { "ok" } else { "FAILED" }
    ));
    if !report.selection_tracking.is_empty() {
        out.push_str("\nconsistently selected features (folds selected / total):\n");
        for row in report.selection_tracking.iter().take(15) {
            out.push_str(&format!(
                "  [{:>2}] {:<16} {}/{}\n",
                row.index, row.name, row.folds_selected, row.total_folds
            ));
        }
    }
    if !report.welch.is_empty() {
        let significant = report.welch.iter().filter(|w| w.p < 0.01).count();
        out.push_str(&format!(
            "\nper-feature Welch tests: {}/{} significant at p < 0.01\n",
            significant,
            report.welch.len()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn welch_table_flags_separated_features() {
        let mut rng = crate::seeds::unit_rng(601, "rep", 0);
        let mut ds = Dataset::default();
        for i in 0..100 {
            let y = (i % 2) as u8;
            let mut row = vec![0.0; N_FEATURES];
            for (j, v) in row.iter_mut().enumerate() {
                *v = rng.random_range(-1.0..1.0) + if j == 4 && y == NOISY { 3.0 } else { 0.0 };
            }
            ds.push(row, y, "s1", i);
        }
        let table = welch_table(&ds);
        assert_eq!(table.len(), N_FEATURES);
        let row5 = table.iter().find(|r| r.index == 5).unwrap();
        assert!(row5.p < 1e-10);
        let insignificant = table.iter().filter(|r| r.p > 0.01).count();
        assert!(insignificant > 40, "only {insignificant} null features");
    }

    #[test]
    fn baseline_summary_joins_on_subject_and_window() {
        let feature_rows = vec![
            FeatureVector {
                values: vec![0.0; N_FEATURES],
                label: QualityLabel::Noisy,
                subject_id: "S01".into(),
                window_index: 0,
            },
            FeatureVector {
                values: vec![0.0; N_FEATURES],
                label: QualityLabel::Clean,
                subject_id: "S01".into(),
                window_index: 1,
            },
        ];
        let rules = vec![
            LabelRow {
                subject_id: "S01".into(),
                window_index: 0,
                r: None,
                label: QualityLabel::Noisy,
                method: "rules".into(),
            },
            LabelRow {
                subject_id: "S01".into(),
                window_index: 1,
                r: None,
                label: QualityLabel::Noisy,
                method: "rules".into(),
            },
        ];
        let summary = baseline_summary(&feature_rows, &rules).unwrap();
        assert_eq!(summary.per_subject.len(), 1);
        assert!((summary.mean_accuracy - 0.5).abs() < 1e-12);
        assert_eq!(summary.confusion.tp, 1);
        assert_eq!(summary.confusion.fp, 1);
    }

    #[test]
    fn baseline_summary_requires_full_coverage() {
        let feature_rows = vec![FeatureVector {
            values: vec![0.0; N_FEATURES],
            label: QualityLabel::Clean,
            subject_id: "S01".into(),
            window_index: 7,
        }];
        assert!(baseline_summary(&feature_rows, &[]).is_err());
    }
}
