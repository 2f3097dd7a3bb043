//! Leave-one-subject-out evaluation with per-fold standardization, feature
//! selection, and grid search fit strictly on the training fold.

use serde::{Deserialize, Serialize};

use super::search::{fit_predict, grid_search, GridPoint, Params};
use super::selection::select_features;
use super::standardize::{standardize_fit, StandardizerParams};
use super::{ClassifierKind, Dataset, PipelineConfig, CLEAN, NOISY};
use crate::error::{Error, Result};
use crate::exec;
use crate::seeds;

/// Confusion counts with Noisy as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_preds(preds: &[u8], truth: &[u8]) -> Confusion {
        let mut c = Confusion::default();
        for (p, t) in preds.iter().zip(truth) {
            match (*p, *t) {
                (NOISY, NOISY) => c.tp += 1,
                (NOISY, CLEAN) => c.fp += 1,
                (CLEAN, CLEAN) => c.tn += 1,
                _ => c.fn_ += 1,
            }
        }
        c
    }

    pub fn accuracy(&self) -> f64 {
        let n = self.tp + self.fp + self.tn + self.fn_;
        if n == 0 {
            return 0.0;
        }
        (self.tp + self.tn) as f64 / n as f64
    }

    /// Mean recall over the classes present in the test fold.
    pub fn balanced_accuracy(&self) -> f64 {
        let mut parts = Vec::new();
        if self.tp + self.fn_ > 0 {
            parts.push(self.tp as f64 / (self.tp + self.fn_) as f64);
        }
        if self.tn + self.fp > 0 {
            parts.push(self.tn as f64 / (self.tn + self.fp) as f64);
        }
        if parts.is_empty() {
            return 0.0;
        }
        parts.iter().sum::<f64>() / parts.len() as f64
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldReport {
    pub held_out: String,
    pub n_test: usize,
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub confusion: Confusion,
    /// 0-based canonical feature indices used by the fold's final model.
    pub selected_features: Vec<usize>,
    pub chosen_params: Params,
    /// Every grid point evaluated for this fold, with its validation score.
    pub grid: Vec<GridPoint>,
    pub train_subjects: Vec<String>,
    /// Standardizer fit on the training fold (recorded for the audit).
    pub standardizer: StandardizerParams,
    pub audit_ok: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub classifier: ClassifierKind,
    pub selection: bool,
    pub seed: u64,
    pub folds: Vec<FoldReport>,
    pub skipped: Vec<String>,
    pub mean_accuracy: f64,
    /// Population standard deviation of fold accuracies.
    pub std_accuracy: f64,
    pub mean_balanced_accuracy: f64,
    pub audit_ok: bool,
    pub warnings: Vec<String>,
}

pub(crate) fn fold_seed(master: u64, fold_idx: usize) -> u64 {
    seeds::child_seed(master, "loso-fold", fold_idx as u64)
}

fn run_fold(
    ds: &Dataset,
    subject: &str,
    fold_idx: usize,
    cfg: &PipelineConfig,
    master_seed: u64,
) -> Result<FoldReport> {
    let seed = fold_seed(master_seed, fold_idx);
    let train = ds.subset(|g| g != subject);
    let test = ds.subset(|g| g == subject);
    let mut warnings = Vec::new();

    // id audit: the held-out subject must not appear in any training row
    let audit_ok = !train.groups.iter().any(|g| g == subject)
        && train.n_rows() + test.n_rows() == ds.n_rows();

    let standardizer = standardize_fit(&train);
    let d = train.n_features();

    let (selected, chosen_params, grid, preds) = if !train.has_both_classes() {
        warnings.push(format!(
            "training fold for {subject} holds a single class; constant prediction"
        ));
        let all: Vec<usize> = (0..d).collect();
        let out = fit_predict(
            &train,
            &test.x,
            Params::Rf { trees: 1 },
            cfg,
            seeds::child_seed(seed, "final", 0),
        )?;
        (all, Params::Rf { trees: 1 }, Vec::new(), out.preds)
    } else {
        let selected = if cfg.selection {
            select_features(&train, cfg, seed)?
        } else {
            (0..d).collect()
        };
        let train_sel = train.select_columns(&selected);
        let test_sel = test.select_columns(&selected);
        let (best, grid) = grid_search(&train_sel, cfg.classifier, cfg, seed)?;
        let out = fit_predict(
            &train_sel,
            &test_sel.x,
            best,
            cfg,
            seeds::child_seed(seed, "final", 0),
        )?;
        if let Some(w) = out.warning {
            warnings.push(w);
        }
        (selected, best, grid, out.preds)
    };

    let confusion = Confusion::from_preds(&preds, &test.y);
    let mut train_subjects = train.distinct_groups();
    train_subjects.sort();
    Ok(FoldReport {
        held_out: subject.to_string(),
        n_test: test.n_rows(),
        accuracy: confusion.accuracy(),
        balanced_accuracy: confusion.balanced_accuracy(),
        confusion,
        selected_features: selected,
        chosen_params,
        grid,
        train_subjects,
        standardizer,
        audit_ok,
        warnings,
    })
}

/// Evaluate the configured pipeline leave-one-subject-out. Folds are
/// independent (each derives its own seed from its sorted-subject index) and
/// run in parallel.
pub fn loso_evaluate(ds: &Dataset, cfg: &PipelineConfig, seed: u64) -> Result<EvalReport> {
    let subjects = ds.distinct_groups();
    if subjects.len() < 2 {
        return Err(Error::rejected(format!(
            "LOSO needs at least 2 subjects, got {}",
            subjects.len()
        )));
    }
    let indexed: Vec<(usize, String)> = subjects.into_iter().enumerate().collect();
    let results = exec::map_slice(&indexed, |(idx, subject)| {
        run_fold(ds, subject, *idx, cfg, seed)
    });

    let mut folds = Vec::new();
    let mut skipped = Vec::new();
    let mut warnings = Vec::new();
    for (res, (_, subject)) in results.into_iter().zip(&indexed) {
        match res {
            Ok(f) => {
                if f.n_test == 0 {
                    warnings.push(format!("subject {subject} has no test windows; fold skipped"));
                    skipped.push(subject.clone());
                } else {
                    folds.push(f);
                }
            }
            Err(e) => return Err(e),
        }
    }
    if folds.is_empty() {
        return Err(Error::rejected("every fold was skipped"));
    }
    let accs: Vec<f64> = folds.iter().map(|f| f.accuracy).collect();
    let mean_accuracy = crate::signal::mean(&accs);
    let std_accuracy = crate::signal::population_variance(&accs).sqrt();
    let bals: Vec<f64> = folds.iter().map(|f| f.balanced_accuracy).collect();
    let audit_ok = folds.iter().all(|f| f.audit_ok);
    for f in &folds {
        warnings.extend(f.warnings.iter().cloned());
    }
    Ok(EvalReport {
        classifier: cfg.classifier,
        selection: cfg.selection,
        seed,
        folds,
        skipped,
        mean_accuracy,
        std_accuracy,
        mean_balanced_accuracy: crate::signal::mean(&bals),
        audit_ok,
        warnings,
    })
}

/// Full leakage audit: recompute each fold's standardizer, selection, and
/// grid choice from the training rows alone and require bit-identical
/// agreement with what the report recorded.
pub fn recompute_audit(ds: &Dataset, cfg: &PipelineConfig, report: &EvalReport) -> Result<()> {
    let subjects = ds.distinct_groups();
    for (idx, subject) in subjects.iter().enumerate() {
        let Some(fold) = report.folds.iter().find(|f| &f.held_out == subject) else {
            continue; // skipped fold
        };
        let seed = fold_seed(report.seed, idx);
        let train = ds.subset(|g| g != subject);
        if train.groups.iter().any(|g| g == subject) {
            return Err(Error::rejected(format!(
                "audit: held-out subject {subject} leaked into its training fold"
            )));
        }
        let std = standardize_fit(&train);
        if std != fold.standardizer {
            return Err(Error::rejected(format!(
                "audit: fold {subject} standardizer does not derive from its training rows"
            )));
        }
        if !train.has_both_classes() {
            continue; // degenerate constant-prediction fold
        }
        let selected = if cfg.selection {
            select_features(&train, cfg, seed)?
        } else {
            (0..train.n_features()).collect()
        };
        if selected != fold.selected_features {
            return Err(Error::rejected(format!(
                "audit: fold {subject} feature selection does not derive from its training rows"
            )));
        }
        let train_sel = train.select_columns(&selected);
        let (best, _) = grid_search(&train_sel, cfg.classifier, cfg, seed)?;
        if best != fold.chosen_params {
            return Err(Error::rejected(format!(
                "audit: fold {subject} grid choice does not derive from its training rows"
            )));
        }
    }
    Ok(())
}
