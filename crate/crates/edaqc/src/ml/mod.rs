//! Classifiers, feature selection, grid search, leave-one-subject-out
//! evaluation, and the Welch t-test used for feature analysis.

mod folds;
mod forest;
mod knn;
mod loso;
mod model;
mod search;
mod selection;
mod standardize;
mod svm;
mod welch;

pub use folds::{group_k_fold, split_pairs, take_rows};
pub use forest::{rf_train, RfModel};
pub use knn::{knn_predict, knn_predict_batch};
pub use loso::{loso_evaluate, recompute_audit, Confusion, EvalReport, FoldReport};
pub use model::{train_full, ModelPayload, TrainedModel};
pub use search::{candidate_points, fit_predict, grid_search, GridPoint, Params};
pub use selection::select_features;
pub use standardize::{
    standardize_apply, standardize_dataset, standardize_fit, StandardizerParams,
};
pub use svm::{svm_train, svm_train_precomputed, Kernel, SmoResult, SvmModel};
pub use welch::{beta_inc, welch_t_test};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::QualityLabel;

/// Class encoding used across the classifiers.
pub const CLEAN: u8 = 0;
pub const NOISY: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Rf,
    Svm,
    Knn,
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClassifierKind::Rf => write!(f, "rf"),
            ClassifierKind::Svm => write!(f, "svm"),
            ClassifierKind::Knn => write!(f, "knn"),
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rf" => Ok(ClassifierKind::Rf),
            "svm" => Ok(ClassifierKind::Svm),
            "knn" => Ok(ClassifierKind::Knn),
            other => Err(Error::format(format!("unknown classifier {other:?}"))),
        }
    }
}

/// Feature matrix with binary labels and a group (subject) per row.
/// Discarded windows never enter a dataset.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<u8>,
    pub groups: Vec<String>,
    /// Window index per row, carried for joins and audits.
    pub window_index: Vec<usize>,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.x.len()
    }

    pub fn n_features(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn push(&mut self, row: Vec<f64>, y: u8, group: impl Into<String>, window_index: usize) {
        self.x.push(row);
        self.y.push(y);
        self.groups.push(group.into());
        self.window_index.push(window_index);
    }

    /// Build from labeled feature vectors, excluding Discarded windows.
    pub fn from_feature_vectors(rows: &[crate::features::FeatureVector]) -> Self {
        let mut ds = Dataset::default();
        for fv in rows {
            let y = match fv.label {
                QualityLabel::Clean => CLEAN,
                QualityLabel::Noisy => NOISY,
                QualityLabel::Discarded => continue,
            };
            ds.push(fv.values.clone(), y, fv.subject_id.clone(), fv.window_index);
        }
        ds
    }

    /// Distinct groups, sorted.
    pub fn distinct_groups(&self) -> Vec<String> {
        let mut g: Vec<String> = self.groups.clone();
        g.sort();
        g.dedup();
        g
    }

    /// Rows whose group passes the filter, preserving order.
    pub fn subset(&self, keep: impl Fn(&str) -> bool) -> Dataset {
        let mut out = Dataset::default();
        for i in 0..self.n_rows() {
            if keep(&self.groups[i]) {
                out.push(
                    self.x[i].clone(),
                    self.y[i],
                    self.groups[i].clone(),
                    self.window_index[i],
                );
            }
        }
        out
    }

    /// Copy with columns restricted to `indices` (0-based), in that order.
    pub fn select_columns(&self, indices: &[usize]) -> Dataset {
        Dataset {
            x: self
                .x
                .iter()
                .map(|row| indices.iter().map(|&j| row[j]).collect())
                .collect(),
            y: self.y.clone(),
            groups: self.groups.clone(),
            window_index: self.window_index.clone(),
        }
    }

    pub fn validate_for_training(&self) -> Result<()> {
        if self.n_rows() < 2 {
            return Err(Error::rejected(format!(
                "training needs at least 2 rows, got {}",
                self.n_rows()
            )));
        }
        Ok(())
    }

    pub fn has_both_classes(&self) -> bool {
        self.y.contains(&CLEAN) && self.y.contains(&NOISY)
    }
}

/// Pipeline settings for selection, tuning, and evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub classifier: ClassifierKind,
    pub selection: bool,
    /// Candidate feature-subset sizes scored during selection.
    pub k_grid: Vec<usize>,
    pub svm_c_grid: Vec<f64>,
    pub svm_gamma_grid: Vec<f64>,
    pub rf_trees: usize,
    /// Trees for the ranking forests inside selection.
    pub selection_trees: usize,
    pub knn_k: usize,
    /// Group-fold count used inside training folds.
    pub inner_folds: usize,
    pub svm_tol: f64,
    pub svm_max_passes: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            classifier: ClassifierKind::Svm,
            selection: true,
            k_grid: vec![5, 10, 15, 20, 30, 52],
            svm_c_grid: vec![1.0, 10.0, 100.0, 1000.0],
            svm_gamma_grid: vec![0.001, 0.01, 0.1, 1.0],
            rf_trees: 500,
            selection_trees: 200,
            knn_k: 5,
            inner_folds: 5,
            svm_tol: 1e-3,
            svm_max_passes: 400,
        }
    }
}
