//! Deployable model: standardizer, selected features, and the fitted
//! classifier, trained on a whole dataset with the same inner protocol as a
//! LOSO training fold.

use serde::{Deserialize, Serialize};

use super::search::{grid_search, GridPoint, Params};
use super::selection::select_features;
use super::standardize::{standardize_apply, standardize_fit, StandardizerParams};
use super::{
    forest::RfModel, knn, svm::SvmModel, ClassifierKind, Dataset, PipelineConfig,
};
use crate::error::{Error, Result};
use crate::features::FEATURE_MAP_VERSION;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelPayload {
    Rf(RfModel),
    Svm(SvmModel),
    /// Standardized training matrix and labels; KNN is instance-based.
    Knn {
        train_x: Vec<Vec<f64>>,
        train_y: Vec<u8>,
        k: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub feature_map_version: String,
    pub classifier: ClassifierKind,
    /// 0-based canonical feature indices the model consumes, ascending.
    pub selected_features: Vec<usize>,
    /// Fit on the full training set; applied before SVM/KNN prediction.
    pub standardizer: StandardizerParams,
    pub chosen_params: Params,
    pub grid: Vec<GridPoint>,
    pub payload: ModelPayload,
    pub seed: u64,
}

impl TrainedModel {
    /// Predict classes for raw (unstandardized) canonical feature rows.
    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<u8>> {
        for row in rows {
            if row.len() <= *self.selected_features.iter().max().unwrap_or(&0) {
                return Err(Error::rejected(format!(
                    "feature row of length {} cannot satisfy selected index {}",
                    row.len(),
                    self.selected_features.iter().max().unwrap()
                )));
            }
        }
        let selected: Vec<Vec<f64>> = rows
            .iter()
            .map(|row| self.selected_features.iter().map(|&j| row[j]).collect())
            .collect();
        match &self.payload {
            ModelPayload::Rf(model) => Ok(model.predict_batch(&selected)),
            ModelPayload::Svm(model) => {
                let x = standardize_apply(&self.standardizer, &selected);
                Ok(model.predict_batch(&x))
            }
            ModelPayload::Knn { train_x, train_y, k } => {
                let x = standardize_apply(&self.standardizer, &selected);
                knn::knn_predict_batch(train_x, train_y, &x, *k)
            }
        }
    }
}

/// Fit the full pipeline (selection, grid search, final classifier) on every
/// row of `ds`, producing a deployable model.
pub fn train_full(ds: &Dataset, cfg: &PipelineConfig, seed: u64) -> Result<TrainedModel> {
    ds.validate_for_training()?;
    if !ds.has_both_classes() {
        return Err(Error::rejected("training needs both classes present"));
    }
    let d = ds.n_features();
    let selected = if cfg.selection {
        select_features(ds, cfg, seed)?
    } else {
        (0..d).collect()
    };
    let ds_sel = ds.select_columns(&selected);
    let (chosen_params, grid) = grid_search(&ds_sel, cfg.classifier, cfg, seed)?;
    let standardizer = standardize_fit(&ds_sel);

    let payload = match chosen_params {
        Params::Rf { trees } => {
            let max_features = (ds_sel.n_features() as f64).sqrt().floor().max(1.0) as usize;
            ModelPayload::Rf(super::forest::rf_train(
                &ds_sel,
                trees,
                max_features,
                crate::seeds::child_seed(seed, "final", 0),
            )?)
        }
        Params::Svm { c, gamma } => {
            let x = standardize_apply(&standardizer, &ds_sel.x);
            ModelPayload::Svm(super::svm::svm_train(
                &x,
                &ds_sel.y,
                super::svm::Kernel::Rbf { gamma },
                c,
                cfg.svm_tol,
                cfg.svm_max_passes,
            )?)
        }
        Params::Knn { k } => ModelPayload::Knn {
            train_x: standardize_apply(&standardizer, &ds_sel.x),
            train_y: ds_sel.y.clone(),
            k: k.min(ds_sel.n_rows()),
        },
    };
    Ok(TrainedModel {
        format_version: 1,
        feature_map_version: FEATURE_MAP_VERSION.to_string(),
        classifier: cfg.classifier,
        selected_features: selected,
        standardizer,
        chosen_params,
        grid,
        payload,
        seed,
    })
}
