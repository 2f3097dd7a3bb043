//! Per-feature z-scoring fit on training rows only.

use serde::{Deserialize, Serialize};

use super::Dataset;

const SIGMA_EPS: f64 = 1e-12;

/// Training-fold means and population standard deviations. Constant
/// features (sigma below the guard) transform to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizerParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn standardize_fit(train: &Dataset) -> StandardizerParams {
    let n = train.n_rows() as f64;
    let d = train.n_features();
    let mut mean = vec![0.0; d];
    for row in &train.x {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; d];
    for row in &train.x {
        for j in 0..d {
            let diff = row[j] - mean[j];
            var[j] += diff * diff;
        }
    }
    let std = var.iter().map(|v| (v / n).sqrt()).collect();
    StandardizerParams { mean, std }
}

pub fn standardize_apply(params: &StandardizerParams, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    x.iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, v)| {
                    if params.std[j] < SIGMA_EPS {
                        0.0
                    } else {
                        (v - params.mean[j]) / params.std[j]
                    }
                })
                .collect()
        })
        .collect()
}

/// Convenience: standardized copy of a dataset.
pub fn standardize_dataset(params: &StandardizerParams, ds: &Dataset) -> Dataset {
    Dataset {
        x: standardize_apply(params, &ds.x),
        y: ds.y.clone(),
        groups: ds.groups.clone(),
        window_index: ds.window_index.clone(),
    }
}
