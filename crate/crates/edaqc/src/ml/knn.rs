//! K-nearest-neighbor prediction with pinned tie rules.

use crate::error::{Error, Result};

use super::{CLEAN, NOISY};

/// Majority class among the `k` Euclidean nearest training rows. Distance
/// ties prefer the lower row index; vote ties go to Noisy.
pub fn knn_predict(train_x: &[Vec<f64>], train_y: &[u8], x: &[f64], k: usize) -> Result<u8> {
    if train_x.is_empty() {
        return Err(Error::rejected("empty training set"));
    }
    if k == 0 || k > train_x.len() {
        return Err(Error::rejected(format!(
            "k = {k} out of range for {} training rows",
            train_x.len()
        )));
    }
    let mut dist: Vec<(f64, usize)> = train_x
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let d2: f64 = row.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2, i)
        })
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut votes = [0usize; 2];
    for (_, i) in dist.iter().take(k) {
        votes[train_y[*i] as usize] += 1;
    }
    Ok(if votes[NOISY as usize] >= votes[CLEAN as usize] {
        NOISY
    } else {
        CLEAN
    })
}

pub fn knn_predict_batch(
    train_x: &[Vec<f64>],
    train_y: &[u8],
    rows: &[Vec<f64>],
    k: usize,
) -> Result<Vec<u8>> {
    rows.iter()
        .map(|x| knn_predict(train_x, train_y, x, k))
        .collect()
}
