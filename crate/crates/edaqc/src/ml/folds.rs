//! Group k-fold assignment that never splits a subject across train and
//! validation.

use super::Dataset;

/// Assign each distinct group (sorted) to a fold round-robin and return, per
/// fold, the validation row indices. When there are fewer groups than
/// requested folds, the fold count drops to the group count. Deterministic.
pub fn group_k_fold(ds: &Dataset, k: usize) -> Vec<Vec<usize>> {
    let groups = ds.distinct_groups();
    let k = k.min(groups.len()).max(1);
    let fold_of = |g: &str| -> usize {
        groups.iter().position(|x| x == g).unwrap() % k
    };
    let mut folds = vec![Vec::new(); k];
    for (i, g) in ds.groups.iter().enumerate() {
        folds[fold_of(g)].push(i);
    }
    folds
}

/// Train/validation row-index pairs for each fold.
pub fn split_pairs(ds: &Dataset, k: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let folds = group_k_fold(ds, k);
    folds
        .iter()
        .map(|val| {
            let in_val: std::collections::HashSet<usize> = val.iter().copied().collect();
            let train: Vec<usize> = (0..ds.n_rows()).filter(|i| !in_val.contains(i)).collect();
            (train, val.clone())
        })
        .collect()
}

/// Materialize a dataset from row indices.
pub fn take_rows(ds: &Dataset, rows: &[usize]) -> Dataset {
    let mut out = Dataset::default();
    for &i in rows {
        out.push(
            ds.x[i].clone(),
            ds.y[i],
            ds.groups[i].clone(),
            ds.window_index[i],
        );
    }
    out
}
