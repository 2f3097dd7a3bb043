//! Random-forest feature selection: rank by importance over group folds of
//! the training data, then keep the subset size that validates best.

use super::folds::{split_pairs, take_rows};
use super::search::{accuracy, fit_predict, Params};
use super::{ClassifierKind, Dataset, PipelineConfig};
use crate::error::Result;
use crate::seeds;

/// Default hyperparameters used to score candidate subset sizes.
fn default_params(kind: ClassifierKind, n_features: usize, cfg: &PipelineConfig) -> Params {
    match kind {
        ClassifierKind::Svm => Params::Svm {
            c: 1.0,
            gamma: 1.0 / n_features.max(1) as f64,
        },
        ClassifierKind::Rf => Params::Rf {
            trees: cfg.selection_trees,
        },
        ClassifierKind::Knn => Params::Knn { k: cfg.knn_k },
    }
}

/// Rank features by forest importance per group split, average the ranks,
/// then pick the `k` from `cfg.k_grid` whose top-k subset scores the best
/// mean validation accuracy with the downstream classifier (ties prefer the
/// smaller k). Returns the selected indices in ascending order.
pub fn select_features(train: &Dataset, cfg: &PipelineConfig, seed: u64) -> Result<Vec<usize>> {
    let d = train.n_features();
    let all: Vec<usize> = (0..d).collect();
    let splits = split_pairs(train, cfg.inner_folds);
    if splits.len() < 2 {
        // a single group cannot be cross-validated; keep everything
        return Ok(all);
    }

    // average rank (0 = most important) across splits
    let max_features = (d as f64).sqrt().floor().max(1.0) as usize;
    let mut rank_sum = vec![0.0; d];
    for (si, (train_idx, _)) in splits.iter().enumerate() {
        let tr = take_rows(train, train_idx);
        let rf = super::forest::rf_train(
            &tr,
            cfg.selection_trees,
            max_features,
            seeds::child_seed(seed, "sel-rank", si as u64),
        )?;
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| {
            rf.importances[b]
                .total_cmp(&rf.importances[a])
                .then(a.cmp(&b))
        });
        for (pos, &feature) in order.iter().enumerate() {
            rank_sum[feature] += pos as f64;
        }
    }
    let mut by_avg_rank: Vec<usize> = (0..d).collect();
    by_avg_rank.sort_by(|&a, &b| rank_sum[a].total_cmp(&rank_sum[b]).then(a.cmp(&b)));

    // score each candidate subset size
    let mut ks: Vec<usize> = cfg.k_grid.iter().map(|&k| k.clamp(1, d)).collect();
    ks.dedup();
    let mut best: Option<(f64, usize)> = None; // accuracy, k
    for &k in &ks {
        let subset: Vec<usize> = by_avg_rank[..k].to_vec();
        let params = default_params(cfg.classifier, k, cfg);
        let mut acc = 0.0;
        for (si, (train_idx, val_idx)) in splits.iter().enumerate() {
            let tr = take_rows(train, train_idx).select_columns(&subset);
            let val = take_rows(train, val_idx).select_columns(&subset);
            let out = fit_predict(
                &tr,
                &val.x,
                params,
                cfg,
                seeds::child_seed(seed, "sel-eval", (k * splits.len() + si) as u64),
            )?;
            acc += accuracy(&out.preds, &val.y);
        }
        acc /= splits.len() as f64;
        if best.map_or(true, |(a, _)| acc > a) {
            best = Some((acc, k));
        }
    }
    let (_, k) = best.expect("k_grid is never empty");
    let mut selected: Vec<usize> = by_avg_rank[..k].to_vec();
    selected.sort_unstable();
    Ok(selected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ml::NOISY;
    use rand::Rng;

    /// 52-feature rows where only `informative` carry signal.
    fn informative_dataset(informative: &[usize], n: usize, seed: u64) -> Dataset {
        let mut rng = seeds::unit_rng(seed, "sel-data", 0);
        let mut ds = Dataset::default();
        for i in 0..n {
            let y = (i % 2) as u8;
            let mut row: Vec<f64> = (0..52)
                .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            for &j in informative {
                let shift = if y == NOISY { 1.5 } else { -1.5 };
                row[j] = shift + rng.sample::<f64, _>(rand_distr::StandardNormal);
            }
            ds.push(row, y, format!("g{}", i % 8), i);
        }
        ds
    }

    #[test]
    fn recovers_informative_features() {
        let informative = [7usize, 23, 41];
        let ds = informative_dataset(&informative, 240, 401);
        let cfg = PipelineConfig {
            selection_trees: 60,
            ..Default::default()
        };
        let selected = select_features(&ds, &cfg, 17).unwrap();
        for j in informative {
            assert!(selected.contains(&j), "missing {j} in {selected:?}");
        }
    }

    #[test]
    fn degenerate_grid_disables_selection() {
        let ds = informative_dataset(&[3], 80, 409);
        let cfg = PipelineConfig {
            k_grid: vec![52],
            selection_trees: 20,
            ..Default::default()
        };
        let selected = select_features(&ds, &cfg, 1).unwrap();
        assert_eq!(selected, (0..52).collect::<Vec<_>>());
    }

    #[test]
    fn selection_is_deterministic() {
        let ds = informative_dataset(&[2, 9], 120, 419);
        let cfg = PipelineConfig {
            selection_trees: 30,
            ..Default::default()
        };
        let a = select_features(&ds, &cfg, 5).unwrap();
        let b = select_features(&ds, &cfg, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_group_returns_all_features() {
        let mut ds = Dataset::default();
        let mut rng = seeds::unit_rng(421, "one", 0);
        for i in 0..40 {
            ds.push(
                (0..10).map(|_| rng.random_range(-1.0..1.0)).collect(),
                (i % 2) as u8,
                "only",
                i,
            );
        }
        let cfg = PipelineConfig::default();
        assert_eq!(select_features(&ds, &cfg, 3).unwrap().len(), 10);
    }
}
