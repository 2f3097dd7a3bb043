//! Random forest with Gini splits, bootstrap resampling, and mean-decrease
//! -in-impurity feature importances. Trees derive their RNG stream from
//! `(seed, tree index)`, so training is bit-identical for any worker count.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, CLEAN, NOISY};
use crate::error::{Error, Result};
use crate::exec;
use crate::seeds;

const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: [u32; 2],
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> u8 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { counts } => {
                    // vote ties go to Noisy
                    return if counts[NOISY as usize] >= counts[CLEAN as usize] {
                        NOISY
                    } else {
                        CLEAN
                    };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RfModel {
    pub trees: Vec<Tree>,
    pub seed: u64,
    pub n_features: usize,
    /// Mean decrease in Gini impurity per feature, normalized to sum 1 when
    /// any split exists.
    pub importances: Vec<f64>,
    /// Set when the training data held a single class; the model then
    /// predicts that class constantly.
    pub single_class: bool,
}

impl RfModel {
    pub fn predict(&self, x: &[f64]) -> u8 {
        let mut votes = [0usize; 2];
        for tree in &self.trees {
            votes[tree.predict(x) as usize] += 1;
        }
        if votes[NOISY as usize] >= votes[CLEAN as usize] {
            NOISY
        } else {
            CLEAN
        }
    }

    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Vec<u8> {
        rows.iter().map(|r| self.predict(r)).collect()
    }
}

fn gini(counts: [u32; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p0 = counts[0] as f64 / n;
    let p1 = counts[1] as f64 / n;
    1.0 - p0 * p0 - p1 * p1
}

struct TreeBuilder<'a> {
    ds: &'a Dataset,
    max_features: usize,
    n_root: f64,
    nodes: Vec<Node>,
    importance: Vec<f64>,
    rng: rand_chacha::ChaCha8Rng,
}

impl TreeBuilder<'_> {
    /// Depth-first growth; node order (and so RNG consumption) is fixed.
    fn grow(&mut self, rows: Vec<usize>) -> usize {
        let mut counts = [0u32; 2];
        for &i in &rows {
            counts[self.ds.y[i] as usize] += 1;
        }
        let node_gini = gini(counts);
        if counts[0] == 0 || counts[1] == 0 {
            self.nodes.push(Node::Leaf { counts });
            return self.nodes.len() - 1;
        }

        // candidate features: partial Fisher-Yates draw, then index order so
        // equal-gain ties resolve to the lowest feature index
        let d = self.ds.n_features();
        let mut pool: Vec<usize> = (0..d).collect();
        let take = self.max_features.min(d);
        for j in 0..take {
            let pick = self.rng.random_range(j..d);
            pool.swap(j, pick);
        }
        let mut candidates: Vec<usize> = pool[..take].to_vec();
        candidates.sort_unstable();

        let mut best: Option<(f64, usize, f64)> = None; // gain, feature, threshold
        let mut scratch: Vec<(f64, u8)> = Vec::with_capacity(rows.len());
        for &feature in &candidates {
            scratch.clear();
            scratch.extend(rows.iter().map(|&i| (self.ds.x[i][feature], self.ds.y[i])));
            scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = [0u32; 2];
            let mut right = counts;
            let n = rows.len() as f64;
            for k in 0..scratch.len() - 1 {
                left[scratch[k].1 as usize] += 1;
                right[scratch[k].1 as usize] -= 1;
                if scratch[k].0 == scratch[k + 1].0 {
                    continue;
                }
                let n_left = (k + 1) as f64;
                let n_right = n - n_left;
                let gain =
                    node_gini - (n_left / n) * gini(left) - (n_right / n) * gini(right);
                if gain > MIN_GAIN && best.map_or(true, |(g, _, _)| gain > g) {
                    let threshold = 0.5 * (scratch[k].0 + scratch[k + 1].0);
                    best = Some((gain, feature, threshold));
                }
            }
        }

        let Some((gain, feature, threshold)) = best else {
            self.nodes.push(Node::Leaf { counts });
            return self.nodes.len() - 1;
        };

        self.importance[feature] += (rows.len() as f64 / self.n_root) * gain;
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&i| self.ds.x[i][feature] <= threshold);
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { counts }); // placeholder
        let left = self.grow(left_rows);
        let right = self.grow(right_rows);
        self.nodes[slot] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        slot
    }
}

/// Train a forest. Each tree bootstraps `n` rows with replacement from its
/// own seeded stream and grows to purity (min leaf 1).
pub fn rf_train(data: &Dataset, n_trees: usize, max_features: usize, seed: u64) -> Result<RfModel> {
    data.validate_for_training()?;
    if n_trees == 0 {
        return Err(Error::rejected("forest needs at least one tree"));
    }
    let single_class = !data.has_both_classes();
    let n = data.n_rows();
    let d = data.n_features();

    let built: Vec<(Tree, Vec<f64>)> = exec::map_range(n_trees, |t| {
        let mut rng = seeds::unit_rng(seed, "rf-tree", t as u64);
        let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let mut builder = TreeBuilder {
            ds: data,
            max_features,
            n_root: rows.len() as f64,
            nodes: Vec::new(),
            importance: vec![0.0; d],
            rng,
        };
        builder.grow(rows);
        (
            Tree {
                nodes: builder.nodes,
            },
            builder.importance,
        )
    });

    let mut importances = vec![0.0; d];
    let mut trees = Vec::with_capacity(n_trees);
    for (tree, imp) in built {
        for (acc, v) in importances.iter_mut().zip(&imp) {
            *acc += v;
        }
        trees.push(tree);
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        for v in &mut importances {
            *v /= total;
        }
    }
    Ok(RfModel {
        trees,
        seed,
        n_features: d,
        importances,
        single_class,
    })
}
