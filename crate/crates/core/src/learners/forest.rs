//! Bagged CART forests with per-split feature subsampling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, FeatureSampling, TreeParams, TreeTarget};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub n_classes: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    pub feature_sampling: FeatureSampling,
}

/// Deterministic per-component seed derivation (splitmix64 step).
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

enum Targets<'a> {
    Classes(&'a [usize], usize),
    Values(Vec<f64>),
}

fn fit_any(rows: &[Vec<f64>], targets: &Targets, params: &ForestParams, seed: u64) -> ForestModel {
    let n = rows.len();
    let trees: Vec<DecisionTree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64 + 1));
            let weights: Vec<f64> = if params.bootstrap {
                // Bootstrap as integer sample weights keeps one shared
                // row-major matrix across trees.
                let mut counts = vec![0.0; n];
                for _ in 0..n {
                    counts[rng.gen_range(0..n)] += 1.0;
                }
                counts
            } else {
                vec![1.0; n]
            };
            let tree_params = TreeParams {
                max_depth: params.max_depth,
                min_samples_split: 2,
                feature_sampling: params.feature_sampling,
            };
            let target = match targets {
                Targets::Classes(y, k) => TreeTarget::Classes { y, n_classes: *k },
                Targets::Values(v) => TreeTarget::Values(v),
            };
            DecisionTree::fit(rows, &target, &weights, &tree_params, &mut rng)
        })
        .collect();
    ForestModel {
        trees,
        n_classes: match targets {
            Targets::Classes(_, k) => *k,
            Targets::Values(_) => 0,
        },
    }
}

pub fn fit_classifier(
    rows: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    params: &ForestParams,
    seed: u64,
) -> ForestModel {
    fit_any(rows, &Targets::Classes(y, n_classes), params, seed)
}

pub fn fit_regressor(rows: &[Vec<f64>], y: &[f64], params: &ForestParams, seed: u64) -> ForestModel {
    fit_any(rows, &Targets::Values(y.to_vec()), params, seed)
}

impl ForestModel {
    /// Soft vote: mean of the trees' leaf distributions.
    pub fn predict_distribution(&self, row: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_classes];
        for tree in &self.trees {
            for (a, p) in acc.iter_mut().zip(tree.predict_distribution(row)) {
                *a += p;
            }
        }
        let n = self.trees.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }

    pub fn predict_value(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_value(row)).sum::<f64>() / self.trees.len() as f64
    }

    /// Mean per-feature impurity decrease over the trees.
    pub fn importances(&self) -> Vec<f64> {
        let n_features = self.trees.first().map(|t| t.importances.len()).unwrap_or(0);
        let mut acc = vec![0.0; n_features];
        for tree in &self.trees {
            for (a, v) in acc.iter_mut().zip(&tree.importances) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|a| *a /= self.trees.len() as f64);
        acc
    }
}
