//! CART decision trees: Gini impurity for classification, variance
//! reduction for regression, optional per-split feature subsampling.
//!
//! Splits are exhaustive over midpoints between distinct sorted feature
//! values. Ties go to the lowest feature index and then the lowest
//! threshold, so fitting is deterministic for a fixed feature sample.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Weighted class distribution (classification) — always sums to 1.
    ClassLeaf { distribution: Vec<f64> },
    /// Weighted mean target (regression).
    ValueLeaf { value: f64 },
}

/// How many candidate features each split considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSampling {
    All,
    /// ⌈√F⌉ features per split.
    Sqrt,
    /// ⌈F/3⌉ features per split.
    Third,
}

impl FeatureSampling {
    fn count(self, n_features: usize) -> usize {
        match self {
            FeatureSampling::All => n_features,
            FeatureSampling::Sqrt => (n_features as f64).sqrt().ceil() as usize,
            FeatureSampling::Third => (n_features as f64 / 3.0).ceil() as usize,
        }
        .clamp(1, n_features)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub feature_sampling: FeatureSampling,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            feature_sampling: FeatureSampling::All,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    /// Classification class count; zero marks a regression tree.
    pub n_classes: usize,
    /// Per-feature accumulated impurity decrease from fitting.
    pub importances: Vec<f64>,
}

/// Training targets: class indices or continuous values.
pub enum TreeTarget<'a> {
    Classes { y: &'a [usize], n_classes: usize },
    Values(&'a [f64]),
}

impl DecisionTree {
    /// Fits a tree on `rows` (row-major feature matrix). `weights` must
    /// match the row count; `rng` is consumed only when feature sampling
    /// is not `All`.
    pub fn fit(
        rows: &[Vec<f64>],
        target: &TreeTarget,
        weights: &[f64],
        params: &TreeParams,
        rng: &mut impl Rng,
    ) -> DecisionTree {
        assert!(!rows.is_empty(), "tree fitting needs at least one row");
        assert_eq!(rows.len(), weights.len());
        let n_features = rows[0].len();
        let mut tree = DecisionTree {
            nodes: Vec::new(),
            n_classes: match target {
                TreeTarget::Classes { n_classes, .. } => *n_classes,
                TreeTarget::Values(_) => 0,
            },
            importances: vec![0.0; n_features],
        };
        let indices: Vec<usize> = (0..rows.len()).collect();
        tree.grow(rows, target, weights, indices, 0, params, rng);
        tree
    }

    #[allow(clippy::too_many_arguments)]
    fn grow(
        &mut self,
        rows: &[Vec<f64>],
        target: &TreeTarget,
        weights: &[f64],
        node_rows: Vec<usize>,
        depth: usize,
        params: &TreeParams,
        rng: &mut impl Rng,
    ) -> usize {
        let (impurity, leaf) = summarize(target, weights, &node_rows);
        let at_depth_limit = params.max_depth.map(|d| depth >= d).unwrap_or(false);
        if impurity <= 1e-12 || node_rows.len() < params.min_samples_split || at_depth_limit {
            self.nodes.push(leaf);
            return self.nodes.len() - 1;
        }

        let n_features = rows[0].len();
        let candidates: Vec<usize> = match params.feature_sampling {
            FeatureSampling::All => (0..n_features).collect(),
            sampling => {
                let mut all: Vec<usize> = (0..n_features).collect();
                all.shuffle(rng);
                all.truncate(sampling.count(n_features));
                all.sort_unstable(); // deterministic tie-breaking by index
                all
            }
        };

        let best = best_split(rows, target, weights, &node_rows, &candidates);
        let Some(split) = best else {
            self.nodes.push(leaf);
            return self.nodes.len() - 1;
        };

        self.importances[split.feature] += split.gain;
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = node_rows
            .into_iter()
            .partition(|&i| rows[i][split.feature] <= split.threshold);

        let placeholder = self.nodes.len();
        self.nodes.push(Node::ValueLeaf { value: f64::NAN });
        let left = self.grow(rows, target, weights, left_rows, depth + 1, params, rng);
        let right = self.grow(rows, target, weights, right_rows, depth + 1, params, rng);
        self.nodes[placeholder] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        placeholder
    }

    /// Index of the leaf a row lands in.
    pub fn leaf_of(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
                _ => return at,
            }
        }
    }

    pub fn predict_value(&self, row: &[f64]) -> f64 {
        match &self.nodes[self.leaf_of(row)] {
            Node::ValueLeaf { value } => *value,
            Node::ClassLeaf { distribution } => {
                // Regression read of a classification leaf: expectation.
                distribution
                    .iter()
                    .enumerate()
                    .map(|(k, p)| k as f64 * p)
                    .sum()
            }
            Node::Split { .. } => unreachable!("leaf_of returns leaves"),
        }
    }

    pub fn predict_distribution(&self, row: &[f64]) -> Vec<f64> {
        match &self.nodes[self.leaf_of(row)] {
            Node::ClassLeaf { distribution } => distribution.clone(),
            Node::ValueLeaf { .. } => panic!("regression tree has no class distribution"),
            Node::Split { .. } => unreachable!("leaf_of returns leaves"),
        }
    }

    /// Overwrites every leaf value (gradient boosting sets Newton steps).
    pub fn set_leaf_values(&mut self, values: &std::collections::BTreeMap<usize, f64>) {
        for (leaf, value) in values {
            match &mut self.nodes[*leaf] {
                Node::ValueLeaf { value: v } => *v = *value,
                _ => panic!("node {leaf} is not a value leaf"),
            }
        }
    }
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Node impurity (weighted Gini mass or SSE) plus its leaf summary.
fn summarize(target: &TreeTarget, weights: &[f64], rows: &[usize]) -> (f64, Node) {
    match target {
        TreeTarget::Classes { y, n_classes } => {
            let mut counts = vec![0.0; *n_classes];
            let mut total = 0.0;
            for &i in rows {
                counts[y[i]] += weights[i];
                total += weights[i];
            }
            let gini_mass = if total > 0.0 {
                total - counts.iter().map(|c| c * c).sum::<f64>() / total
            } else {
                0.0
            };
            let distribution: Vec<f64> = if total > 0.0 {
                counts.iter().map(|c| c / total).collect()
            } else {
                vec![1.0 / *n_classes as f64; *n_classes]
            };
            (gini_mass, Node::ClassLeaf { distribution })
        }
        TreeTarget::Values(y) => {
            let mut sw = 0.0;
            let mut swy = 0.0;
            let mut swyy = 0.0;
            for &i in rows {
                sw += weights[i];
                swy += weights[i] * y[i];
                swyy += weights[i] * y[i] * y[i];
            }
            let sse = if sw > 0.0 { swyy - swy * swy / sw } else { 0.0 };
            let mean = if sw > 0.0 { swy / sw } else { 0.0 };
            (sse.max(0.0), Node::ValueLeaf { value: mean })
        }
    }
}

fn best_split(
    rows: &[Vec<f64>],
    target: &TreeTarget,
    weights: &[f64],
    node_rows: &[usize],
    candidates: &[usize],
) -> Option<SplitChoice> {
    let (parent_impurity, _) = summarize(target, weights, node_rows);
    let mut best: Option<SplitChoice> = None;

    let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(node_rows.len());
    for &feature in candidates {
        scratch.clear();
        scratch.extend(node_rows.iter().map(|&i| (rows[i][feature], i)));
        scratch.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));
        if scratch[0].0 == scratch[scratch.len() - 1].0 {
            continue; // constant feature in this node
        }

        match target {
            TreeTarget::Classes { y, n_classes } => {
                let mut total = vec![0.0; *n_classes];
                let mut grand = 0.0;
                for &(_, i) in &scratch {
                    total[y[i]] += weights[i];
                    grand += weights[i];
                }
                let mut left = vec![0.0; *n_classes];
                let mut left_w = 0.0;
                let mut left_sq = 0.0; // Σ c²  over classes, maintained incrementally
                let mut total_sq: f64 = total.iter().map(|c| c * c).sum();
                for w in 0..scratch.len() - 1 {
                    let (x, i) = scratch[w];
                    let wi = weights[i];
                    let k = y[i];
                    left_sq += wi * (2.0 * left[k] + wi);
                    total_sq += wi * (wi - 2.0 * total[k]);
                    left[k] += wi;
                    total[k] -= wi;
                    left_w += wi;
                    let next_x = scratch[w + 1].0;
                    if x == next_x {
                        continue;
                    }
                    let right_w = grand - left_w;
                    if left_w <= 0.0 || right_w <= 0.0 {
                        continue;
                    }
                    let child_mass =
                        (left_w - left_sq / left_w) + (right_w - total_sq / right_w);
                    let gain = parent_impurity - child_mass;
                    consider(&mut best, feature, midpoint(x, next_x), gain);
                }
            }
            TreeTarget::Values(y) => {
                let mut grand_w = 0.0;
                let mut grand_wy = 0.0;
                let mut grand_wyy = 0.0;
                for &(_, i) in &scratch {
                    grand_w += weights[i];
                    grand_wy += weights[i] * y[i];
                    grand_wyy += weights[i] * y[i] * y[i];
                }
                let mut lw = 0.0;
                let mut lwy = 0.0;
                let mut lwyy = 0.0;
                for w in 0..scratch.len() - 1 {
                    let (x, i) = scratch[w];
                    lw += weights[i];
                    lwy += weights[i] * y[i];
                    lwyy += weights[i] * y[i] * y[i];
                    let next_x = scratch[w + 1].0;
                    if x == next_x {
                        continue;
                    }
                    let rw = grand_w - lw;
                    if lw <= 0.0 || rw <= 0.0 {
                        continue;
                    }
                    let sse_l = (lwyy - lwy * lwy / lw).max(0.0);
                    let rwy = grand_wy - lwy;
                    let rwyy = grand_wyy - lwyy;
                    let sse_r = (rwyy - rwy * rwy / rw).max(0.0);
                    let gain = parent_impurity - sse_l - sse_r;
                    consider(&mut best, feature, midpoint(x, next_x), gain);
                }
            }
        }
    }
    best.filter(|b| b.gain > 1e-12)
}

fn midpoint(a: f64, b: f64) -> f64 {
    a + (b - a) / 2.0
}

fn consider(best: &mut Option<SplitChoice>, feature: usize, threshold: f64, gain: f64) {
    // Strict comparison keeps the first (lowest feature, lowest threshold)
    // of equal-gain splits.
    let better = match best {
        None => true,
        Some(b) => gain > b.gain,
    };
    if better {
        *best = Some(SplitChoice {
            feature,
            threshold,
            gain,
        });
    }
}
