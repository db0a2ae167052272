//! Feature importance, re-aggregated per original feature.
//!
//! Tree-family models expose impurity importances accumulated during
//! fitting; anything else needs a held-out matrix and falls back to
//! permutation importance (mean metric degradation over seeded shuffles
//! of one feature group at a time). Either way the result is normalized
//! to sum 1 across the original feature groups.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ordinal::BinaryStage;
use super::{derive_seed, ModelParams, Task, TrainedModel};
use crate::features::FeatureMatrix;
use crate::{Error, Result};

/// Impurity importance when the model supports it, otherwise permutation
/// importance on `held_out`; an error if neither is possible.
pub fn feature_importance(
    model: &TrainedModel,
    column_groups: &BTreeMap<String, Vec<String>>,
    held_out: Option<&FeatureMatrix>,
) -> Result<BTreeMap<String, f64>> {
    match impurity_importance(model, column_groups) {
        Ok(imp) => Ok(imp),
        Err(_) => match held_out {
            Some(matrix) => permutation_importance(model, matrix, column_groups, 10, 0),
            None => Err(Error::InvalidInput(format!(
                "{} has no impurity importances; supply a held-out matrix for permutation importance",
                model.config.algorithm.name()
            ))),
        },
    }
}

/// Per-original-feature impurity importance, normalized to sum 1.
pub fn impurity_importance(
    model: &TrainedModel,
    column_groups: &BTreeMap<String, Vec<String>>,
) -> Result<BTreeMap<String, f64>> {
    let per_column = raw_column_importances(model)?;
    Ok(normalize_groups(&group_sums(
        &per_column,
        &model.schema,
        column_groups,
    )))
}

fn raw_column_importances(model: &TrainedModel) -> Result<Vec<f64>> {
    match &model.params {
        ModelParams::Tree(t) => Ok(t.importances.clone()),
        ModelParams::Forest(f) => Ok(f.importances()),
        ModelParams::GradientBoost(g) => Ok(g.importances()),
        ModelParams::AdaBoost(a) => Ok(a.importances()),
        ModelParams::AdaBoostR2(a) => Ok(a.importances()),
        ModelParams::Ordinal(om) => {
            // Mean over the binary stages that carry a real model.
            let mut acc = vec![0.0; model.schema.len()];
            let mut stages = 0usize;
            for stage in &om.stages {
                if let BinaryStage::Model(m) = stage {
                    let imp = raw_column_importances(m)?;
                    for (a, v) in acc.iter_mut().zip(imp) {
                        *a += v;
                    }
                    stages += 1;
                }
            }
            if stages == 0 {
                return Err(Error::InvalidInput(
                    "ordinal model collapsed to constant priors; no impurity importances".into(),
                ));
            }
            acc.iter_mut().for_each(|a| *a /= stages as f64);
            Ok(acc)
        }
        ModelParams::Logistic(_)
        | ModelParams::GaussianNb(_)
        | ModelParams::MultinomialNb(_)
        | ModelParams::Ols(_) => Err(Error::InvalidInput(
            "model has no impurity-based importances".into(),
        )),
    }
}

/// Mean metric degradation over `n_repeats` seeded joint shuffles of each
/// feature group, clamped at zero and normalized to sum 1 (all-zero when
/// nothing degrades).
pub fn permutation_importance(
    model: &TrainedModel,
    matrix: &FeatureMatrix,
    column_groups: &BTreeMap<String, Vec<String>>,
    n_repeats: usize,
    seed: u64,
) -> Result<BTreeMap<String, f64>> {
    let raw = permutation_importance_raw(model, matrix, column_groups, n_repeats, seed)?;
    let clamped: BTreeMap<String, f64> =
        raw.into_iter().map(|(k, v)| (k, v.max(0.0))).collect();
    Ok(normalize_groups(&clamped))
}

/// Unnormalized mean degradations (may be negative for useless features).
pub fn permutation_importance_raw(
    model: &TrainedModel,
    matrix: &FeatureMatrix,
    column_groups: &BTreeMap<String, Vec<String>>,
    n_repeats: usize,
    seed: u64,
) -> Result<BTreeMap<String, f64>> {
    let baseline = score(model, matrix)?;
    let mut out = BTreeMap::new();
    for (group_idx, (group, columns)) in column_groups.iter().enumerate() {
        let cols: Vec<usize> = columns
            .iter()
            .map(|c| {
                matrix.column_index(c).ok_or_else(|| {
                    Error::SchemaMismatch(format!("group {group} names unknown column {c}"))
                })
            })
            .collect::<Result<_>>()?;
        let mut degradation = 0.0;
        for repeat in 0..n_repeats {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                seed,
                (group_idx as u64) << 32 | repeat as u64,
            ));
            let mut perm: Vec<usize> = (0..matrix.n_rows()).collect();
            perm.shuffle(&mut rng);
            let mut shuffled = matrix.clone();
            for (i, &src) in perm.iter().enumerate() {
                for &c in &cols {
                    shuffled.rows[i][c] = matrix.rows[src][c];
                }
            }
            degradation += baseline - score(model, &shuffled)?;
        }
        out.insert(group.clone(), degradation / n_repeats as f64);
    }
    Ok(out)
}

/// Higher-is-better score: accuracy for class predictions, negated MAE of
/// the raw values for regression.
fn score(model: &TrainedModel, matrix: &FeatureMatrix) -> Result<f64> {
    match model.config.task {
        Task::Classification | Task::Ordinal => {
            let pred = model.predict_classes(matrix)?;
            let hits = pred
                .iter()
                .zip(&matrix.targets)
                .filter(|(a, b)| a == b)
                .count();
            Ok(hits as f64 / matrix.n_rows() as f64)
        }
        Task::Regression => {
            let pred = model.predict_values(matrix)?;
            let mae = pred
                .iter()
                .zip(&matrix.targets)
                .map(|(p, &t)| (p - t as f64).abs())
                .sum::<f64>()
                / matrix.n_rows() as f64;
            Ok(-mae)
        }
    }
}

fn group_sums(
    per_column: &[f64],
    schema: &[String],
    column_groups: &BTreeMap<String, Vec<String>>,
) -> BTreeMap<String, f64> {
    let index: BTreeMap<&str, usize> = schema
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    column_groups
        .iter()
        .map(|(group, columns)| {
            let total = columns
                .iter()
                .filter_map(|c| index.get(c.as_str()))
                .map(|&i| per_column[i])
                .sum();
            (group.clone(), total)
        })
        .collect()
}

fn normalize_groups(groups: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    let total: f64 = groups.values().sum();
    if total <= 0.0 {
        return groups.keys().map(|k| (k.clone(), 0.0)).collect();
    }
    groups.iter().map(|(k, v)| (k.clone(), v / total)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{fit, Algorithm, HyperValue, LearnerConfig};

    /// Class is a function of the "h" column only; "noise" is irrelevant.
    fn planted_matrix(n: usize) -> FeatureMatrix {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![(i % 24) as f64, ((i * 13) % 11) as f64])
            .collect();
        let targets: Vec<usize> = (0..n).map(|i| usize::from((i % 24) >= 12)).collect();
        FeatureMatrix {
            column_names: vec!["h".into(), "noise".into()],
            rows,
            column_groups: [
                ("h".to_string(), vec!["h".to_string()]),
                ("noise".to_string(), vec!["noise".to_string()]),
            ]
            .into_iter()
            .collect(),
            targets,
            n_classes: 2,
        }
    }

    #[test]
    fn single_informative_feature_takes_all_importance() {
        let matrix = planted_matrix(96);
        let config = LearnerConfig::new(Algorithm::DecisionTree, Task::Classification, 0);
        let model = fit(&config, &matrix).unwrap();
        let imp = impurity_importance(&model, &matrix.column_groups).unwrap();
        assert!((imp["h"] - 1.0).abs() < 1e-12);
        assert_eq!(imp["noise"], 0.0);
    }

    #[test]
    fn importances_sum_to_one_for_tree_family() {
        let matrix = planted_matrix(96);
        for algorithm in [
            Algorithm::RandomForest,
            Algorithm::GradientBoost,
            Algorithm::AdaBoost,
        ] {
            let config = LearnerConfig::new(algorithm, Task::Classification, 1)
                .with("n_trees", HyperValue::Int(10));
            let model = fit(&config, &matrix).unwrap();
            let imp = impurity_importance(&model, &matrix.column_groups).unwrap();
            let total: f64 = imp.values().sum();
            assert!((total - 1.0).abs() < 1e-9, "{algorithm:?}: {total}");
            assert!(imp["h"] > imp["noise"], "{algorithm:?}");
        }
    }

    #[test]
    fn planted_signal_wins_under_permutation_too() {
        let matrix = planted_matrix(96);
        let config = LearnerConfig::new(Algorithm::Logistic, Task::Classification, 0);
        let model = fit(&config, &matrix).unwrap();
        let imp = permutation_importance(&model, &matrix, &matrix.column_groups, 10, 7).unwrap();
        assert!(imp["h"] > 0.9, "h importance {}", imp["h"]);
    }

    #[test]
    fn independent_target_degrades_nothing() {
        // Target unrelated to any feature: raw degradations hover near 0.
        let mut matrix = planted_matrix(96);
        matrix.targets = (0..96).map(|i| (i * 7 + 3) % 2).collect();
        let config = LearnerConfig::new(Algorithm::GaussianNb, Task::Classification, 0);
        let model = fit(&config, &matrix).unwrap();
        let raw =
            permutation_importance_raw(&model, &matrix, &matrix.column_groups, 10, 3).unwrap();
        for (group, v) in raw {
            assert!(v.abs() < 0.1, "{group} moved the needle: {v}");
        }
    }

    #[test]
    fn linear_model_without_held_out_matrix_directs_to_permutation() {
        let matrix = planted_matrix(48);
        let config = LearnerConfig::new(Algorithm::Logistic, Task::Classification, 0);
        let model = fit(&config, &matrix).unwrap();
        let err = feature_importance(&model, &matrix.column_groups, None).unwrap_err();
        assert!(err.to_string().contains("permutation"));
        assert!(feature_importance(&model, &matrix.column_groups, Some(&matrix)).is_ok());
    }

    #[test]
    fn ordinal_tree_importances_average_over_stages() {
        let matrix = planted_matrix(96);
        let config = LearnerConfig::new(Algorithm::DecisionTree, Task::Ordinal, 0);
        let model = fit(&config, &matrix).unwrap();
        let imp = impurity_importance(&model, &matrix.column_groups).unwrap();
        assert!(imp["h"] > 0.99);
    }
}
