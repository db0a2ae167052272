//! Leakage-free data splitting: a chronological holdout split and
//! stratified k-fold assignment for cross-validation within the training
//! span.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::events::ParkingEvent;
use crate::learners::derive_seed;
use crate::{Error, Result};

/// Sorts by (t_start, event_id) and takes the first ⌊ratio·n⌋ events as
/// train; every test event starts at or after every train event.
pub fn time_ordered_split(
    labeled: &[(ParkingEvent, usize)],
    ratio: f64,
) -> Result<(Vec<(ParkingEvent, usize)>, Vec<(ParkingEvent, usize)>)> {
    let order = time_order(labeled)?;
    let cut = split_point(labeled.len(), ratio)?;
    let train = order[..cut].iter().map(|&i| labeled[i].clone()).collect();
    let test = order[cut..].iter().map(|&i| labeled[i].clone()).collect();
    Ok((train, test))
}

/// Chronological order of the labeled events (ties broken by event id).
pub fn time_order(labeled: &[(ParkingEvent, usize)]) -> Result<Vec<usize>> {
    if labeled.len() < 2 {
        return Err(Error::InvalidInput(
            "time-ordered split needs at least two events".into(),
        ));
    }
    let mut order: Vec<usize> = (0..labeled.len()).collect();
    order.sort_by(|&a, &b| {
        (labeled[a].0.t_start, &labeled[a].0.event_id)
            .cmp(&(labeled[b].0.t_start, &labeled[b].0.event_id))
    });
    Ok(order)
}

/// Index of the first test element under the given train ratio.
pub fn split_point(n: usize, ratio: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&ratio) || ratio == 0.0 {
        return Err(Error::Config(format!(
            "split ratio must lie in (0, 1), got {ratio}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidInput(
            "time-ordered split needs at least two events".into(),
        ));
    }
    Ok((ratio * n as f64).floor() as usize)
}

/// Per-index fold assignment: within each class the (seeded-shuffled)
/// members are dealt round-robin, so fold class proportions stay within
/// one member of the global proportions.
pub fn stratified_kfold(targets: &[usize], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Config("cross-validation needs k ≥ 2".into()));
    }
    if k > targets.len() {
        return Err(Error::InvalidInput(format!(
            "cannot make {k} folds from {} samples",
            targets.len()
        )));
    }
    let n_classes = targets.iter().max().map(|m| m + 1).unwrap_or(0);
    let mut folds = vec![0usize; targets.len()];
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..targets.len()).filter(|&i| targets[i] == class).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, class as u64));
        members.shuffle(&mut rng);
        for (j, &i) in members.iter().enumerate() {
            folds[i] = j % k;
        }
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Weather;
    use chrono::NaiveDate;

    fn event(minute: u32, id: &str) -> (ParkingEvent, usize) {
        (
            ParkingEvent {
                event_id: id.to_string(),
                slot_id: "s".into(),
                t_start: NaiveDate::from_ymd_opt(2015, 11, 12)
                    .unwrap()
                    .and_hms_opt(9, minute, 0)
                    .unwrap(),
                duration_min: 60,
                weather_start: Weather::Sunny,
                partial: false,
            },
            0,
        )
    }

    #[test]
    fn eighty_twenty_split_respects_time() {
        let labeled: Vec<_> = (0..10).map(|i| event(i, &format!("e{i}"))).collect();
        let (train, test) = time_ordered_split(&labeled, 0.8).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(test.len(), 2);
        let max_train = train.iter().map(|(e, _)| e.t_start).max().unwrap();
        let min_test = test.iter().map(|(e, _)| e.t_start).min().unwrap();
        assert!(max_train <= min_test);
    }

    #[test]
    fn equal_timestamps_break_by_event_id() {
        let labeled = vec![event(0, "b"), event(0, "a"), event(0, "c")];
        let order = time_order(&labeled).unwrap();
        let ids: Vec<&str> = order
            .iter()
            .map(|&i| labeled[i].0.event_id.as_str())
            .collect();
        assert_eq!(ids, vec!["a", "b", "c"]);
    }

    #[test]
    fn floor_arithmetic_on_published_event_count() {
        assert_eq!(split_point(3552, 0.8).unwrap(), 2841);
        assert_eq!(3552 - 2841, 711);
    }

    #[test]
    fn single_event_is_error() {
        let labeled = vec![event(0, "a")];
        assert!(time_ordered_split(&labeled, 0.8).is_err());
    }

    #[test]
    fn folds_respect_class_proportions() {
        let targets: Vec<usize> = (0..100).map(|i| usize::from(i >= 60)).collect();
        let folds = stratified_kfold(&targets, 5, 1).unwrap();
        for f in 0..5 {
            let majority = targets
                .iter()
                .zip(&folds)
                .filter(|(t, fold)| **t == 0 && **fold == f)
                .count();
            let minority = targets
                .iter()
                .zip(&folds)
                .filter(|(t, fold)| **t == 1 && **fold == f)
                .count();
            assert_eq!(majority, 12);
            assert_eq!(minority, 8);
        }
    }

    #[test]
    fn tiny_class_spreads_over_distinct_folds() {
        let mut targets = vec![0usize; 50];
        targets.extend([1, 1, 1]);
        let folds = stratified_kfold(&targets, 5, 2).unwrap();
        let minority_folds: std::collections::BTreeSet<usize> = targets
            .iter()
            .zip(&folds)
            .filter(|(t, _)| **t == 1)
            .map(|(_, f)| *f)
            .collect();
        assert_eq!(minority_folds.len(), 3);
    }

    #[test]
    fn folds_are_deterministic_per_seed() {
        let targets: Vec<usize> = (0..40).map(|i| i % 3).collect();
        assert_eq!(
            stratified_kfold(&targets, 5, 7).unwrap(),
            stratified_kfold(&targets, 5, 7).unwrap()
        );
        assert_ne!(
            stratified_kfold(&targets, 5, 7).unwrap(),
            stratified_kfold(&targets, 5, 8).unwrap()
        );
    }

    #[test]
    fn more_folds_than_samples_is_error() {
        assert!(stratified_kfold(&[0, 1, 0], 5, 0).is_err());
    }
}
