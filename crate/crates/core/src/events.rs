//! Car-parking event reconstruction, cleaning, and duration-class labeling.
//!
//! An event is one car's continuous occupancy of one slot: it starts at the
//! first busy frame of a maximal busy run and ends at the first subsequent
//! free frame, so its duration is the difference of those two frame
//! timestamps. Runs whose start or end falls into unmonitored time (day
//! boundaries, camera gaps) are flagged partial and later filtered out.
//!
//! Occupancy bits cannot distinguish a departing car from an immediately
//! arriving one, so back-to-back occupancies of the same slot merge into a
//! single event and the duration overestimates the first car's stay.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::ingest::{OccupancyFrame, Weather};
use crate::{Error, Result};

/// One reconstructed parking event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParkingEvent {
    pub event_id: String,
    pub slot_id: String,
    pub t_start: NaiveDateTime,
    pub duration_min: u32,
    pub weather_start: Weather,
    pub partial: bool,
}

/// Which duration-bin granularity a scheme uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    Low,
    High,
}

/// Ordinal duration bins: `boundaries` are right-closed minute thresholds,
/// so class k collects durations in (boundaries[k-1], boundaries[k]].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassScheme {
    pub name: SchemeName,
    pub boundaries: Vec<u32>,
    pub labels: Vec<String>,
}

impl ClassScheme {
    /// Three classes: Short ≤ 60 < Mid ≤ 240 < Long.
    pub fn low() -> ClassScheme {
        ClassScheme {
            name: SchemeName::Low,
            boundaries: vec![60, 240],
            labels: vec!["Short".into(), "Mid".into(), "Long".into()],
        }
    }

    /// Six classes with thresholds at 30, 60, 120, 240 and 480 minutes.
    pub fn high() -> ClassScheme {
        ClassScheme {
            name: SchemeName::High,
            boundaries: vec![30, 60, 120, 240, 480],
            labels: vec![
                "Short1".into(),
                "Short2".into(),
                "Mid1".into(),
                "Mid2".into(),
                "Long1".into(),
                "Long2".into(),
            ],
        }
    }

    pub fn by_name(name: SchemeName) -> ClassScheme {
        match name {
            SchemeName::Low => ClassScheme::low(),
            SchemeName::High => ClassScheme::high(),
        }
    }

    /// Number of classes (boundaries + 1).
    pub fn n_classes(&self) -> usize {
        self.boundaries.len() + 1
    }

    /// Class index of a duration: the count of boundaries strictly below
    /// it, which puts boundary values themselves in the lower class.
    pub fn class_of(&self, duration_min: u32) -> usize {
        self.boundaries.iter().filter(|b| **b < duration_min).count()
    }

    /// Lower bound in minutes of a class interval. Class 0's interval
    /// starts at 0; callers that need a positive span (the scheduler) use
    /// the first threshold instead.
    pub fn lower_bound_min(&self, class_index: usize) -> u32 {
        if class_index == 0 {
            0
        } else {
            self.boundaries[class_index - 1]
        }
    }
}

/// Reconstructs events from frames sorted by (slot, timestamp).
///
/// Each (slot, calendar day) is scanned independently. A run is partial
/// when it touches the day's first or last frame, or when any adjacent
/// observation inside the run (including the free frames delimiting it) is
/// separated by more than `gap_factor` times that day's median frame
/// interval.
pub fn extract_events(frames: &[OccupancyFrame], gap_factor: f64) -> Result<Vec<ParkingEvent>> {
    if gap_factor <= 0.0 {
        return Err(Error::InvalidInput("gap_factor must be positive".into()));
    }
    for pair in frames.windows(2) {
        let same_stream =
            pair[0].dataset == pair[1].dataset && pair[0].slot_id == pair[1].slot_id;
        if same_stream && pair[0].timestamp >= pair[1].timestamp {
            return Err(Error::InvalidInput(format!(
                "frames for slot {} are not strictly time-ordered at {}",
                pair[0].slot_id, pair[1].timestamp
            )));
        }
    }

    let mut events = Vec::new();
    let mut day: Vec<&OccupancyFrame> = Vec::new();
    let flush = |day: &mut Vec<&OccupancyFrame>, events: &mut Vec<ParkingEvent>| {
        if !day.is_empty() {
            extract_day_events(day, gap_factor, events);
            day.clear();
        }
    };

    for frame in frames {
        let boundary = day.last().map(|prev| {
            prev.dataset != frame.dataset
                || prev.slot_id != frame.slot_id
                || prev.timestamp.date() != frame.timestamp.date()
        });
        if boundary == Some(true) {
            flush(&mut day, &mut events);
        }
        day.push(frame);
    }
    flush(&mut day, &mut events);

    events.sort_by(|a, b| (&a.slot_id, a.t_start).cmp(&(&b.slot_id, b.t_start)));
    Ok(events)
}

/// One slot, one calendar day, frames in time order.
fn extract_day_events(day: &[&OccupancyFrame], gap_factor: f64, out: &mut Vec<ParkingEvent>) {
    let max_gap_min = median_interval_min(day).map(|m| m * gap_factor);
    let gap_too_big = |a: &OccupancyFrame, b: &OccupancyFrame| match max_gap_min {
        Some(limit) => minutes_between(a.timestamp, b.timestamp) > limit,
        None => false,
    };

    let mut i = 0;
    while i < day.len() {
        if !day[i].busy {
            i += 1;
            continue;
        }
        let start = i;
        while i < day.len() && day[i].busy {
            i += 1;
        }
        let end_free = day.get(i); // first free frame after the run, if observed

        // Partial when the start is the day's first frame (arrival not
        // observed) or the run never sees a free terminator (departure not
        // observed). A free terminator on the day's last frame still closes
        // the event.
        let mut partial = start == 0 || end_free.is_none();
        let run_end = i.min(day.len() - 1);
        for w in start.saturating_sub(1)..run_end {
            if gap_too_big(day[w], day[w + 1]) {
                partial = true;
                break;
            }
        }

        let start_frame = day[start];
        let end_ts = match end_free {
            Some(f) => f.timestamp,
            None => day[day.len() - 1].timestamp,
        };
        let duration = minutes_between(start_frame.timestamp, end_ts).round() as u32;

        out.push(ParkingEvent {
            event_id: format!(
                "{}-{}-{}",
                start_frame.dataset,
                start_frame.slot_id,
                start_frame.timestamp.format("%Y%m%d%H%M")
            ),
            slot_id: start_frame.slot_id.clone(),
            t_start: start_frame.timestamp,
            duration_min: duration,
            weather_start: start_frame.weather,
            partial,
        });
    }
}

fn minutes_between(a: NaiveDateTime, b: NaiveDateTime) -> f64 {
    (b - a).num_seconds() as f64 / 60.0
}

/// Median interval in minutes between consecutive frames of one day.
fn median_interval_min(day: &[&OccupancyFrame]) -> Option<f64> {
    if day.len() < 2 {
        return None;
    }
    let mut gaps: Vec<f64> = day
        .windows(2)
        .map(|w| minutes_between(w[0].timestamp, w[1].timestamp))
        .collect();
    gaps.sort_by(|a, b| a.partial_cmp(b).expect("finite gaps"));
    let mid = gaps.len() / 2;
    Some(if gaps.len() % 2 == 1 {
        gaps[mid]
    } else {
        (gaps[mid - 1] + gaps[mid]) / 2.0
    })
}

/// Applies the cleaning rules: partial events are dropped, and so is every
/// event of a day on which fewer than half of the lot's slots reported at
/// least one frame. The lot size is the number of distinct slots across
/// the whole frame set. Surviving events keep their ids.
pub fn clean_events(events: &[ParkingEvent], frames: &[OccupancyFrame]) -> Vec<ParkingEvent> {
    let mut all_slots: BTreeSet<&str> = BTreeSet::new();
    let mut per_day_slots: BTreeMap<NaiveDate, BTreeSet<&str>> = BTreeMap::new();
    for f in frames {
        all_slots.insert(&f.slot_id);
        per_day_slots
            .entry(f.timestamp.date())
            .or_default()
            .insert(&f.slot_id);
    }
    let total = all_slots.len();
    let day_ok = |date: NaiveDate| {
        let seen = per_day_slots.get(&date).map(|s| s.len()).unwrap_or(0);
        total > 0 && (seen as f64) >= 0.5 * total as f64
    };

    events
        .iter()
        .filter(|e| !e.partial && day_ok(e.t_start.date()))
        .cloned()
        .collect()
}

/// Attaches a class index to each event under the given scheme.
pub fn label_events(events: &[ParkingEvent], scheme: &ClassScheme) -> Vec<(ParkingEvent, usize)> {
    events
        .iter()
        .map(|e| (e.clone(), scheme.class_of(e.duration_min)))
        .collect()
}

/// Class frequencies plus normalized entropy of a label multiset.
///
/// Entropy is −Σ p·log₂p divided by log₂K, with K the scheme's class
/// count, so a uniform distribution scores 1 and a point mass 0.
pub fn class_distribution_entropy(labels: &[usize], n_classes: usize) -> Result<(Vec<f64>, f64)> {
    if labels.is_empty() {
        return Err(Error::InvalidInput(
            "cannot compute a class distribution of zero labels".into(),
        ));
    }
    if n_classes < 2 {
        return Err(Error::InvalidInput("need at least two classes".into()));
    }
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        if l >= n_classes {
            return Err(Error::InvalidInput(format!(
                "label {l} out of range for {n_classes} classes"
            )));
        }
        counts[l] += 1;
    }
    let freqs: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / labels.len() as f64)
        .collect();
    Ok((freqs.clone(), entropy_from_frequencies(&freqs)))
}

/// Normalized entropy of a frequency vector whose length defines K.
/// Frequencies are renormalized to sum 1; zero entries contribute nothing.
pub fn entropy_from_frequencies(freqs: &[f64]) -> f64 {
    let total: f64 = freqs.iter().sum();
    if total <= 0.0 || freqs.len() < 2 {
        return 0.0;
    }
    let h: f64 = freqs
        .iter()
        .map(|&f| {
            let p = f / total;
            if p > 0.0 {
                -p * p.log2()
            } else {
                0.0
            }
        })
        .sum();
    h / (freqs.len() as f64).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use chrono::NaiveDate;

    fn frame(slot: &str, day: u32, h: u32, m: u32, busy: bool) -> OccupancyFrame {
        OccupancyFrame {
            dataset: "d".into(),
            camera: "c".into(),
            timestamp: NaiveDate::from_ymd_opt(2015, 11, day)
                .unwrap()
                .and_hms_opt(h, m, 0)
                .unwrap(),
            slot_id: slot.into(),
            busy,
            weather: Weather::Sunny,
        }
    }

    /// Thirty-minute cadence around a busy run, mirroring the CNR excerpt
    /// extended by one free frame.
    fn excerpt_stream() -> Vec<OccupancyFrame> {
        vec![
            frame("275", 12, 8, 45, false),
            frame("275", 12, 9, 15, true),
            frame("275", 12, 9, 45, true),
            frame("275", 12, 10, 15, true),
            frame("275", 12, 10, 45, true),
            frame("275", 12, 11, 15, true),
            frame("275", 12, 11, 45, true),
            frame("275", 12, 12, 15, false),
            frame("275", 12, 12, 45, false),
        ]
    }

    #[test]
    fn extracts_run_with_free_terminator() {
        let events = extract_events(&excerpt_stream(), 2.0).unwrap();
        assert_eq!(events.len(), 1);
        let e = &events[0];
        assert_eq!(e.slot_id, "275");
        assert_eq!(e.t_start.to_string(), "2015-11-12 09:15:00");
        assert_eq!(e.duration_min, 180);
        assert!(!e.partial);
    }

    #[test]
    fn run_ending_at_day_boundary_is_partial() {
        let mut frames = excerpt_stream();
        frames.truncate(7); // ends on the last busy frame at 11:45
        frames.pop(); // now last frame is busy 11:15
        let events = extract_events(&frames, 2.0).unwrap();
        assert_eq!(events.len(), 1);
        assert!(events[0].partial);
    }

    #[test]
    fn run_starting_at_day_boundary_is_partial() {
        let frames = vec![
            frame("1", 12, 7, 0, true),
            frame("1", 12, 7, 30, true),
            frame("1", 12, 8, 0, false),
        ];
        let events = extract_events(&frames, 2.0).unwrap();
        assert_eq!(events.len(), 1);
        assert!(events[0].partial);
        assert_eq!(events[0].duration_min, 60);
    }

    #[test]
    fn all_free_stream_has_no_events() {
        let frames = vec![frame("1", 12, 7, 0, false), frame("1", 12, 7, 30, false)];
        assert!(extract_events(&frames, 2.0).unwrap().is_empty());
    }

    #[test]
    fn oversized_gap_marks_partial() {
        // 30-minute cadence with a 2-hour hole inside the run.
        let frames = vec![
            frame("1", 12, 8, 0, false),
            frame("1", 12, 8, 30, true),
            frame("1", 12, 10, 30, true),
            frame("1", 12, 11, 0, true),
            frame("1", 12, 11, 30, false),
            frame("1", 12, 12, 0, false),
            frame("1", 12, 12, 30, false),
        ];
        let events = extract_events(&frames, 2.0).unwrap();
        assert_eq!(events.len(), 1);
        assert!(events[0].partial);
    }

    #[test]
    fn gap_before_first_busy_frame_marks_partial() {
        let frames = vec![
            frame("1", 12, 7, 0, false),
            frame("1", 12, 7, 30, false),
            frame("1", 12, 8, 0, false),
            frame("1", 12, 10, 30, true),
            frame("1", 12, 11, 0, true),
            frame("1", 12, 11, 30, false),
        ];
        let events = extract_events(&frames, 2.0).unwrap();
        assert_eq!(events.len(), 1);
        assert!(events[0].partial, "arrival fell inside a monitoring hole");
    }

    #[test]
    fn single_frame_day_is_partial() {
        let frames = vec![frame("1", 12, 9, 0, true)];
        let events = extract_events(&frames, 2.0).unwrap();
        assert_eq!(events.len(), 1);
        assert!(events[0].partial);
    }

    #[test]
    fn unsorted_input_is_error() {
        let frames = vec![frame("1", 12, 9, 0, true), frame("1", 12, 8, 0, false)];
        assert!(extract_events(&frames, 2.0).is_err());
    }

    #[test]
    fn events_never_overlap_within_slot() {
        let frames = vec![
            frame("1", 12, 8, 0, false),
            frame("1", 12, 8, 30, true),
            frame("1", 12, 9, 0, false),
            frame("1", 12, 9, 30, true),
            frame("1", 12, 10, 0, true),
            frame("1", 12, 10, 30, false),
            frame("1", 12, 11, 0, false),
        ];
        let events = extract_events(&frames, 2.0).unwrap();
        assert_eq!(events.len(), 2);
        for pair in events.windows(2) {
            let end0 = pair[0].t_start + chrono::Duration::minutes(pair[0].duration_min as i64);
            assert!(end0 <= pair[1].t_start);
        }
        // Total busy time bounded by the monitored span.
        let span = minutes_between(frames[0].timestamp, frames.last().unwrap().timestamp);
        let total: u32 = events.iter().map(|e| e.duration_min).sum();
        assert!(f64::from(total) <= span);
    }

    #[test]
    fn cleaning_drops_partials_and_sparse_days() {
        // Lot of two slots; on day 13 only one of two slots reports, which
        // meets the 50% threshold, so day 13 survives. On day 14 only slot
        // coverage below half (0 of 2 report... construct 1 of 2 but make
        // threshold fail with a 3-slot lot instead).
        let mut frames = vec![
            // day 12: both slots report
            frame("1", 12, 8, 0, false),
            frame("1", 12, 8, 30, true),
            frame("1", 12, 9, 0, false),
            frame("2", 12, 8, 0, false),
            frame("3", 12, 8, 0, false),
            // day 13: only slot 1 of the 3-slot lot reports
            frame("1", 13, 8, 0, false),
            frame("1", 13, 8, 30, true),
            frame("1", 13, 9, 0, false),
        ];
        frames.sort_by(|a, b| (&a.slot_id, a.timestamp).cmp(&(&b.slot_id, b.timestamp)));
        let events = extract_events(&frames, 2.0).unwrap();
        assert_eq!(events.len(), 2);

        let cleaned = clean_events(&events, &frames);
        assert_eq!(cleaned.len(), 1, "day 13 covers 1/3 < 50% of slots");
        assert_eq!(cleaned[0].t_start.date().to_string(), "2015-11-12");
    }

    #[test]
    fn partial_events_are_filtered_out() {
        let frames = vec![
            frame("1", 12, 8, 0, true), // starts at day boundary
            frame("1", 12, 8, 30, false),
        ];
        let events = extract_events(&frames, 2.0).unwrap();
        assert_eq!(events.len(), 1);
        assert!(clean_events(&events, &frames).is_empty());
    }

    #[test]
    fn labeling_matches_interval_rules() {
        let low = ClassScheme::low();
        let high = ClassScheme::high();
        assert_eq!(low.class_of(180), 1); // 60 < 180 ≤ 240 → Mid
        assert_eq!(high.class_of(45), 1); // 30 < 45 ≤ 60 → Short2
        assert_eq!(high.class_of(500), 5); // > 480 → Long2
        assert_eq!(low.class_of(60), 0); // boundary stays in lower class
        assert_eq!(low.class_of(240), 1);
        assert_eq!(low.class_of(241), 2);
        assert_eq!(low.labels[low.class_of(180)], "Mid");
    }

    #[test]
    fn labeling_is_monotone_in_duration() {
        let scheme = ClassScheme::high();
        let mut last = 0;
        for d in 0..600 {
            let c = scheme.class_of(d);
            assert!(c >= last);
            last = c;
        }
    }

    #[test]
    fn entropy_matches_published_train_rows() {
        // Frequencies as published for the 3-class and 6-class scenarios.
        assert_abs_diff_eq!(
            entropy_from_frequencies(&[0.09, 0.31, 0.60]),
            0.81,
            epsilon = 0.01
        );
        assert_abs_diff_eq!(
            entropy_from_frequencies(&[0.06, 0.04, 0.09, 0.22, 0.53, 0.07]),
            0.76,
            epsilon = 0.01
        );
    }

    #[test]
    fn entropy_of_uniform_distribution_is_one() {
        let (freqs, h) = class_distribution_entropy(&[0, 1, 2, 0, 1, 2], 3).unwrap();
        assert_eq!(freqs, vec![1.0 / 3.0; 3]);
        assert_abs_diff_eq!(h, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn entropy_of_point_mass_is_zero() {
        let (_, h) = class_distribution_entropy(&[1, 1, 1], 3).unwrap();
        assert_eq!(h, 0.0);
    }

    #[test]
    fn entropy_rejects_empty_input() {
        assert!(class_distribution_entropy(&[], 3).is_err());
    }
}
