//! Feature assembly: event-related, spatial, and contextual occupancy
//! features encoded into one numeric matrix.
//!
//! Hour and minute stay integer-valued, occupancy ratios live in [0, 1],
//! and every categorical (weekday, slot, weather, sub-area) is one-hot so
//! each learner sees the same matrix. Column order is the sorted column
//! names, and `column_groups` remembers which encoded columns belong to
//! which original feature so importances can be re-aggregated.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::events::ParkingEvent;
use crate::ingest::{OccupancyFrame, Weather};
use crate::spatial::SpatialModel;
use crate::{Error, Result};

/// The event-related feature family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseFeature {
    /// Hour of day, 0–23.
    Hour,
    /// Minute floored to a multiple of 5, 0–55.
    Minute,
    /// Day of week, Monday = 0.
    DayOfWeek,
    /// Slot id (one-hot).
    Slot,
    /// Weather at event start (one-hot).
    Weather,
}

impl BaseFeature {
    pub const ALL: [BaseFeature; 5] = [
        BaseFeature::Hour,
        BaseFeature::Minute,
        BaseFeature::DayOfWeek,
        BaseFeature::Slot,
        BaseFeature::Weather,
    ];

    /// Short code used in column names and reports.
    pub fn code(self) -> &'static str {
        match self {
            BaseFeature::Hour => "h",
            BaseFeature::Minute => "m",
            BaseFeature::DayOfWeek => "dw",
            BaseFeature::Slot => "s",
            BaseFeature::Weather => "wr",
        }
    }

    pub fn from_code(code: &str) -> Option<BaseFeature> {
        Self::ALL.iter().copied().find(|f| f.code() == code)
    }
}

/// Which features a matrix is built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub base: BTreeSet<BaseFeature>,
    pub use_spt: bool,
    pub use_ocy: bool,
    /// Required whenever `use_spt` or `use_ocy` is set.
    pub spatial_ref: Option<SpatialModel>,
}

impl FeatureSpec {
    /// All event-related features, no spatial or occupancy columns.
    pub fn all_base() -> FeatureSpec {
        FeatureSpec {
            base: BaseFeature::ALL.into_iter().collect(),
            use_spt: false,
            use_ocy: false,
            spatial_ref: None,
        }
    }

    /// A single event-related feature.
    pub fn single(feature: BaseFeature) -> FeatureSpec {
        FeatureSpec {
            base: [feature].into_iter().collect(),
            use_spt: false,
            use_ocy: false,
            spatial_ref: None,
        }
    }

    /// Adds the spatial and occupancy features on top of `self`.
    pub fn with_spatial(mut self, model: SpatialModel) -> FeatureSpec {
        self.use_spt = true;
        self.use_ocy = true;
        self.spatial_ref = Some(model);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.base.is_empty() && !self.use_spt && !self.use_ocy {
            return Err(Error::Config("feature spec selects no features".into()));
        }
        if (self.use_spt || self.use_ocy) && self.spatial_ref.is_none() {
            return Err(Error::Config(
                "spt/ocy features require a spatial model".into(),
            ));
        }
        Ok(())
    }

    /// Short name used in reports, e.g. `all+spt+ocy` or `h`.
    pub fn label(&self) -> String {
        let base = if self.base.len() == BaseFeature::ALL.len() {
            "all".to_string()
        } else {
            self.base
                .iter()
                .map(|f| f.code())
                .collect::<Vec<_>>()
                .join("+")
        };
        let mut label = base;
        if self.use_spt {
            label.push_str("+spt");
        }
        if self.use_ocy {
            label.push_str("+ocy");
        }
        label
    }
}

/// Raw event-related feature values before encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventFeatures {
    pub hour: u32,
    pub minute_5: u32,
    pub day_of_week: u32,
    pub slot_id: String,
    pub weather: Weather,
}

/// Extracts (h, m, dw, s, wr) from one event.
pub fn event_features(event: &ParkingEvent) -> EventFeatures {
    let t = event.t_start;
    EventFeatures {
        hour: t.hour(),
        minute_5: (t.minute() / 5) * 5,
        day_of_week: t.weekday().num_days_from_monday(),
        slot_id: event.slot_id.clone(),
        weather: event.weather_start,
    }
}

/// Per-slot frame history for occupancy lookups, sorted by time.
pub struct FrameIndex<'a> {
    by_slot: BTreeMap<&'a str, Vec<(NaiveDateTime, bool)>>,
}

impl<'a> FrameIndex<'a> {
    pub fn new(frames: &'a [OccupancyFrame]) -> FrameIndex<'a> {
        let mut by_slot: BTreeMap<&str, Vec<(NaiveDateTime, bool)>> = BTreeMap::new();
        for f in frames {
            by_slot
                .entry(f.slot_id.as_str())
                .or_default()
                .push((f.timestamp, f.busy));
        }
        for v in by_slot.values_mut() {
            v.sort_by_key(|(t, _)| *t);
        }
        FrameIndex { by_slot }
    }

    /// Latest observation of `slot` at or before `t`, carried forward only
    /// within `t`'s calendar day (cameras fire asynchronously, but stale
    /// values from a previous day say nothing about the current one).
    pub fn status_at(&self, slot: &str, t: NaiveDateTime) -> Option<bool> {
        let obs = self.by_slot.get(slot)?;
        let idx = obs.partition_point(|(ts, _)| *ts <= t);
        if idx == 0 {
            return None;
        }
        let (ts, busy) = obs[idx - 1];
        (ts.date() == t.date()).then_some(busy)
    }
}

/// Occupancy ratio of every sub-area at `t_start`, ordered by the model's
/// `cluster_ids`. The arriving car's own slot counts as busy. Returns the
/// ratios plus the number of clusters that had no observation yet (their
/// ratio is reported as 0).
pub fn occupancy_vector(
    slot_id: &str,
    t_start: NaiveDateTime,
    frames: &FrameIndex,
    spatial: &SpatialModel,
) -> (Vec<f64>, usize) {
    let mut ratios = Vec::with_capacity(spatial.cluster_ids.len());
    let mut unobserved = 0;
    for cluster in &spatial.cluster_ids {
        let members = spatial.members(cluster);
        if members.is_empty() {
            ratios.push(0.0);
            continue;
        }
        let mut busy = 0usize;
        let mut observed = 0usize;
        for member in &members {
            let status = if *member == slot_id {
                Some(true)
            } else {
                frames.status_at(member, t_start)
            };
            match status {
                Some(b) => {
                    observed += 1;
                    if b {
                        busy += 1;
                    }
                }
                None => {}
            }
        }
        if observed == 0 {
            unobserved += 1;
            ratios.push(0.0);
        } else {
            ratios.push(busy as f64 / members.len() as f64);
        }
    }
    (ratios, unobserved)
}

/// Encoded training rows: one per labeled event, no missing values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub column_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Original feature code → encoded column names.
    pub column_groups: BTreeMap<String, Vec<String>>,
    pub targets: Vec<usize>,
    pub n_classes: usize,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// New matrix holding the given rows (indices into `self`), preserving
    /// schema and groups.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            column_names: self.column_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            column_groups: self.column_groups.clone(),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
            n_classes: self.n_classes,
        }
    }

    /// Same rows with replacement targets (used by the ordinal
    /// decomposition's binary subproblems).
    pub fn with_targets(&self, targets: Vec<usize>, n_classes: usize) -> FeatureMatrix {
        assert_eq!(targets.len(), self.rows.len());
        FeatureMatrix {
            column_names: self.column_names.clone(),
            rows: self.rows.clone(),
            column_groups: self.column_groups.clone(),
            targets,
            n_classes,
        }
    }

    pub fn schema_matches(&self, other: &FeatureMatrix) -> bool {
        self.column_names == other.column_names
    }
}

/// Builds the encoded matrix for a labeled event set.
///
/// Column vocabulary is fixed by construction: 7 weekday columns, the four
/// weather labels, the spatial model's slots and clusters (falling back to
/// the observed slots when no spatial model is attached). An event whose
/// slot is missing from the spatial model is an error.
pub fn build_matrix(
    labeled: &[(ParkingEvent, usize)],
    spec: &FeatureSpec,
    frames: &[OccupancyFrame],
    n_classes: usize,
) -> Result<FeatureMatrix> {
    spec.validate()?;

    let slot_vocab: Vec<String> = match &spec.spatial_ref {
        Some(model) => model.assignment.keys().cloned().collect(),
        None => {
            let mut v: Vec<String> = labeled
                .iter()
                .map(|(e, _)| e.slot_id.clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            v.sort();
            v
        }
    };

    if let Some(model) = &spec.spatial_ref {
        for (event, _) in labeled {
            if model.cluster_of(&event.slot_id).is_none() {
                return Err(Error::InvalidInput(format!(
                    "event {} references slot {} absent from the spatial model",
                    event.event_id, event.slot_id
                )));
            }
        }
    }

    // Column construction, later sorted by name.
    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    if spec.base.contains(&BaseFeature::Hour) {
        groups.insert("h".into(), vec!["h".into()]);
    }
    if spec.base.contains(&BaseFeature::Minute) {
        groups.insert("m".into(), vec!["m".into()]);
    }
    if spec.base.contains(&BaseFeature::DayOfWeek) {
        groups.insert("dw".into(), (0..7).map(|d| format!("dw={d}")).collect());
    }
    if spec.base.contains(&BaseFeature::Slot) {
        groups.insert(
            "s".into(),
            slot_vocab.iter().map(|s| format!("s={s}")).collect(),
        );
    }
    if spec.base.contains(&BaseFeature::Weather) {
        groups.insert(
            "wr".into(),
            Weather::ALL.iter().map(|w| format!("wr={w}")).collect(),
        );
    }
    let spatial = spec.spatial_ref.as_ref();
    if spec.use_spt {
        let model = spatial.expect("validated");
        groups.insert(
            "spt".into(),
            model.cluster_ids.iter().map(|c| format!("spt={c}")).collect(),
        );
    }
    if spec.use_ocy {
        let model = spatial.expect("validated");
        groups.insert(
            "ocy".into(),
            model.cluster_ids.iter().map(|c| format!("ocy={c}")).collect(),
        );
    }

    let mut column_names: Vec<String> = groups.values().flatten().cloned().collect();
    column_names.sort();
    let col_of: BTreeMap<&str, usize> = column_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();

    let index = FrameIndex::new(frames);
    let mut unobserved_total = 0usize;
    let mut rows = Vec::with_capacity(labeled.len());
    for (event, _) in labeled {
        let mut row = vec![0.0; column_names.len()];
        let ef = event_features(event);
        if spec.base.contains(&BaseFeature::Hour) {
            row[col_of["h"]] = f64::from(ef.hour);
        }
        if spec.base.contains(&BaseFeature::Minute) {
            row[col_of["m"]] = f64::from(ef.minute_5);
        }
        if spec.base.contains(&BaseFeature::DayOfWeek) {
            row[col_of[format!("dw={}", ef.day_of_week).as_str()]] = 1.0;
        }
        if spec.base.contains(&BaseFeature::Slot) {
            let name = format!("s={}", ef.slot_id);
            let idx = col_of.get(name.as_str()).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "event {} references slot {} outside the slot vocabulary",
                    event.event_id, event.slot_id
                ))
            })?;
            row[*idx] = 1.0;
        }
        if spec.base.contains(&BaseFeature::Weather) {
            row[col_of[format!("wr={}", ef.weather).as_str()]] = 1.0;
        }
        if let Some(model) = spatial {
            if spec.use_spt {
                let cluster = model.cluster_of(&event.slot_id).expect("checked above");
                row[col_of[format!("spt={cluster}").as_str()]] = 1.0;
            }
            if spec.use_ocy {
                let (ratios, unobserved) =
                    occupancy_vector(&event.slot_id, event.t_start, &index, model);
                unobserved_total += unobserved;
                for (cluster, ratio) in model.cluster_ids.iter().zip(ratios) {
                    row[col_of[format!("ocy={cluster}").as_str()]] = ratio;
                }
            }
        }
        rows.push(row);
    }
    if unobserved_total > 0 {
        log::warn!("{unobserved_total} cluster-occupancy lookups had no observations and were recorded as 0");
    }

    Ok(FeatureMatrix {
        column_names,
        rows,
        column_groups: groups,
        targets: labeled.iter().map(|(_, c)| *c).collect(),
        n_classes,
    })
}

/// Writes `features.csv` (header + numeric rows, plus a trailing `target`
/// column) and a JSON sidecar with the spec and column groups.
pub fn write_features_csv(
    matrix: &FeatureMatrix,
    spec: &FeatureSpec,
    out_dir: impl AsRef<std::path::Path>,
) -> Result<()> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let path = out_dir.join("features.csv");
    let mut w = csv::Writer::from_path(&path)
        .map_err(|e| Error::io(path.display().to_string(), std::io::Error::other(e)))?;
    let mut header: Vec<&str> = matrix.column_names.iter().map(|s| s.as_str()).collect();
    header.push("target");
    w.write_record(&header)
        .map_err(|e| Error::io(path.display().to_string(), std::io::Error::other(e)))?;
    for (row, target) in matrix.rows.iter().zip(&matrix.targets) {
        let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        record.push(target.to_string());
        w.write_record(&record)
            .map_err(|e| Error::io(path.display().to_string(), std::io::Error::other(e)))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;

    #[derive(Serialize)]
    struct Sidecar<'a> {
        spec: &'a FeatureSpec,
        column_groups: &'a BTreeMap<String, Vec<String>>,
        n_classes: usize,
        weekday_convention: &'a str,
    }
    let meta = out_dir.join("features.meta.json");
    let body = serde_json::to_string_pretty(&Sidecar {
        spec,
        column_groups: &matrix.column_groups,
        n_classes: matrix.n_classes,
        weekday_convention: "monday=0",
    })
    .map_err(|e| Error::Config(format!("cannot serialize feature sidecar: {e}")))?;
    std::fs::write(&meta, body).map_err(|e| Error::io(meta.display().to_string(), e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{SlotLayout, SlotPosition};
    use crate::spatial::kmeans_fit;
    use chrono::NaiveDate;

    fn event_at(slot: &str, h: u32, m: u32) -> ParkingEvent {
        ParkingEvent {
            event_id: format!("e-{slot}-{h}{m}"),
            slot_id: slot.into(),
            t_start: NaiveDate::from_ymd_opt(2015, 11, 12)
                .unwrap()
                .and_hms_opt(h, m, 0)
                .unwrap(),
            duration_min: 90,
            weather_start: Weather::Sunny,
            partial: false,
        }
    }

    fn frame_at(slot: &str, h: u32, m: u32, busy: bool) -> OccupancyFrame {
        OccupancyFrame {
            dataset: "d".into(),
            camera: "c".into(),
            timestamp: NaiveDate::from_ymd_opt(2015, 11, 12)
                .unwrap()
                .and_hms_opt(h, m, 0)
                .unwrap(),
            slot_id: slot.into(),
            busy,
            weather: Weather::Sunny,
        }
    }

    fn grid_layout(n: usize) -> SlotLayout {
        SlotLayout::new(
            (0..n)
                .map(|i| SlotPosition {
                    slot_id: format!("s{i:02}"),
                    x: (i % 10) as f64 * 10.0,
                    y: (i / 10) as f64 * 200.0,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn calendar_features_follow_conventions() {
        // 2015-11-12 was a Thursday.
        let f = event_features(&event_at("s00", 9, 17));
        assert_eq!(f.hour, 9);
        assert_eq!(f.minute_5, 15);
        assert_eq!(f.day_of_week, 3);
        assert_eq!(f.weather, Weather::Sunny);

        let g = event_features(&event_at("s00", 7, 4));
        assert_eq!(g.minute_5, 0);
    }

    #[test]
    fn occupancy_counts_own_slot_as_busy() {
        // 28-slot lot, single cluster; only the arriving car is present.
        let layout = grid_layout(28);
        let model = kmeans_fit(&layout, 2, 1).unwrap();
        // Collapse to one cluster by rebuilding the assignment map.
        let mut model = model;
        for v in model.assignment.values_mut() {
            *v = "0".into();
        }
        model.cluster_ids = vec!["0".into()];

        let frames: Vec<OccupancyFrame> = (0..28)
            .map(|i| frame_at(&format!("s{i:02}"), 8, 0, false))
            .collect();
        let index = FrameIndex::new(&frames);
        let (ratios, warn) = occupancy_vector(
            "s03",
            NaiveDate::from_ymd_opt(2015, 11, 12)
                .unwrap()
                .and_hms_opt(9, 0, 0)
                .unwrap(),
            &index,
            &model,
        );
        assert_eq!(warn, 0);
        assert_eq!(ratios.len(), 1);
        approx::assert_abs_diff_eq!(ratios[0], 1.0 / 28.0, epsilon = 1e-12);
    }

    #[test]
    fn occupancy_ratio_is_busy_over_cluster_size() {
        let layout = grid_layout(10);
        let mut model = kmeans_fit(&layout, 2, 1).unwrap();
        for v in model.assignment.values_mut() {
            *v = "0".into();
        }
        model.cluster_ids = vec!["0".into()];

        // 4 busy of 10 at 09:00 (the arriving car's slot among them).
        let frames: Vec<OccupancyFrame> = (0..10)
            .map(|i| frame_at(&format!("s{i:02}"), 8, 30, i < 4))
            .collect();
        let index = FrameIndex::new(&frames);
        let t = NaiveDate::from_ymd_opt(2015, 11, 12)
            .unwrap()
            .and_hms_opt(9, 0, 0)
            .unwrap();
        let (ratios, _) = occupancy_vector("s00", t, &index, &model);
        approx::assert_abs_diff_eq!(ratios[0], 0.4, epsilon = 1e-12);
    }

    #[test]
    fn unobserved_cluster_reports_zero_with_warning() {
        let layout = grid_layout(20);
        let model = kmeans_fit(&layout, 2, 1).unwrap();
        let observed_cluster = model.cluster_of("s00").unwrap().to_string();
        let frames = vec![frame_at("s00", 8, 0, false)];
        let index = FrameIndex::new(&frames);
        let t = NaiveDate::from_ymd_opt(2015, 11, 12)
            .unwrap()
            .and_hms_opt(9, 0, 0)
            .unwrap();
        let (ratios, warn) = occupancy_vector("s00", t, &index, &model);
        assert_eq!(warn, 1, "the other cluster has no observations");
        for (cluster, ratio) in model.cluster_ids.iter().zip(&ratios) {
            if *cluster != observed_cluster {
                assert_eq!(*ratio, 0.0);
            }
        }
    }

    #[test]
    fn lvcf_does_not_cross_days() {
        let mut frames = vec![frame_at("s00", 20, 0, true)];
        frames.push(OccupancyFrame {
            timestamp: NaiveDate::from_ymd_opt(2015, 11, 13)
                .unwrap()
                .and_hms_opt(9, 0, 0)
                .unwrap(),
            ..frame_at("s00", 9, 0, true)
        });
        let index = FrameIndex::new(&frames);
        let next_morning = NaiveDate::from_ymd_opt(2015, 11, 13)
            .unwrap()
            .and_hms_opt(8, 0, 0)
            .unwrap();
        assert_eq!(index.status_at("s00", next_morning), None);
    }

    #[test]
    fn single_feature_matrix_has_one_column() {
        let labeled = vec![(event_at("s00", 9, 0), 1), (event_at("s01", 10, 0), 2)];
        let m = build_matrix(&labeled, &FeatureSpec::single(BaseFeature::Hour), &[], 3).unwrap();
        assert_eq!(m.column_names, vec!["h"]);
        assert_eq!(m.rows, vec![vec![9.0], vec![10.0]]);
        assert_eq!(m.targets, vec![1, 2]);
    }

    #[test]
    fn full_matrix_has_expected_column_count() {
        let layout = grid_layout(12);
        let model = kmeans_fit(&layout, 4, 5).unwrap();
        let labeled: Vec<(ParkingEvent, usize)> = (0..12)
            .map(|i| (event_at(&format!("s{i:02}"), 7 + (i as u32) % 12, 0), i % 3))
            .collect();
        let frames: Vec<OccupancyFrame> = (0..12)
            .map(|i| frame_at(&format!("s{i:02}"), 6, 0, false))
            .collect();
        let spec = FeatureSpec::all_base().with_spatial(model);
        let m = build_matrix(&labeled, &spec, &frames, 3).unwrap();
        // 2 numeric + 7 dw + 12 s + 4 wr + 4 spt + 4 ocy
        assert_eq!(m.n_cols(), 2 + 7 + 12 + 4 + 4 + 4);
        // Sorted column order.
        let mut sorted = m.column_names.clone();
        sorted.sort();
        assert_eq!(m.column_names, sorted);
        // One-hot groups sum to exactly 1 per row.
        for group in ["dw", "s", "wr", "spt"] {
            let cols: Vec<usize> = m.column_groups[group]
                .iter()
                .map(|c| m.column_index(c).unwrap())
                .collect();
            for row in &m.rows {
                let sum: f64 = cols.iter().map(|&c| row[c]).sum();
                assert_eq!(sum, 1.0);
            }
        }
        // Occupancy ratios live in [0, 1].
        for col in &m.column_groups["ocy"] {
            let c = m.column_index(col).unwrap();
            for row in &m.rows {
                assert!((0.0..=1.0).contains(&row[c]));
            }
        }
    }

    #[test]
    fn build_matrix_is_deterministic() {
        let layout = grid_layout(6);
        let model = kmeans_fit(&layout, 2, 5).unwrap();
        let labeled: Vec<(ParkingEvent, usize)> = (0..6)
            .map(|i| (event_at(&format!("s{i:02}"), 9, 5 * (i as u32)), i % 2))
            .collect();
        let frames: Vec<OccupancyFrame> = (0..6)
            .map(|i| frame_at(&format!("s{i:02}"), 8, 0, i % 2 == 0))
            .collect();
        let spec = FeatureSpec::all_base().with_spatial(model);
        let a = build_matrix(&labeled, &spec, &frames, 2).unwrap();
        let b = build_matrix(&labeled, &spec, &frames, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dropping_ocy_removes_exactly_the_ratio_columns() {
        let layout = grid_layout(6);
        let model = kmeans_fit(&layout, 2, 5).unwrap();
        let labeled = vec![(event_at("s00", 9, 0), 0)];
        let frames = vec![frame_at("s00", 8, 0, false)];
        let with = FeatureSpec {
            use_ocy: true,
            ..FeatureSpec::all_base().with_spatial(model.clone())
        };
        let without = FeatureSpec {
            use_ocy: false,
            ..with.clone()
        };
        let a = build_matrix(&labeled, &with, &frames, 2).unwrap();
        let b = build_matrix(&labeled, &without, &frames, 2).unwrap();
        let removed: Vec<&String> = a
            .column_names
            .iter()
            .filter(|c| !b.column_names.contains(c))
            .collect();
        assert!(removed.iter().all(|c| c.starts_with("ocy=")));
        assert_eq!(a.n_cols() - removed.len(), b.n_cols());
    }

    #[test]
    fn event_outside_spatial_model_is_error() {
        let layout = grid_layout(4);
        let model = kmeans_fit(&layout, 2, 5).unwrap();
        let labeled = vec![(event_at("s99", 9, 0), 0)];
        let spec = FeatureSpec::all_base().with_spatial(model);
        assert!(build_matrix(&labeled, &spec, &[], 2).is_err());
    }

    #[test]
    fn spt_without_model_is_invalid() {
        let spec = FeatureSpec {
            use_spt: true,
            ..FeatureSpec::all_base()
        };
        assert!(spec.validate().is_err());
    }
}
