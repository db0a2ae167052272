//! Parsing of raw occupancy datasets into canonical frame and layout tables.
//!
//! Two source formats are supported: CNR-style CSV logs (one row per slot
//! observation) and PKLot-style directories of per-image XML annotations.
//! Both converge on [`OccupancyFrame`] plus [`SlotLayout`], which the rest
//! of the pipeline consumes. Parsing is maximally permissive: recoverable
//! oddities (unknown weather strings, annotation spaces without an occupancy
//! attribute, duplicate observations) degrade to warnings, while structural
//! problems (malformed rows, unparseable timestamps) are errors.

mod canonical;
mod cnr;
mod pklot;

pub use canonical::{
    read_frames_csv, read_layout_csv, synthetic_layout, write_canonical, CanonicalPaths,
};
pub use cnr::{parse_cnr_csv, parse_cnr_csv_with, DateOrder};
pub use pklot::parse_pklot_xml;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Weather label attached to each observation frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weather {
    Sunny,
    Cloudy,
    Rainy,
    Unknown,
}

impl Weather {
    /// All label values, in canonical encoding order.
    pub const ALL: [Weather; 4] = [
        Weather::Sunny,
        Weather::Cloudy,
        Weather::Rainy,
        Weather::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Weather::Sunny => "sunny",
            Weather::Cloudy => "cloudy",
            Weather::Rainy => "rainy",
            Weather::Unknown => "unknown",
        }
    }

    /// Case-insensitive parse; anything unrecognized maps to `Unknown`.
    pub fn parse_lossy(s: &str) -> Weather {
        match s.trim().to_ascii_lowercase().as_str() {
            "sunny" => Weather::Sunny,
            "cloudy" => Weather::Cloudy,
            "rainy" => Weather::Rainy,
            _ => Weather::Unknown,
        }
    }
}

impl std::fmt::Display for Weather {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One timestamped busy/free observation of one parking slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancyFrame {
    pub dataset: String,
    pub camera: String,
    /// Minute resolution; seconds are always zero.
    pub timestamp: NaiveDateTime,
    pub slot_id: String,
    pub busy: bool,
    pub weather: Weather,
}

/// Position of one slot in the lot's coordinate system (pixels or meters).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotPosition {
    pub slot_id: String,
    pub x: f64,
    pub y: f64,
}

/// The lot geometry: every slot id exactly once, sorted by id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SlotLayout {
    slots: Vec<SlotPosition>,
}

impl SlotLayout {
    /// Builds a layout, rejecting duplicate slot ids.
    pub fn new(mut slots: Vec<SlotPosition>) -> Result<SlotLayout> {
        slots.sort_by(|a, b| a.slot_id.cmp(&b.slot_id));
        for pair in slots.windows(2) {
            if pair[0].slot_id == pair[1].slot_id {
                return Err(Error::InvalidInput(format!(
                    "duplicate slot id in layout: {}",
                    pair[0].slot_id
                )));
            }
        }
        Ok(SlotLayout { slots })
    }

    pub fn slots(&self) -> &[SlotPosition] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn contains(&self, slot_id: &str) -> bool {
        self.position(slot_id).is_some()
    }

    pub fn position(&self, slot_id: &str) -> Option<&SlotPosition> {
        self.slots
            .binary_search_by(|p| p.slot_id.as_str().cmp(slot_id))
            .ok()
            .map(|i| &self.slots[i])
    }

    pub fn slot_ids(&self) -> impl Iterator<Item = &str> {
        self.slots.iter().map(|p| p.slot_id.as_str())
    }
}

/// Counters and per-incident messages for recoverable parsing oddities.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestWarnings {
    /// Weather strings that did not match a known label.
    pub unknown_weather: usize,
    /// Rows or annotation spaces skipped entirely.
    pub skipped: usize,
    /// One entry per skipped item, in input order.
    pub messages: Vec<String>,
}

impl IngestWarnings {
    pub fn warn_skipped(&mut self, message: String) {
        log::warn!("{message}");
        self.skipped += 1;
        self.messages.push(message);
    }

    pub fn merge(&mut self, other: IngestWarnings) {
        self.unknown_weather += other.unknown_weather;
        self.skipped += other.skipped;
        self.messages.extend(other.messages);
    }
}

/// Sorts frames by (dataset, slot, timestamp) and drops duplicate
/// observations of the same slot-minute, keeping the first seen.
pub(crate) fn normalize_frames(frames: &mut Vec<OccupancyFrame>, warnings: &mut IngestWarnings) {
    frames.sort_by(|a, b| {
        (&a.dataset, &a.slot_id, a.timestamp).cmp(&(&b.dataset, &b.slot_id, b.timestamp))
    });
    let before = frames.len();
    frames.dedup_by(|next, prev| {
        let dup = next.dataset == prev.dataset
            && next.slot_id == prev.slot_id
            && next.timestamp == prev.timestamp;
        if dup {
            log::warn!(
                "dropping duplicate observation of slot {} at {}",
                next.slot_id,
                next.timestamp
            );
        }
        dup
    });
    let dropped = before - frames.len();
    if dropped > 0 {
        warnings.skipped += dropped;
        warnings
            .messages
            .push(format!("dropped {dropped} duplicate slot-minute observations"));
    }
}
