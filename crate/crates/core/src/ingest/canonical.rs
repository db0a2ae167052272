//! The canonical on-disk schema shared by every downstream stage.
//!
//! `frames.csv`: `dataset,camera,timestamp,slot_id,busy,weather` with
//! ISO-8601 minute timestamps and busy in {0,1}. `layout.csv`:
//! `slot_id,x,y`. Writing then reading is lossless.

use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;

use super::{normalize_frames, IngestWarnings, OccupancyFrame, SlotLayout, SlotPosition, Weather};
use crate::{Error, Result};

const FRAMES_FILE: &str = "frames.csv";
const LAYOUT_FILE: &str = "layout.csv";
const TIMESTAMP_FMT: &str = "%Y-%m-%dT%H:%M";

/// Locations produced by [`write_canonical`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalPaths {
    pub frames_csv: PathBuf,
    pub layout_csv: PathBuf,
}

/// Writes `frames.csv` and `layout.csv` under `out_dir`.
///
/// Every slot referenced by a frame must exist in the layout; extra layout
/// slots are allowed and written as-is.
pub fn write_canonical(
    frames: &[OccupancyFrame],
    layout: &SlotLayout,
    out_dir: impl AsRef<Path>,
) -> Result<CanonicalPaths> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;

    for frame in frames {
        if !layout.contains(&frame.slot_id) {
            return Err(Error::InvalidInput(format!(
                "frame references slot {} absent from layout",
                frame.slot_id
            )));
        }
    }

    let frames_csv = out_dir.join(FRAMES_FILE);
    let mut w = csv::Writer::from_path(&frames_csv)
        .map_err(|e| Error::io(frames_csv.display().to_string(), io_of(e)))?;
    w.write_record(["dataset", "camera", "timestamp", "slot_id", "busy", "weather"])
        .map_err(|e| Error::io(frames_csv.display().to_string(), io_of(e)))?;
    for f in frames {
        w.write_record([
            f.dataset.as_str(),
            f.camera.as_str(),
            &f.timestamp.format(TIMESTAMP_FMT).to_string(),
            f.slot_id.as_str(),
            if f.busy { "1" } else { "0" },
            f.weather.as_str(),
        ])
        .map_err(|e| Error::io(frames_csv.display().to_string(), io_of(e)))?;
    }
    w.flush()
        .map_err(|e| Error::io(frames_csv.display().to_string(), e))?;

    let layout_csv = out_dir.join(LAYOUT_FILE);
    let mut w = csv::Writer::from_path(&layout_csv)
        .map_err(|e| Error::io(layout_csv.display().to_string(), io_of(e)))?;
    w.write_record(["slot_id", "x", "y"])
        .map_err(|e| Error::io(layout_csv.display().to_string(), io_of(e)))?;
    for slot in layout.slots() {
        w.write_record([
            slot.slot_id.as_str(),
            &slot.x.to_string(),
            &slot.y.to_string(),
        ])
        .map_err(|e| Error::io(layout_csv.display().to_string(), io_of(e)))?;
    }
    w.flush()
        .map_err(|e| Error::io(layout_csv.display().to_string(), e))?;

    Ok(CanonicalPaths { frames_csv, layout_csv })
}

/// Reads a canonical `frames.csv`.
pub fn read_frames_csv(path: impl AsRef<Path>) -> Result<Vec<OccupancyFrame>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::io(&display, io_of(e)))?;

    let header = reader
        .headers()
        .map_err(|e| Error::parse(&display, 1, e.to_string()))?
        .clone();
    let expected = ["dataset", "camera", "timestamp", "slot_id", "busy", "weather"];
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::parse(
            &display,
            1,
            format!("unexpected header {header:?}"),
        ));
    }

    let mut frames = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let r = record.map_err(|e| Error::parse(&display, line, e.to_string()))?;
        if r.len() != 6 {
            return Err(Error::parse(&display, line, format!("expected 6 fields, found {}", r.len())));
        }
        let timestamp = NaiveDateTime::parse_from_str(r[2].trim(), TIMESTAMP_FMT)
            .map_err(|_| Error::parse(&display, line, format!("bad timestamp {:?}", &r[2])))?;
        let busy = match r[4].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::parse(&display, line, format!("busy must be 0 or 1, found {other:?}")))
            }
        };
        frames.push(OccupancyFrame {
            dataset: r[0].to_string(),
            camera: r[1].to_string(),
            timestamp,
            slot_id: r[3].trim().to_string(),
            busy,
            weather: Weather::parse_lossy(&r[5]),
        });
    }
    let mut warnings = IngestWarnings::default();
    normalize_frames(&mut frames, &mut warnings);
    Ok(frames)
}

/// Reads a canonical `layout.csv`.
pub fn read_layout_csv(path: impl AsRef<Path>) -> Result<SlotLayout> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::io(&display, io_of(e)))?;

    let mut slots = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let r = record.map_err(|e| Error::parse(&display, line, e.to_string()))?;
        if r.len() != 3 {
            return Err(Error::parse(&display, line, format!("expected 3 fields, found {}", r.len())));
        }
        let x = r[1].trim().parse().map_err(|_| {
            Error::parse(&display, line, format!("bad x coordinate {:?}", &r[1]))
        })?;
        let y = r[2].trim().parse().map_err(|_| {
            Error::parse(&display, line, format!("bad y coordinate {:?}", &r[2]))
        })?;
        slots.push(SlotPosition {
            slot_id: r[0].trim().to_string(),
            x,
            y,
        });
    }
    SlotLayout::new(slots)
}

/// Builds a deterministic placeholder layout for datasets that carry no
/// slot coordinates (CNR logs): slots are laid out on a line in id order.
pub fn synthetic_layout(frames: &[OccupancyFrame]) -> SlotLayout {
    let mut ids: Vec<&str> = frames.iter().map(|f| f.slot_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    let slots = ids
        .into_iter()
        .enumerate()
        .map(|(i, id)| SlotPosition {
            slot_id: id.to_string(),
            x: i as f64,
            y: 0.0,
        })
        .collect();
    SlotLayout::new(slots).expect("deduped ids are unique")
}

fn io_of(e: csv::Error) -> std::io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        other => std::io::Error::other(format!("{other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn frame(slot: &str, minute: u32, busy: bool) -> OccupancyFrame {
        OccupancyFrame {
            dataset: "d".into(),
            camera: "c".into(),
            timestamp: NaiveDate::from_ymd_opt(2015, 11, 12)
                .unwrap()
                .and_hms_opt(9, minute, 0)
                .unwrap(),
            slot_id: slot.into(),
            busy,
            weather: Weather::Cloudy,
        }
    }

    fn layout(ids: &[&str]) -> SlotLayout {
        SlotLayout::new(
            ids.iter()
                .enumerate()
                .map(|(i, id)| SlotPosition {
                    slot_id: id.to_string(),
                    x: i as f64 * 1.5,
                    y: 3.25,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_lossless() {
        let frames = vec![frame("1", 0, true), frame("1", 30, false), frame("2", 0, false)];
        let lay = layout(&["1", "2"]);
        let dir = tempfile::tempdir().unwrap();
        let paths = write_canonical(&frames, &lay, dir.path()).unwrap();

        let frames2 = read_frames_csv(&paths.frames_csv).unwrap();
        let lay2 = read_layout_csv(&paths.layout_csv).unwrap();
        assert_eq!(frames, frames2);
        assert_eq!(lay, lay2);
    }

    #[test]
    fn empty_inputs_give_header_only_files() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_canonical(&[], &SlotLayout::default(), dir.path()).unwrap();
        let contents = std::fs::read_to_string(&paths.frames_csv).unwrap();
        assert_eq!(contents.lines().count(), 1);
        assert!(read_frames_csv(&paths.frames_csv).unwrap().is_empty());
        assert!(read_layout_csv(&paths.layout_csv).unwrap().is_empty());
    }

    #[test]
    fn frame_with_unknown_slot_is_rejected() {
        let frames = vec![frame("99", 0, true)];
        let dir = tempfile::tempdir().unwrap();
        let err = write_canonical(&frames, &layout(&["1"]), dir.path()).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn row_count_is_preserved() {
        // One data row per frame: 4081 frames in, 4081 rows out.
        let mut frames = Vec::new();
        for i in 0..4081u32 {
            frames.push(OccupancyFrame {
                dataset: "cnr".into(),
                camera: "c".into(),
                timestamp: NaiveDate::from_ymd_opt(2015, 11, (1 + i / 200) as u32)
                    .unwrap()
                    .and_hms_opt((i / 60) % 24, i % 60, 0)
                    .unwrap(),
                slot_id: format!("s{}", i % 40),
                busy: i % 3 == 0,
                weather: Weather::Sunny,
            });
        }
        let mut warnings = IngestWarnings::default();
        normalize_frames(&mut frames, &mut warnings);
        assert_eq!(frames.len(), 4081, "fixture must be duplicate-free");

        let lay = synthetic_layout(&frames);
        let dir = tempfile::tempdir().unwrap();
        let paths = write_canonical(&frames, &lay, dir.path()).unwrap();
        let contents = std::fs::read_to_string(&paths.frames_csv).unwrap();
        assert_eq!(contents.lines().count(), 4081 + 1);
        assert_eq!(read_frames_csv(&paths.frames_csv).unwrap().len(), 4081);
    }

    #[test]
    fn synthetic_layout_covers_exactly_frame_slots() {
        let frames = vec![frame("b", 0, true), frame("a", 0, false), frame("b", 30, true)];
        let lay = synthetic_layout(&frames);
        let ids: Vec<&str> = lay.slot_ids().collect();
        assert_eq!(ids, vec!["a", "b"]);
    }
}
