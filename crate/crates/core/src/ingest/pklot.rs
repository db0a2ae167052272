//! PKLot-style annotation parsing.
//!
//! One XML file per camera image, named with the capture timestamp
//! (`2012-09-11_15_16_58.xml`). Each `<space>` element carries an `id`, an
//! `occupied` attribute, and a `<rotatedRect><center x y/>` giving the slot
//! position in image pixels. The weather label comes from the directory
//! layer (`.../Sunny/...`).

use std::path::Path;

use chrono::{NaiveDateTime, NaiveTime, Timelike};
use walkdir::WalkDir;

use super::{normalize_frames, IngestWarnings, OccupancyFrame, SlotLayout, SlotPosition, Weather};
use crate::{Error, Result};

/// Parses every annotation file under `dir` into frames plus the slot
/// layout. Layout coordinates come from the first annotation file in which
/// each space id appears; later files never move a slot (camera geometry is
/// fixed per lot).
pub fn parse_pklot_xml(
    dir: impl AsRef<Path>,
    dataset: &str,
) -> Result<(Vec<OccupancyFrame>, SlotLayout, IngestWarnings)> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::io(
            dir.display().to_string(),
            std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        ));
    }
    let camera = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "pklot".to_string());

    let mut files = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            Error::io(
                dir.display().to_string(),
                e.into_io_error()
                    .unwrap_or_else(|| std::io::Error::other("walkdir failure")),
            )
        })?;
        if entry.file_type().is_file()
            && entry
                .path()
                .extension()
                .map(|e| e.eq_ignore_ascii_case("xml"))
                .unwrap_or(false)
        {
            files.push(entry.into_path());
        }
    }
    files.sort();

    let mut frames = Vec::new();
    let mut layout_slots: Vec<SlotPosition> = Vec::new();
    let mut warnings = IngestWarnings::default();

    for file in &files {
        let timestamp = timestamp_from_name(file)?;
        let weather = weather_from_path(file);
        let contents = std::fs::read_to_string(file)
            .map_err(|e| Error::io(file.display().to_string(), e))?;
        parse_annotation(
            &contents,
            file,
            dataset,
            &camera,
            timestamp,
            weather,
            &mut frames,
            &mut layout_slots,
            &mut warnings,
        )?;
    }

    normalize_frames(&mut frames, &mut warnings);
    let layout = SlotLayout::new(layout_slots)?;
    Ok((frames, layout, warnings))
}

/// `2012-09-11_15_16_58` (seconds optional) from the file stem, truncated
/// to minute resolution.
fn timestamp_from_name(path: &Path) -> Result<NaiveDateTime> {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let parsed = NaiveDateTime::parse_from_str(&stem, "%Y-%m-%d_%H_%M_%S")
        .or_else(|_| NaiveDateTime::parse_from_str(&stem, "%Y-%m-%d_%H_%M"))
        .map_err(|_| {
            Error::parse(
                path.display().to_string(),
                0,
                format!("annotation file name {stem:?} is not a timestamp"),
            )
        })?;
    let t = parsed.time();
    Ok(NaiveDateTime::new(
        parsed.date(),
        NaiveTime::from_hms_opt(t.hour(), t.minute(), 0).unwrap(),
    ))
}

fn weather_from_path(path: &Path) -> Weather {
    for component in path.components() {
        let s = component.as_os_str().to_string_lossy();
        match s.to_ascii_lowercase().as_str() {
            "sunny" => return Weather::Sunny,
            "cloudy" => return Weather::Cloudy,
            "rainy" => return Weather::Rainy,
            _ => {}
        }
    }
    Weather::Unknown
}

#[allow(clippy::too_many_arguments)]
fn parse_annotation(
    contents: &str,
    file: &Path,
    dataset: &str,
    camera: &str,
    timestamp: NaiveDateTime,
    weather: Weather,
    frames: &mut Vec<OccupancyFrame>,
    layout_slots: &mut Vec<SlotPosition>,
    warnings: &mut IngestWarnings,
) -> Result<()> {
    let display = file.display().to_string();
    let doc = roxmltree::Document::parse(contents)
        .map_err(|e| Error::parse(&display, 0, format!("invalid XML: {e}")))?;

    for space in doc
        .root_element()
        .children()
        .filter(|n| n.has_tag_name("space"))
    {
        let id = match space.attribute("id") {
            Some(id) if !id.trim().is_empty() => id.trim().to_string(),
            _ => {
                warnings.warn_skipped(format!("{display}: space without id"));
                continue;
            }
        };
        let busy = match space.attribute("occupied") {
            Some("1") => true,
            Some("0") => false,
            Some(other) => {
                warnings.warn_skipped(format!(
                    "{display}: space {id} has unusable occupied attribute {other:?}"
                ));
                continue;
            }
            None => {
                warnings.warn_skipped(format!(
                    "{display}: space {id} is missing the occupied attribute"
                ));
                continue;
            }
        };

        if !layout_slots.iter().any(|p| p.slot_id == id) {
            match rect_center(&space) {
                Some((x, y)) => layout_slots.push(SlotPosition {
                    slot_id: id.clone(),
                    x,
                    y,
                }),
                None => {
                    warnings.warn_skipped(format!(
                        "{display}: space {id} has no rotated-rectangle center"
                    ));
                    continue;
                }
            }
        }

        frames.push(OccupancyFrame {
            dataset: dataset.to_string(),
            camera: camera.to_string(),
            timestamp,
            slot_id: id,
            busy,
            weather,
        });
    }
    Ok(())
}

fn rect_center(space: &roxmltree::Node) -> Option<(f64, f64)> {
    let rect = space
        .children()
        .find(|n| n.has_tag_name("rotatedRect"))?;
    let center = rect.children().find(|n| n.has_tag_name("center"))?;
    let x = center.attribute("x")?.trim().parse().ok()?;
    let y = center.attribute("y")?.trim().parse().ok()?;
    Some((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    const ANNOTATION: &str = r#"<parking id="pucpr">
  <space id="3" occupied="1">
    <rotatedRect>
      <center x="412" y="207" />
      <size w="55" h="32" />
      <angle d="-74" />
    </rotatedRect>
  </space>
  <space id="4" occupied="0">
    <rotatedRect>
      <center x="300" y="100" />
    </rotatedRect>
  </space>
  <space id="5">
    <rotatedRect><center x="1" y="2" /></rotatedRect>
  </space>
</parking>"#;

    fn fixture_dir() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        let sunny = dir.path().join("Sunny").join("2012-09-11");
        std::fs::create_dir_all(&sunny).unwrap();
        std::fs::write(sunny.join("2012-09-11_15_16_58.xml"), ANNOTATION).unwrap();
        // Second file moves slot 3 slightly; the layout must keep first-seen.
        let moved = ANNOTATION.replace("x=\"412\" y=\"207\"", "x=\"413\" y=\"208\"");
        std::fs::write(sunny.join("2012-09-11_15_46_12.xml"), moved).unwrap();
        dir
    }

    #[test]
    fn parses_spaces_into_frames_and_layout() {
        let dir = fixture_dir();
        let (frames, layout, warnings) = parse_pklot_xml(dir.path(), "pucpr").unwrap();

        // Two files, two usable spaces each; the space with no occupied
        // attribute is skipped (one warning per file).
        assert_eq!(frames.len(), 4);
        assert_eq!(warnings.skipped, 2);

        let first = frames
            .iter()
            .find(|f| f.slot_id == "3" && f.timestamp.to_string() == "2012-09-11 15:16:00")
            .expect("slot 3 frame at 15:16");
        assert!(first.busy);
        assert_eq!(first.weather, Weather::Sunny);

        let complement = frames
            .iter()
            .find(|f| f.slot_id == "4" && f.timestamp.to_string() == "2012-09-11 15:16:00")
            .unwrap();
        assert!(!complement.busy);

        let pos = layout.position("3").unwrap();
        assert_eq!((pos.x, pos.y), (412.0, 207.0)); // first-seen wins
        assert_eq!(layout.len(), 2);
    }

    #[test]
    fn unparseable_timestamp_is_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("notes.xml"), ANNOTATION).unwrap();
        assert!(parse_pklot_xml(dir.path(), "x").is_err());
    }

    #[test]
    fn weather_defaults_to_unknown_outside_labeled_layers() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("2012-09-11_15_16_58.xml"), ANNOTATION).unwrap();
        let (frames, _, _) = parse_pklot_xml(dir.path(), "x").unwrap();
        assert!(frames.iter().all(|f| f.weather == Weather::Unknown));
    }
}
