//! CNR-style occupancy CSV parsing.
//!
//! Expected columns: date, time, slot, occupancy bit, optional occupancy
//! string, weather. A header row is detected by a non-date first field and
//! validated against those names.

use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};

use super::{normalize_frames, IngestWarnings, OccupancyFrame, Weather};
use crate::{Error, Result};

/// Field order of the date column. CNR logs from the Nov 2015 – Feb 2016
/// collection window are day-first (`12/11/2015` is 12 November).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DateOrder {
    #[default]
    DayMonthYear,
    MonthDayYear,
}

impl DateOrder {
    fn parse(self, s: &str) -> Option<NaiveDate> {
        let fmt = match self {
            DateOrder::DayMonthYear => "%d/%m/%Y",
            DateOrder::MonthDayYear => "%m/%d/%Y",
        };
        NaiveDate::parse_from_str(s.trim(), fmt).ok()
    }
}

/// Parses a CNR occupancy CSV with the default day-first date convention.
pub fn parse_cnr_csv(
    path: impl AsRef<Path>,
    dataset: &str,
    camera: &str,
) -> Result<(Vec<OccupancyFrame>, IngestWarnings)> {
    parse_cnr_csv_with(path, dataset, camera, DateOrder::default())
}

/// Parses a CNR occupancy CSV with an explicit date convention.
///
/// Rows come back sorted by (slot, timestamp). Unknown weather strings map
/// to [`Weather::Unknown`] and bump the warning counter; malformed rows are
/// errors carrying the 1-based line number.
pub fn parse_cnr_csv_with(
    path: impl AsRef<Path>,
    dataset: &str,
    camera: &str,
    date_order: DateOrder,
) -> Result<(Vec<OccupancyFrame>, IngestWarnings)> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(&display, io_of(e)),
            _ => Error::parse(&display, 0, e.to_string()),
        })?;

    let mut frames = Vec::new();
    let mut warnings = IngestWarnings::default();

    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1;
        let record =
            record.map_err(|e| Error::parse(&display, line, format!("unreadable row: {e}")))?;
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if idx == 0 && looks_like_header(&record) {
            validate_header(&record, &display)?;
            continue;
        }
        frames.push(parse_row(&record, dataset, camera, date_order, &display, line, &mut warnings)?);
    }

    normalize_frames(&mut frames, &mut warnings);
    Ok((frames, warnings))
}

fn io_of(e: csv::Error) -> std::io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        other => std::io::Error::other(format!("{other:?}")),
    }
}

fn looks_like_header(record: &csv::StringRecord) -> bool {
    record
        .get(0)
        .map(|f| f.trim().to_ascii_lowercase().contains("date"))
        .unwrap_or(false)
}

fn validate_header(record: &csv::StringRecord, path: &str) -> Result<()> {
    let names: Vec<String> = record
        .iter()
        .map(|f| f.trim().to_ascii_lowercase())
        .collect();
    let ok = names.len() >= 5
        && names[0].contains("date")
        && names[1].contains("time")
        && names[2].contains("slot")
        && names[3].contains("occupancy")
        && names.last().map(|n| n.contains("weather")).unwrap_or(false);
    if ok {
        Ok(())
    } else {
        Err(Error::parse(
            path,
            1,
            format!("unrecognized header {names:?}; expected date,time,slot,occupancy bit[,occupancy string],weather"),
        ))
    }
}

fn parse_row(
    record: &csv::StringRecord,
    dataset: &str,
    camera: &str,
    date_order: DateOrder,
    path: &str,
    line: usize,
    warnings: &mut IngestWarnings,
) -> Result<OccupancyFrame> {
    if record.len() < 5 || record.len() > 6 {
        return Err(Error::parse(
            path,
            line,
            format!("expected 5 or 6 fields, found {}", record.len()),
        ));
    }
    let date = date_order
        .parse(&record[0])
        .ok_or_else(|| Error::parse(path, line, format!("bad date field {:?}", &record[0])))?;
    let time = NaiveTime::parse_from_str(record[1].trim(), "%H:%M")
        .or_else(|_| NaiveTime::parse_from_str(record[1].trim(), "%H:%M:%S"))
        .map_err(|_| Error::parse(path, line, format!("bad time field {:?}", &record[1])))?;
    let slot_id = record[2].trim().to_string();
    if slot_id.is_empty() {
        return Err(Error::parse(path, line, "empty slot id"));
    }
    let busy = match record[3].trim() {
        "0" => false,
        "1" => true,
        other => {
            return Err(Error::parse(
                path,
                line,
                format!("occupancy bit must be 0 or 1, found {other:?}"),
            ))
        }
    };
    let weather_field = &record[record.len() - 1];
    let weather = Weather::parse_lossy(weather_field);
    if weather == Weather::Unknown && !weather_field.trim().eq_ignore_ascii_case("unknown") {
        warnings.unknown_weather += 1;
        log::warn!("{path}:{line}: unknown weather string {weather_field:?}");
    }

    // Minute resolution: truncate any seconds.
    let minute_time = NaiveTime::from_hms_opt(
        chrono::Timelike::hour(&time),
        chrono::Timelike::minute(&time),
        0,
    )
    .expect("hour/minute in range");

    Ok(OccupancyFrame {
        dataset: dataset.to_string(),
        camera: camera.to_string(),
        timestamp: NaiveDateTime::new(date, minute_time),
        slot_id,
        busy,
        weather,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_excerpt_rows() {
        let f = write_file(
            "Date,Time,Slot,Occupancy Bit,Occupancy String,Weather\n\
             12/11/2015,09:15,275,1,busy,SUNNY\n\
             12/11/2015,07:15,275,0,free,SUNNY\n",
        );
        let (frames, warnings) = parse_cnr_csv(f.path(), "cnr", "cam").unwrap();
        assert_eq!(frames.len(), 2);
        // Sorted by timestamp within the slot.
        assert_eq!(frames[0].timestamp.to_string(), "2015-11-12 07:15:00");
        assert!(!frames[0].busy);
        assert_eq!(frames[1].timestamp.to_string(), "2015-11-12 09:15:00");
        assert!(frames[1].busy);
        assert_eq!(frames[1].slot_id, "275");
        assert_eq!(frames[1].weather, Weather::Sunny);
        assert_eq!(warnings.unknown_weather, 0);
    }

    #[test]
    fn empty_file_gives_empty_list() {
        let f = write_file("");
        let (frames, _) = parse_cnr_csv(f.path(), "cnr", "cam").unwrap();
        assert!(frames.is_empty());
    }

    #[test]
    fn header_only_gives_empty_list() {
        let f = write_file("Date,Time,Slot,Occupancy Bit,Weather\n");
        let (frames, _) = parse_cnr_csv(f.path(), "cnr", "cam").unwrap();
        assert!(frames.is_empty());
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let f = write_file("12/11/2015,09:15,275,1,busy,SUNNY\n12/11/2015,xx:15,275,1,busy,SUNNY\n");
        let err = parse_cnr_csv(f.path(), "cnr", "cam").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_weather_warns_but_parses() {
        let f = write_file("12/11/2015,09:15,275,1,busy,FOGGY\n");
        let (frames, warnings) = parse_cnr_csv(f.path(), "cnr", "cam").unwrap();
        assert_eq!(frames[0].weather, Weather::Unknown);
        assert_eq!(warnings.unknown_weather, 1);
    }

    #[test]
    fn month_first_override() {
        let f = write_file("12/11/2015,09:15,275,1,busy,SUNNY\n");
        let (frames, _) =
            parse_cnr_csv_with(f.path(), "cnr", "cam", DateOrder::MonthDayYear).unwrap();
        assert_eq!(frames[0].timestamp.to_string(), "2015-12-11 09:15:00");
    }

    #[test]
    fn bad_occupancy_bit_is_error() {
        let f = write_file("12/11/2015,09:15,275,2,busy,SUNNY\n");
        assert!(parse_cnr_csv(f.path(), "cnr", "cam").is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = parse_cnr_csv("/nonexistent/enoent.csv", "cnr", "cam").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
