use std::io::{BufRead, Write};

use chrono::NaiveDateTime;

use super::{ActivityAnnotation, IngestError, SensorEvent, SensorMap, TimeSlice};
use crate::label::ActivityLabel;

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

const SENSOR_HEADER: &str = "Start time\t\tEnd time\t\tLocation\tType\tPlace\n\
----------\t\t--------\t\t--------\t----\t-----\n";
const ACTIVITY_HEADER: &str = "Start time\t\tEnd time\t\tActivity\n\
----------\t\t--------\t\t--------\n";

fn is_header(line: &str) -> bool {
    let trimmed = line.trim_start();
    trimmed.is_empty() || trimmed.starts_with("Start") || trimmed.starts_with('-')
}

fn parse_timestamp(date: &str, time: &str, line: usize) -> Result<NaiveDateTime, IngestError> {
    NaiveDateTime::parse_from_str(&format!("{date} {time}"), TIMESTAMP_FORMAT).map_err(|e| {
        IngestError::Malformed {
            line,
            reason: format!("bad timestamp `{date} {time}`: {e}"),
        }
    })
}

fn interval(
    tokens: &[&str],
    line: usize,
) -> Result<(NaiveDateTime, NaiveDateTime), IngestError> {
    let start = parse_timestamp(tokens[0], tokens[1], line)?;
    let end = parse_timestamp(tokens[2], tokens[3], line)?;
    if end < start {
        return Err(IngestError::EndBeforeStart { line });
    }
    Ok((start, end))
}

/// Parses a sensor activation file. Events come back sorted by start time.
pub fn parse_sensors(reader: impl BufRead, map: &SensorMap) -> Result<Vec<SensorEvent>, IngestError> {
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if is_header(&line) {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 7 {
            return Err(IngestError::Malformed {
                line: line_no,
                reason: format!("expected 7 fields, found {}", tokens.len()),
            });
        }
        let (start, end) = interval(&tokens, line_no)?;
        let (location, kind, place) = (tokens[4], tokens[5], tokens[6]);
        let sensor_id = map
            .index_of(location, kind, place)
            .ok_or_else(|| IngestError::UnknownSensor {
                line: line_no,
                token: format!("{location} {kind} {place}"),
            })?;
        events.push(SensorEvent {
            sensor_id,
            start,
            end,
            location: location.to_string(),
            kind: kind.to_string(),
            place: place.to_string(),
        });
    }
    events.sort_by_key(|e| e.start);
    Ok(events)
}

/// Parses an activity annotation file, sorted by start time.
pub fn parse_activities(reader: impl BufRead) -> Result<Vec<ActivityAnnotation>, IngestError> {
    let mut annotations = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if is_header(&line) {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 5 {
            return Err(IngestError::Malformed {
                line: line_no,
                reason: format!("expected 5 fields, found {}", tokens.len()),
            });
        }
        let (start, end) = interval(&tokens, line_no)?;
        let label: ActivityLabel = tokens[4].parse().map_err(|_| IngestError::UnknownLabel {
            line: line_no,
            token: tokens[4].to_string(),
        })?;
        annotations.push(ActivityAnnotation { label, start, end });
    }
    annotations.sort_by_key(|a| a.start);
    Ok(annotations)
}

pub fn parse_dataset(
    sensors: impl BufRead,
    activities: impl BufRead,
    map: &SensorMap,
) -> Result<(Vec<SensorEvent>, Vec<ActivityAnnotation>), IngestError> {
    Ok((parse_sensors(sensors, map)?, parse_activities(activities)?))
}

pub fn write_sensors(mut out: impl Write, events: &[SensorEvent]) -> std::io::Result<()> {
    out.write_all(SENSOR_HEADER.as_bytes())?;
    for e in events {
        writeln!(
            out,
            "{}\t\t{}\t\t{}\t{}\t{}",
            e.start.format(TIMESTAMP_FORMAT),
            e.end.format(TIMESTAMP_FORMAT),
            e.location,
            e.kind,
            e.place
        )?;
    }
    Ok(())
}

pub fn write_activities(mut out: impl Write, annotations: &[ActivityAnnotation]) -> std::io::Result<()> {
    out.write_all(ACTIVITY_HEADER.as_bytes())?;
    for a in annotations {
        writeln!(
            out,
            "{}\t\t{}\t\t{}",
            a.start.format(TIMESTAMP_FORMAT),
            a.end.format(TIMESTAMP_FORMAT),
            a.label.dataset_name()
        )?;
    }
    Ok(())
}

/// Line-delimited JSON export, one `TimeSlice` per line.
pub fn write_jsonl<'a>(
    mut out: impl Write,
    slices: impl IntoIterator<Item = &'a TimeSlice>,
) -> std::io::Result<()> {
    for slice in slices {
        serde_json::to_writer(&mut out, slice)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl(reader: impl BufRead) -> Result<Vec<TimeSlice>, IngestError> {
    let mut slices = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let slice = serde_json::from_str(&line).map_err(|source| IngestError::Json {
            line: i + 1,
            source,
        })?;
        slices.push(slice);
    }
    Ok(slices)
}
