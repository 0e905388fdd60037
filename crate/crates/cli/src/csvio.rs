//! Hourly CSV files: `timestamp,<channel...>,sdv`.
//!
//! Canonical form, which [`write_frame`] produces and [`read_frame`] accepts
//! back byte for byte: `YYYY-MM-DDTHH:MM:SSZ` timestamps and floats in Rust's
//! shortest round-trip `Display` form.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Utc};
use stemcast_core::datasets::TimeSeriesFrame;

use crate::error::{CliError, Result};

pub const TIMESTAMP_COLUMN: &str = "timestamp";
pub const TARGET_COLUMN: &str = "sdv";

const SECONDS_PER_HOUR: i64 = 3600;

/// `2023-05-01T00:00:00Z` for an hour index since the Unix epoch.
pub fn format_hour(hour: i64) -> String {
    match DateTime::<Utc>::from_timestamp(hour * SECONDS_PER_HOUR, 0) {
        Some(t) => t.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        None => format!("hour {hour}"),
    }
}

/// Parses an ISO-8601 timestamp on a whole hour. Without an offset the time
/// is taken as UTC.
pub fn parse_hour(text: &str) -> std::result::Result<i64, String> {
    let text = text.trim();
    let seconds = if let Ok(t) = DateTime::parse_from_rfc3339(text) {
        t.timestamp()
    } else {
        [
            "%Y-%m-%dT%H:%M:%S",
            "%Y-%m-%d %H:%M:%S",
            "%Y-%m-%dT%H:%M",
            "%Y-%m-%d %H:%M",
        ]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(text, f).ok())
        .map(|t| t.and_utc().timestamp())
        .ok_or_else(|| format!("unparseable timestamp {text:?}"))?
    };
    if seconds.rem_euclid(SECONDS_PER_HOUR) != 0 {
        return Err(format!("timestamp {text:?} is not on a whole hour"));
    }
    Ok(seconds.div_euclid(SECONDS_PER_HOUR))
}

pub fn load_csv(path: &Path) -> Result<TimeSeriesFrame> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_frame(file).map_err(|e| match e {
        CliError::Data(msg) => CliError::data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Reads a frame whose target column is `sdv`; every other non-timestamp
/// column becomes a covariate channel, in file order.
pub fn read_frame(reader: impl Read) -> Result<TimeSeriesFrame> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = csv
        .headers()
        .map_err(|e| CliError::data(format!("unreadable header: {e}")))?
        .clone();
    if header.is_empty() || header.iter().all(str::is_empty) {
        return Err(CliError::data("missing header row"));
    }
    if header.get(0) != Some(TIMESTAMP_COLUMN) {
        return Err(CliError::data(format!("first column must be `{TIMESTAMP_COLUMN}`")));
    }
    let target_col = header
        .iter()
        .position(|h| h == TARGET_COLUMN)
        .ok_or_else(|| CliError::data(format!("missing target column `{TARGET_COLUMN}`")))?;
    let channel_cols: Vec<usize> = (1..header.len()).filter(|&c| c != target_col).collect();
    let mut timestamps = Vec::new();
    let mut channels = vec![Vec::new(); channel_cols.len()];
    let mut target = Vec::new();
    for (row, record) in csv.records().enumerate() {
        let record = record.map_err(|e| CliError::data(format!("row {row}: {e}")))?;
        let hour = parse_hour(&record[0]).map_err(|e| CliError::data(format!("row {row}: {e}")))?;
        if let Some(&prev) = timestamps.last() {
            if hour <= prev {
                return Err(CliError::data(format!(
                    "row {row}: timestamp {} does not increase on the previous row",
                    &record[0]
                )));
            }
        }
        timestamps.push(hour);
        let field = |col: usize| -> Result<f64> {
            let text = record[col].trim();
            text.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::data(format!("row {row}: bad number {text:?} in column `{}`", &header[col])))
        };
        for (values, &col) in channels.iter_mut().zip(&channel_cols) {
            values.push(field(col)?);
        }
        target.push(field(target_col)?);
    }
    if timestamps.is_empty() {
        return Err(CliError::data("no data rows"));
    }
    let names = channel_cols.iter().map(|&c| header[c].to_string()).collect();
    Ok(TimeSeriesFrame::new(
        timestamps,
        names,
        channels,
        TARGET_COLUMN.to_string(),
        target,
    )?)
}

pub fn write_csv(frame: &TimeSeriesFrame, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_frame(frame, &mut out)
        .and_then(|()| out.flush())
        .map_err(|e| CliError::io(path, e))
}

/// Canonical CSV of `frame`, target column last.
pub fn write_frame(frame: &TimeSeriesFrame, out: &mut impl Write) -> io::Result<()> {
    write!(out, "{TIMESTAMP_COLUMN}")?;
    for name in frame.channel_names() {
        write!(out, ",{name}")?;
    }
    writeln!(out, ",{}", frame.target_name())?;
    for (i, &hour) in frame.timestamps().iter().enumerate() {
        write!(out, "{}", format_hour(hour))?;
        for column in frame.channels() {
            write!(out, ",{}", column[i])?;
        }
        writeln!(out, ",{}", frame.target()[i])?;
    }
    Ok(())
}
