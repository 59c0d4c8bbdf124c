//! Shared reader for the headed, comma-separated EuRoC tables.

use std::fs::File;
use std::path::Path;

use crate::error::{io_error, IngestError, Result};

/// One data row: source line, raw nanosecond timestamp and the remaining columns.
pub(crate) struct Row {
    pub line: u64,
    pub stamp_ns: u64,
    pub values: Vec<f64>,
}

/// Lowercased column name without a leading `#` or trailing `[unit]`.
fn normalize(name: &str) -> String {
    let name = name.trim().trim_start_matches('#').trim();
    let name = name.split('[').next().unwrap_or(name).trim();
    name.to_ascii_lowercase()
}

/// Reads a table whose header must match `columns` column by column; each
/// entry lists the accepted spellings of that column.
pub(crate) fn read(path: &Path, columns: &[&[&str]]) -> Result<Vec<Row>> {
    let file = File::open(path).map_err(io_error(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let parse_error = |line: u64, msg: String| IngestError::Parse { path: path.to_path_buf(), line, msg };
    let expected = || columns.iter().map(|c| c[0]).collect::<Vec<_>>().join(",");

    let mut records = reader.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(|e| parse_error(1, e.to_string()))?,
        None => {
            return Err(IngestError::Header { path: path.to_path_buf(), found: String::new(), expected: expected() });
        }
    };
    let matches = header.len() == columns.len()
        && header.iter().zip(columns).all(|(h, names)| names.contains(&normalize(h).as_str()));
    if !matches {
        return Err(IngestError::Header {
            path: path.to_path_buf(),
            found: header.iter().collect::<Vec<_>>().join(","),
            expected: expected(),
        });
    }

    let mut rows = Vec::new();
    let mut previous: Option<u64> = None;
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != columns.len() {
            return Err(parse_error(line, format!("expected {} fields, found {}", columns.len(), rec.len())));
        }
        let stamp_ns: u64 = rec[0]
            .parse()
            .map_err(|_| parse_error(line, format!("bad timestamp {:?}", &rec[0])))?;
        let values = rec
            .iter()
            .skip(1)
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_error(line, format!("bad number {f:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if previous.is_some_and(|p| stamp_ns <= p) {
            return Err(IngestError::NonMonotonic { path: path.to_path_buf(), line });
        }
        previous = Some(stamp_ns);
        rows.push(Row { line, stamp_ns, values });
    }
    Ok(rows)
}

/// Seconds elapsed from `origin_ns` to `stamp_ns` (negative before the origin).
pub fn seconds_since(stamp_ns: u64, origin_ns: u64) -> f64 {
    (stamp_ns as i128 - origin_ns as i128) as f64 * 1e-9
}

/// Inverse of [`seconds_since`], rounded to the nearest nanosecond.
pub fn stamp_ns(t: f64, origin_ns: u64) -> u64 {
    (origin_ns as i128 + (t * 1e9).round() as i128).max(0) as u64
}
