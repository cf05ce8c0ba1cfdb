//! File formats: time-series CSV, anomaly-window labels, and result
//! persistence.
//!
//! Series files are `timestamp,value` CSV with naive local timestamps in
//! the fixed layout `YYYY-MM-DD HH:MM:SS`; lexicographic order on that
//! layout equals chronological order, so timestamps are kept and compared
//! as text. Label files are JSON: either an array of `[start, end]` pairs
//! or a map from dataset key to such arrays. Result files are CSV with
//! `#`-prefixed metadata comment lines that readers skip.

use crate::detect::DetectionRecord;
use crate::eval::SweepRow;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("invalid anomaly window: {0}")]
    InvalidWindow(String),
    #[error("dataset key {key:?} not found in label file; available keys: {available:?}")]
    MissingKey { key: String, available: Vec<String> },
    #[error("{0}")]
    Format(String),
}

/// One row of a series file.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub timestamp: String,
    pub value: f64,
}

/// A parsed series plus any non-fatal warnings (kept rows).
#[derive(Debug, Clone)]
pub struct Series {
    pub points: Vec<SeriesPoint>,
    pub warnings: Vec<String>,
}

/// A labeled anomaly span, `start <= end`, timestamps in series layout.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyWindow {
    pub start: String,
    pub end: String,
}

impl AnomalyWindow {
    /// Whether a timestamp falls inside the window, bounds included.
    pub fn contains(&self, timestamp: &str) -> bool {
        self.start.as_str() <= timestamp && timestamp <= self.end.as_str()
    }
}

fn io_err(path: &Path, source: std::io::Error) -> DataError {
    DataError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn timestamp_is_well_formed(ts: &str) -> bool {
    let b = ts.as_bytes();
    if b.len() != 19 {
        return false;
    }
    for (i, &c) in b.iter().enumerate() {
        let ok = match i {
            4 | 7 => c == b'-',
            10 => c == b' ',
            13 | 16 => c == b':',
            _ => c.is_ascii_digit(),
        };
        if !ok {
            return false;
        }
    }
    true
}

/// Drop a fractional-seconds suffix (label files sometimes carry one).
fn normalize_timestamp(ts: &str) -> &str {
    match ts.find('.') {
        Some(dot) => &ts[..dot],
        None => ts,
    }
}

/// Read a `timestamp,value` CSV.
///
/// The header is required; `#`-prefixed lines and blank lines are skipped;
/// CRLF is tolerated. Malformed rows are hard errors naming the line;
/// non-monotonic timestamps produce warnings but the rows are kept.
pub fn read_series(path: &Path) -> Result<Series, DataError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let path_str = path.display().to_string();
    let parse_err = |line: usize, message: String| DataError::Parse {
        path: path_str.clone(),
        line,
        message,
    };

    let mut points: Vec<SeriesPoint> = Vec::new();
    let mut warnings = Vec::new();
    let mut header_seen = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let raw = line.map_err(|e| io_err(path, e))?;
        let row = raw.trim_end_matches('\r');
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        if !header_seen {
            if row != "timestamp,value" {
                return Err(parse_err(
                    line_no,
                    format!("expected header 'timestamp,value', got {row:?}"),
                ));
            }
            header_seen = true;
            continue;
        }
        let (ts, val) = row
            .split_once(',')
            .ok_or_else(|| parse_err(line_no, "expected 'timestamp,value'".into()))?;
        if !timestamp_is_well_formed(ts) {
            return Err(parse_err(
                line_no,
                format!("malformed timestamp {ts:?}; expected YYYY-MM-DD HH:MM:SS"),
            ));
        }
        let value: f64 = val
            .trim()
            .parse()
            .map_err(|_| parse_err(line_no, format!("cannot parse value {val:?}")))?;
        if let Some(prev) = points.last() {
            if prev.timestamp.as_str() >= ts {
                warnings.push(format!(
                    "{path_str}:{line_no}: timestamp {ts} does not increase past {}",
                    prev.timestamp
                ));
            }
        }
        points.push(SeriesPoint {
            timestamp: ts.to_string(),
            value,
        });
    }
    if !header_seen {
        return Err(parse_err(1, "missing 'timestamp,value' header".into()));
    }
    Ok(Series { points, warnings })
}

/// Write a series back out in the input format.
pub fn write_series(path: &Path, points: &[SeriesPoint]) -> Result<(), DataError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "timestamp,value")?;
        for p in points {
            writeln!(w, "{},{}", p.timestamp, p.value)?;
        }
        w.flush()
    };
    emit().map_err(|e| io_err(path, e))
}

fn windows_from_json_pairs(
    pairs: &[serde_json::Value],
) -> Result<Vec<AnomalyWindow>, DataError> {
    let mut windows = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let arr = pair.as_array().filter(|a| a.len() == 2).ok_or_else(|| {
            DataError::Format("each window must be a [start, end] pair".into())
        })?;
        let field = |v: &serde_json::Value| -> Result<String, DataError> {
            let s = v
                .as_str()
                .ok_or_else(|| DataError::Format("window bounds must be strings".into()))?;
            Ok(normalize_timestamp(s).to_string())
        };
        let start = field(&arr[0])?;
        let end = field(&arr[1])?;
        if start > end {
            return Err(DataError::InvalidWindow(format!(
                "start {start} is after end {end}"
            )));
        }
        windows.push(AnomalyWindow { start, end });
    }
    windows.sort_by(|a, b| a.start.cmp(&b.start));
    for pair in windows.windows(2) {
        if pair[1].start <= pair[0].end {
            return Err(DataError::InvalidWindow(format!(
                "windows overlap: [{}, {}] and [{}, {}]",
                pair[0].start, pair[0].end, pair[1].start, pair[1].end
            )));
        }
    }
    Ok(windows)
}

/// Read anomaly windows from a label file.
///
/// Accepts a bare array of `[start, end]` pairs, or a map from dataset key
/// to arrays (a key is then required; an exact match wins, otherwise a
/// unique substring match is accepted).
pub fn read_windows(path: &Path, dataset_key: Option<&str>) -> Result<Vec<AnomalyWindow>, DataError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let value: serde_json::Value = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| DataError::Format(format!("{}: invalid JSON: {e}", path.display())))?;
    match value {
        serde_json::Value::Array(pairs) => windows_from_json_pairs(&pairs),
        serde_json::Value::Object(map) => {
            let key = dataset_key.ok_or_else(|| {
                DataError::Format(
                    "label file maps dataset keys to windows; a dataset key is required".into(),
                )
            })?;
            let resolved = if map.contains_key(key) {
                key.to_string()
            } else {
                let matches: Vec<&String> =
                    map.keys().filter(|k| k.contains(key)).collect();
                match matches.as_slice() {
                    [single] => (*single).clone(),
                    _ => {
                        return Err(DataError::MissingKey {
                            key: key.to_string(),
                            available: map.keys().cloned().collect(),
                        })
                    }
                }
            };
            let pairs = map[&resolved].as_array().ok_or_else(|| {
                DataError::Format(format!("value under key {resolved:?} is not an array"))
            })?;
            windows_from_json_pairs(pairs)
        }
        _ => Err(DataError::Format(
            "label file must be a JSON array or object".into(),
        )),
    }
}

/// Write detection records as CSV, preceded by `#` metadata comments.
pub fn write_detections(
    path: &Path,
    comments: &[String],
    records: &[DetectionRecord],
) -> Result<(), DataError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "index,timestamp,value,rate,detected")?;
        for r in records {
            writeln!(
                w,
                "{},{},{},{:.6},{}",
                r.index,
                r.timestamp,
                r.value,
                r.rate,
                if r.detected { 1 } else { 0 }
            )?;
        }
        w.flush()
    };
    emit().map_err(|e| io_err(path, e))
}

/// Read a detection CSV written by [`write_detections`].
pub fn read_detections(path: &Path) -> Result<Vec<DetectionRecord>, DataError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let path_str = path.display().to_string();
    let parse_err = |line: usize, message: String| DataError::Parse {
        path: path_str.clone(),
        line,
        message,
    };
    let mut records = Vec::new();
    let mut header_seen = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let raw = line.map_err(|e| io_err(path, e))?;
        let row = raw.trim_end_matches('\r');
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        if !header_seen {
            if row != "index,timestamp,value,rate,detected" {
                return Err(parse_err(line_no, format!("unexpected header {row:?}")));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 5 {
            return Err(parse_err(line_no, format!("expected 5 fields, got {}", fields.len())));
        }
        let index = fields[0]
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad index {:?}", fields[0])))?;
        let value = fields[2]
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad value {:?}", fields[2])))?;
        let rate = fields[3]
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad rate {:?}", fields[3])))?;
        let detected = match fields[4] {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(line_no, format!("bad detected flag {other:?}"))),
        };
        records.push(DetectionRecord {
            index,
            timestamp: fields[1].to_string(),
            value,
            rate,
            detected,
        });
    }
    if !header_seen {
        return Err(parse_err(1, "missing detection header".into()));
    }
    Ok(records)
}

/// Write sweep rows as CSV, preceded by `#` metadata comments.
pub fn write_sweep(path: &Path, comments: &[String], rows: &[SweepRow]) -> Result<(), DataError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "alpha,tp,fp,fn,score")?;
        for row in rows {
            writeln!(
                w,
                "{:.4},{},{},{},{}",
                row.alpha, row.card.true_pos, row.card.false_pos, row.card.false_neg, row.card.score
            )?;
        }
        w.flush()
    };
    emit().map_err(|e| io_err(path, e))
}
