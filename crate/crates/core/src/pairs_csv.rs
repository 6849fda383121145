//! The eight-column pair CSV: `folder_name_1,file_name_1,start_line_1,end_line_1,
//! folder_name_2,file_name_2,start_line_2,end_line_2`, header optional.

use std::io::{Read, Write};

use thiserror::Error;

use crate::key::{Endpoint, PairKey};

pub const PAIR_HEADER: [&str; 8] = [
    "folder_name_1",
    "file_name_1",
    "start_line_1",
    "end_line_1",
    "folder_name_2",
    "file_name_2",
    "start_line_2",
    "end_line_2",
];

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One reported pair, spans as written by the detector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportedPair {
    pub line: u64,
    pub left: Endpoint,
    pub right: Endpoint,
}

pub(crate) fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(None)
        .from_reader(r)
}

pub(crate) fn record_line(rec: &csv::StringRecord, fallback: u64) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(fallback)
}

pub(crate) fn csv_error(e: csv::Error, fallback: u64) -> CsvError {
    let line = e.position().map(|p| p.line()).unwrap_or(fallback);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CsvError::Io(io),
        other => CsvError::Malformed {
            line,
            message: format!("{other:?}"),
        },
    }
}

/// A first row whose line-number columns are not numbers is a header.
pub(crate) fn looks_like_header(rec: &csv::StringRecord) -> bool {
    [2, 3, 6, 7]
        .iter()
        .any(|&i| rec.get(i).is_some_and(|f| f.parse::<usize>().is_err()))
}

pub(crate) fn parse_endpoints(
    rec: &csv::StringRecord,
    line: u64,
) -> Result<(Endpoint, Endpoint), CsvError> {
    let bad = |message: String| CsvError::Malformed { line, message };
    let num = |i: usize| -> Result<usize, CsvError> {
        let f = rec.get(i).unwrap_or("");
        f.parse::<usize>().map_err(|_| {
            bad(format!(
                "column {} (`{}`): expected a line number, got `{f}`",
                i + 1,
                PAIR_HEADER[i]
            ))
        })
    };
    let text = |i: usize| -> Result<String, CsvError> {
        let f = rec.get(i).unwrap_or("");
        if f.is_empty() {
            Err(bad(format!(
                "column {} (`{}`) is empty",
                i + 1,
                PAIR_HEADER[i]
            )))
        } else {
            Ok(f.to_string())
        }
    };
    let left = Endpoint::new(text(0)?, text(1)?, num(2)?, num(3)?);
    let right = Endpoint::new(text(4)?, text(5)?, num(6)?, num(7)?);
    for ep in [&left, &right] {
        if ep.start_line == 0 || ep.end_line < ep.start_line {
            return Err(bad(format!(
                "invalid line span {}-{}",
                ep.start_line, ep.end_line
            )));
        }
    }
    Ok((left, right))
}

/// Reads a detector upload. Any row without exactly eight columns, or with a
/// non-numeric line field, fails with its 1-based line number.
pub fn read_pairs<R: Read>(r: R) -> Result<Vec<ReportedPair>, CsvError> {
    let mut rdr = reader(r);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(e, i as u64 + 1))?;
        let line = record_line(&rec, i as u64 + 1);
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != 8 {
            return Err(CsvError::Malformed {
                line,
                message: format!("expected 8 columns, found {}", rec.len()),
            });
        }
        if i == 0 && looks_like_header(&rec) {
            continue;
        }
        let (left, right) = parse_endpoints(&rec, line)?;
        out.push(ReportedPair { line, left, right });
    }
    Ok(out)
}

/// One human verdict from an offline labels file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRow {
    pub line: u64,
    pub left: Endpoint,
    pub right: Endpoint,
    pub is_clone: bool,
    pub judge: Option<String>,
}

fn parse_bool(f: &str) -> Option<bool> {
    match f.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "tp" | "clone" => Some(true),
        "false" | "0" | "no" | "fp" | "non_clone" => Some(false),
        _ => None,
    }
}

/// Reads a labels file: the eight pair columns, `is_clone`, and an optional
/// `judge` column. Several rows for one pair are separate votes.
pub fn read_labels<R: Read>(r: R) -> Result<Vec<LabelRow>, CsvError> {
    let mut rdr = reader(r);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(e, i as u64 + 1))?;
        let line = record_line(&rec, i as u64 + 1);
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if !(9..=10).contains(&rec.len()) {
            return Err(CsvError::Malformed {
                line,
                message: format!("expected 9 or 10 columns, found {}", rec.len()),
            });
        }
        if i == 0 && looks_like_header(&rec) {
            continue;
        }
        let (left, right) = parse_endpoints(&rec, line)?;
        let is_clone = parse_bool(&rec[8]).ok_or_else(|| CsvError::Malformed {
            line,
            message: format!(
                "column 9 (`is_clone`): expected true or false, got `{}`",
                &rec[8]
            ),
        })?;
        let judge = rec.get(9).filter(|j| !j.is_empty()).map(str::to_string);
        out.push(LabelRow {
            line,
            left,
            right,
            is_clone,
            judge,
        });
    }
    Ok(out)
}

pub fn write_pairs<W: Write>(w: W, keys: &[PairKey], header: bool) -> Result<(), CsvError> {
    let mut wtr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| CsvError::Io(std::io::Error::other(e));
    if header {
        wtr.write_record(PAIR_HEADER).map_err(io)?;
    }
    for k in keys {
        wtr.write_record(k.to_fields()).map_err(io)?;
    }
    wtr.flush()?;
    Ok(())
}
