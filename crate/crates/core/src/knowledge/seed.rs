//! Seed label files: the pair columns, then `label,clone_type,similarity`.

use std::collections::HashMap;
use std::io::Read;

use serde::Serialize;

use crate::key::PairKey;
use crate::outcome::LabelType;
use crate::pairs_csv::{
    csv_error, looks_like_header, parse_endpoints, reader, record_line, CsvError,
};

pub const SEED_HEADER: [&str; 11] = [
    "folder_1",
    "file_1",
    "start_1",
    "end_1",
    "folder_2",
    "file_2",
    "start_2",
    "end_2",
    "label",
    "clone_type",
    "similarity",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedRow {
    pub key: PairKey,
    pub is_clone: bool,
    pub clone_type: Option<LabelType>,
    pub similarity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ImportSummary {
    pub imported: usize,
    /// Skipped rows as (line, reason).
    pub skipped: Vec<(u64, String)>,
}

fn parse_row(rec: &csv::StringRecord, line: u64) -> Result<SeedRow, String> {
    if !(10..=11).contains(&rec.len()) {
        return Err(format!("expected 10 or 11 columns, found {}", rec.len()));
    }
    let (a, b) = parse_endpoints(rec, line).map_err(|e| match e {
        CsvError::Malformed { message, .. } => message,
        other => other.to_string(),
    })?;
    let is_clone = match rec.get(8).unwrap_or("").to_ascii_lowercase().as_str() {
        "true" => true,
        "false" => false,
        other => return Err(format!("label must be true or false, got `{other}`")),
    };
    let clone_type = match rec.get(9).unwrap_or("") {
        "" => None,
        t => Some(t.parse::<LabelType>()?),
    };
    let similarity = match rec.get(10).unwrap_or("") {
        "" => None,
        s => {
            let v: f64 = s
                .parse()
                .map_err(|_| format!("similarity `{s}` is not a number"))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("similarity {v} outside [0, 1]"));
            }
            Some(v)
        }
    };
    if clone_type == Some(LabelType::T3) && similarity.is_none() {
        return Err("Type III rows must carry a similarity".into());
    }
    Ok(SeedRow {
        key: PairKey::new(a, b),
        is_clone,
        clone_type,
        similarity,
    })
}

/// Parses a seed file. Bad rows are skipped and reported; duplicate keys keep
/// the row with the higher similarity.
pub fn read_seed<R: Read>(r: R) -> Result<(Vec<SeedRow>, ImportSummary), CsvError> {
    let mut rdr = reader(r);
    let mut rows: Vec<SeedRow> = Vec::new();
    let mut index: HashMap<PairKey, usize> = HashMap::new();
    let mut summary = ImportSummary::default();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(e, i as u64 + 1))?;
        let line = record_line(&rec, i as u64 + 1);
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if i == 0 && looks_like_header(&rec) {
            continue;
        }
        match parse_row(&rec, line) {
            Ok(row) => match index.get(&row.key) {
                Some(&at) => {
                    if prefer(&row, &rows[at]) {
                        rows[at] = row;
                    }
                }
                None => {
                    index.insert(row.key.clone(), rows.len());
                    rows.push(row);
                }
            },
            Err(msg) => summary.skipped.push((line, msg)),
        }
    }
    summary.imported = rows.len();
    Ok((rows, summary))
}

/// Whether `new` should replace `old` for the same key.
pub(crate) fn prefer(new: &SeedRow, old: &SeedRow) -> bool {
    new.similarity.unwrap_or(-1.0) > old.similarity.unwrap_or(-1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file() {
        let (rows, s) = read_seed("".as_bytes()).unwrap();
        assert!(rows.is_empty());
        assert_eq!(s.imported, 0);
    }

    #[test]
    fn rows_and_errors() {
        let body = format!(
            "{}\n\
             d,A.java,1,9,d,B.java,1,9,true,T2,\n\
             d,A.java,1,9,d,C.java,1,9,true,T3,0.95\n\
             d,A.java,1,9,d,D.java,1,9,true,T3,\n\
             d,A.java,1,9,d,E.java,1,9,maybe,,\n\
             d,B.java,1,9,d,A.java,1,9,true,T2,0.99\n\
             d,A.java,1,9,d,F.java,1,9,false,,\n",
            SEED_HEADER.join(",")
        );
        let (rows, s) = read_seed(body.as_bytes()).unwrap();
        assert_eq!(s.imported, 3);
        assert_eq!(
            s.skipped.iter().map(|(l, _)| *l).collect::<Vec<_>>(),
            vec![4, 5]
        );
        // The duplicate (reversed endpoints) with a similarity wins.
        assert_eq!(rows[0].similarity, Some(0.99));
        assert_eq!(rows[1].clone_type, Some(LabelType::T3));
        assert!(!rows[2].is_clone);
    }
}
