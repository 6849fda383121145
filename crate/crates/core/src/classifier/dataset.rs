//! Training sets and their CSV form: 48 feature columns, `label`, `provenance`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{feature_names, ClassifierError, FeatureVector, FEATURE_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowProvenance {
    IntersectionPositive,
    MinedNegative,
    Manual,
}

impl RowProvenance {
    fn as_str(self) -> &'static str {
        match self {
            RowProvenance::IntersectionPositive => "intersection_positive",
            RowProvenance::MinedNegative => "mined_negative",
            RowProvenance::Manual => "manual",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "intersection_positive" => Some(RowProvenance::IntersectionPositive),
            "mined_negative" => Some(RowProvenance::MinedNegative),
            "manual" => Some(RowProvenance::Manual),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRow {
    pub features: FeatureVector,
    pub is_clone: bool,
    pub provenance: RowProvenance,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingSet {
    pub rows: Vec<TrainingRow>,
}

impl TrainingSet {
    pub fn positives(&self) -> usize {
        self.rows.iter().filter(|r| r.is_clone).count()
    }

    pub fn negatives(&self) -> usize {
        self.rows.len() - self.positives()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), ClassifierError> {
        let mut wtr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| ClassifierError::Io(std::io::Error::other(e));
        let mut header = feature_names();
        header.push("label".into());
        header.push("provenance".into());
        wtr.write_record(&header).map_err(io)?;
        for r in &self.rows {
            let mut rec: Vec<String> = r.features.values().iter().map(|v| v.to_string()).collect();
            rec.push(if r.is_clone { "clone" } else { "non_clone" }.into());
            rec.push(r.provenance.as_str().into());
            wtr.write_record(&rec).map_err(io)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        buf
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, ClassifierError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| ClassifierError::Malformed {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let bad = |message: String| ClassifierError::Malformed { line, message };
            if rec.len() != FEATURE_COUNT + 2 {
                return Err(bad(format!(
                    "expected {} columns, found {}",
                    FEATURE_COUNT + 2,
                    rec.len()
                )));
            }
            let values = rec
                .iter()
                .take(FEATURE_COUNT)
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| bad(format!("`{f}` is not a number")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let is_clone = match &rec[FEATURE_COUNT] {
                "clone" => true,
                "non_clone" => false,
                other => return Err(bad(format!("label `{other}`"))),
            };
            let provenance = RowProvenance::parse(&rec[FEATURE_COUNT + 1])
                .ok_or_else(|| bad(format!("provenance `{}`", &rec[FEATURE_COUNT + 1])))?;
            rows.push(TrainingRow {
                features: FeatureVector::from_values(values).expect("length checked"),
                is_clone,
                provenance,
            });
        }
        Ok(Self { rows })
    }

    /// SHA-256 of the CSV form.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_csv_bytes()))
    }
}
