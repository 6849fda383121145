//! Order-insensitive identifiers for method pairs.

use std::fmt;

use serde::{Deserialize, Serialize};

/// One side of a pair: a line span in a corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Endpoint {
    pub folder: String,
    pub file: String,
    pub start_line: usize,
    pub end_line: usize,
}

impl Endpoint {
    pub fn new(
        folder: impl Into<String>,
        file: impl Into<String>,
        start_line: usize,
        end_line: usize,
    ) -> Self {
        Self {
            folder: folder.into(),
            file: file.into(),
            start_line,
            end_line,
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}:{}-{}",
            self.folder, self.file, self.start_line, self.end_line
        )
    }
}

/// Canonical pair identity: `first <= second`, so `PairKey::new(a, b) == PairKey::new(b, a)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairKey {
    first: Endpoint,
    second: Endpoint,
}

impl PairKey {
    pub fn new(a: Endpoint, b: Endpoint) -> Self {
        if a <= b {
            Self {
                first: a,
                second: b,
            }
        } else {
            Self {
                first: b,
                second: a,
            }
        }
    }

    pub fn first(&self) -> &Endpoint {
        &self.first
    }

    pub fn second(&self) -> &Endpoint {
        &self.second
    }

    /// The eight CSV fields in column order.
    pub fn to_fields(&self) -> [String; 8] {
        [
            self.first.folder.clone(),
            self.first.file.clone(),
            self.first.start_line.to_string(),
            self.first.end_line.to_string(),
            self.second.folder.clone(),
            self.second.file.clone(),
            self.second.start_line.to_string(),
            self.second.end_line.to_string(),
        ]
    }
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <> {}", self.first, self.second)
    }
}
