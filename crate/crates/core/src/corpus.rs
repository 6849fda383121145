//! Source corpus on disk (`<root>/<folder>/<file>.java`), extracted methods,
//! and resolution of reported line spans to methods.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::java::{find_methods, ExtractError};
use crate::key::Endpoint;

/// Minimum line-overlap ratio (shared / union) for a reported span to match a method.
pub const SPAN_MATCH_RATIO: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub corpus_root: PathBuf,
    pub folder_name: String,
    pub file_name: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodRecord {
    pub folder: String,
    pub file: String,
    pub name: String,
    pub start_line: usize,
    pub end_line: usize,
    /// Declaration text from its first token through the closing brace.
    pub source: String,
    pub language_token_count: usize,
}

impl MethodRecord {
    pub fn endpoint(&self) -> Endpoint {
        Endpoint::new(&self.folder, &self.file, self.start_line, self.end_line)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("file not found in corpus: {folder}/{file}")]
    FileNotFound { folder: String, file: String },
    #[error("no method in {folder}/{file} matches lines {start_line}-{end_line}")]
    NoMatchingMethod {
        folder: String,
        file: String,
        start_line: usize,
        end_line: usize,
    },
    #[error("{path}: {source}")]
    Extract {
        path: String,
        #[source]
        source: ExtractError,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus index: {0}")]
    Format(#[from] serde_json::Error),
}

/// Extracts every method and constructor with a body from `file`.
pub fn extract_methods(file: &SourceFile) -> Result<Vec<MethodRecord>, CorpusError> {
    let spans = find_methods(&file.content).map_err(|source| CorpusError::Extract {
        path: format!("{}/{}", file.folder_name, file.file_name),
        source,
    })?;
    Ok(spans
        .into_iter()
        .map(|s| MethodRecord {
            folder: file.folder_name.clone(),
            file: file.file_name.clone(),
            name: s.name,
            start_line: s.start_line,
            end_line: s.end_line,
            source: file.content[s.start_offset..s.end_offset].to_string(),
            language_token_count: s.language_token_count,
        })
        .collect())
}

/// Line-overlap ratio of two inclusive spans: shared lines over union lines.
pub fn span_overlap(a: (usize, usize), b: (usize, usize)) -> f64 {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    if hi < lo {
        return 0.0;
    }
    let shared = hi - lo + 1;
    let union = a.1.max(b.1) - a.0.min(b.0) + 1;
    shared as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

/// Extracted methods of every file in a corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusIndex {
    pub root: PathBuf,
    files: BTreeMap<(String, String), Vec<MethodRecord>>,
    pub diagnostics: Vec<Diagnostic>,
}

impl CorpusIndex {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            ..Self::default()
        }
    }

    /// Adds a file; extraction failures become diagnostics and the file is
    /// registered with no methods.
    pub fn add_file(&mut self, file: &SourceFile) {
        let key = (file.folder_name.clone(), file.file_name.clone());
        match extract_methods(file) {
            Ok(methods) => {
                self.files.insert(key, methods);
            }
            Err(e) => {
                self.diagnostics.push(Diagnostic {
                    path: format!("{}/{}", file.folder_name, file.file_name),
                    message: e.to_string(),
                });
                self.files.insert(key, Vec::new());
            }
        }
    }

    /// Walks `<root>/<folder>/<file>.java`. Files are extracted in parallel.
    pub fn ingest(root: &Path) -> Result<Self, CorpusError> {
        let io_err = |path: &Path, source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        };
        let meta = fs::metadata(root).map_err(|e| io_err(root, e))?;
        if !meta.is_dir() {
            return Err(io_err(
                root,
                std::io::Error::new(
                    std::io::ErrorKind::NotADirectory,
                    "corpus root is not a directory",
                ),
            ));
        }
        let mut paths = Vec::new();
        collect_java_files(root, &mut paths).map_err(|e| io_err(root, e))?;
        paths.sort();

        let loaded: Vec<Result<SourceFile, Diagnostic>> = paths
            .par_iter()
            .map(|p| {
                let rel = p.strip_prefix(root).unwrap_or(p);
                let file_name = rel
                    .file_name()
                    .map(|f| f.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let folder_name = rel
                    .parent()
                    .map(|d| d.to_string_lossy().replace('\\', "/"))
                    .unwrap_or_default();
                let bytes = fs::read(p).map_err(|e| Diagnostic {
                    path: rel.display().to_string(),
                    message: e.to_string(),
                })?;
                let content = String::from_utf8(bytes).map_err(|e| Diagnostic {
                    path: rel.display().to_string(),
                    message: format!("invalid UTF-8: {e}"),
                })?;
                Ok(SourceFile {
                    corpus_root: root.to_path_buf(),
                    folder_name,
                    file_name,
                    content,
                })
            })
            .collect();

        let mut index = Self::new(root);
        let extracted: Vec<_> = loaded
            .into_par_iter()
            .map(|r| {
                r.map(|f| {
                    let methods = extract_methods(&f);
                    (f, methods)
                })
            })
            .collect();
        for r in extracted {
            match r {
                Ok((f, Ok(methods))) => {
                    index.files.insert((f.folder_name, f.file_name), methods);
                }
                Ok((f, Err(e))) => {
                    index.diagnostics.push(Diagnostic {
                        path: format!("{}/{}", f.folder_name, f.file_name),
                        message: e.to_string(),
                    });
                    index.files.insert((f.folder_name, f.file_name), Vec::new());
                }
                Err(d) => index.diagnostics.push(d),
            }
        }
        Ok(index)
    }

    pub fn file_count(&self) -> usize {
        self.files.len()
    }

    pub fn methods(&self) -> impl Iterator<Item = &MethodRecord> {
        self.files.values().flatten()
    }

    pub fn methods_in(&self, folder: &str, file: &str) -> Option<&[MethodRecord]> {
        self.files
            .get(&(folder.to_string(), file.to_string()))
            .map(Vec::as_slice)
    }

    /// Resolves a reported span to the best-overlapping extracted method:
    /// ratio at least [`SPAN_MATCH_RATIO`], ties to the larger overlap and
    /// then the earlier start line.
    pub fn locate_method(
        &self,
        folder: &str,
        file: &str,
        start_line: usize,
        end_line: usize,
    ) -> Result<&MethodRecord, CorpusError> {
        let methods = self
            .methods_in(folder, file)
            .ok_or_else(|| CorpusError::FileNotFound {
                folder: folder.to_string(),
                file: file.to_string(),
            })?;
        let (lo, hi) = (start_line.min(end_line), start_line.max(end_line));
        methods
            .iter()
            .map(|m| (span_overlap((lo, hi), (m.start_line, m.end_line)), m))
            .filter(|(r, _)| *r >= SPAN_MATCH_RATIO)
            .max_by(|(ra, a), (rb, b)| {
                ra.partial_cmp(rb)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(b.start_line.cmp(&a.start_line))
            })
            .map(|(_, m)| m)
            .ok_or_else(|| CorpusError::NoMatchingMethod {
                folder: folder.to_string(),
                file: file.to_string(),
                start_line,
                end_line,
            })
    }

    pub fn locate(&self, ep: &Endpoint) -> Result<&MethodRecord, CorpusError> {
        self.locate_method(&ep.folder, &ep.file, ep.start_line, ep.end_line)
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let json = serde_json::to_vec(&SavedIndex::from(self))?;
        fs::write(path, json).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let bytes = fs::read(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let saved: SavedIndex = serde_json::from_slice(&bytes)?;
        Ok(saved.into())
    }
}

/// On-disk index form; JSON object keys must be strings, so files are a list.
#[derive(Serialize, Deserialize)]
struct SavedIndex {
    root: PathBuf,
    files: Vec<SavedFile>,
    diagnostics: Vec<Diagnostic>,
}

#[derive(Serialize, Deserialize)]
struct SavedFile {
    folder: String,
    file: String,
    methods: Vec<MethodRecord>,
}

impl From<&CorpusIndex> for SavedIndex {
    fn from(ix: &CorpusIndex) -> Self {
        Self {
            root: ix.root.clone(),
            files: ix
                .files
                .iter()
                .map(|((folder, file), methods)| SavedFile {
                    folder: folder.clone(),
                    file: file.clone(),
                    methods: methods.clone(),
                })
                .collect(),
            diagnostics: ix.diagnostics.clone(),
        }
    }
}

impl From<SavedIndex> for CorpusIndex {
    fn from(s: SavedIndex) -> Self {
        Self {
            root: s.root,
            files: s
                .files
                .into_iter()
                .map(|f| ((f.folder, f.file), f.methods))
                .collect(),
            diagnostics: s.diagnostics,
        }
    }
}

fn collect_java_files(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_java_files(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "java") {
            out.push(path);
        }
    }
    Ok(())
}
