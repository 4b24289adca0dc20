//! Corpus and dataset loading, versioned snapshots, and run configuration.
//!
//! Snapshots are line-delimited JSON. The first line is a header
//! `{"kind": "header", "format": ..., "version": 1, ...counts}` and every
//! following line is one record with a leading `kind`. Files are written to a
//! temporary sibling and renamed into place, so an interrupted save never
//! leaves a partial snapshot behind.

mod config;
mod corpus;
mod datasets;
mod snapshot;

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

pub use config::{EncoderConfig, RunConfig};
pub use corpus::{load_corpus, strip_markdown, CorpusManifest, DocFormat};
pub use datasets::{load_mcq, load_summarization};
pub use snapshot::{load_chunks, load_embeddings, load_index, load_kg, save_chunks, save_embeddings, save_index, save_kg, ChunkStore};

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistenceError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: snapshot version {found}, this build reads version {expected}")]
    VersionMismatch { path: PathBuf, found: u64, expected: u32 },
    #[error("{path}: expected a {expected:?} snapshot, found {found:?}")]
    WrongFormat { path: PathBuf, expected: String, found: String },
    #[error("{path} line {line}: corrupt snapshot: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error("{path} line {line}: {message}")]
    Dataset { path: PathBuf, line: usize, message: String },
    #[error("invalid corpus manifest: {0}")]
    Manifest(String),
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PersistenceError + '_ {
    move |source| PersistenceError::Io { path: path.to_path_buf(), source }
}

/// Write `contents` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), PersistenceError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_err(&dir))?;
    tmp.write_all(contents).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| PersistenceError::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

/// Serialize `value` as pretty JSON and write it atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PersistenceError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| PersistenceError::Invalid {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, PersistenceError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| PersistenceError::Corrupt {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}
