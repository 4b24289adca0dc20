use std::collections::BTreeMap;
use std::path::PathBuf;

use globset::{Glob, GlobSetBuilder};
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::{io_err, PersistenceError};
use crate::extraction::Document;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocFormat {
    #[default]
    PlainText,
    Markdown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub root: PathBuf,
    /// Globs matched against `/`-separated paths relative to `root`.
    pub include: Vec<String>,
    #[serde(default)]
    pub format: DocFormat,
    /// Relative path → tags.
    #[serde(default)]
    pub tags: BTreeMap<String, Vec<String>>,
}

impl CorpusManifest {
    pub fn new(root: impl Into<PathBuf>, include: &[&str], format: DocFormat) -> Self {
        Self { root: root.into(), include: include.iter().map(|s| s.to_string()).collect(), format, tags: BTreeMap::new() }
    }
}

fn is_fence(line: &str) -> bool {
    let t = line.trim_start();
    t.starts_with("```") || t.starts_with("~~~")
}

/// `#{1,6}` followed by a space (or nothing) opens an ATX heading.
fn heading_text(line: &str) -> Option<&str> {
    let t = line.trim_start();
    let hashes = t.chars().take_while(|&c| c == '#').count();
    if hashes == 0 || hashes > 6 {
        return None;
    }
    let rest = &t[hashes..];
    if !(rest.is_empty() || rest.starts_with(' ') || rest.starts_with('\t')) {
        return None;
    }
    Some(rest.trim().trim_end_matches('#').trim_end())
}

/// Reduce Markdown to plain text.
///
/// Heading markers are removed and the heading text kept as its own line;
/// blank lines directly after a heading are dropped. Fenced code blocks,
/// fence lines included, are kept verbatim. All other lines pass through.
pub fn strip_markdown(src: &str) -> String {
    let mut out: Vec<&str> = Vec::new();
    let mut in_fence = false;
    let mut after_heading = false;
    for line in src.lines() {
        if in_fence {
            out.push(line);
            in_fence = !is_fence(line);
            continue;
        }
        if is_fence(line) {
            out.push(line);
            in_fence = true;
            after_heading = false;
            continue;
        }
        if after_heading && line.trim().is_empty() {
            continue;
        }
        match heading_text(line) {
            Some(text) => {
                out.push(text);
                after_heading = true;
            }
            None => {
                out.push(line);
                after_heading = false;
            }
        }
    }
    let mut text = out.join("\n");
    if src.ends_with('\n') && !text.is_empty() {
        text.push('\n');
    }
    text
}

/// One document per matched file, ordered by relative path.
///
/// Files that are empty after stripping are skipped with a warning.
pub fn load_corpus(manifest: &CorpusManifest) -> Result<Vec<Document>, PersistenceError> {
    if manifest.include.is_empty() {
        return Err(PersistenceError::Manifest("at least one include glob is required".into()));
    }
    let mut builder = GlobSetBuilder::new();
    for g in &manifest.include {
        builder.add(Glob::new(g).map_err(|e| PersistenceError::Manifest(format!("glob {g:?}: {e}")))?);
    }
    let globs = builder.build().map_err(|e| PersistenceError::Manifest(e.to_string()))?;
    if !manifest.root.is_dir() {
        return Err(PersistenceError::Manifest(format!("root {} is not a directory", manifest.root.display())));
    }

    let mut matched: Vec<(String, PathBuf)> = Vec::new();
    for entry in WalkDir::new(&manifest.root).follow_links(true) {
        let entry = entry.map_err(|e| {
            let path = e.path().map(PathBuf::from).unwrap_or_else(|| manifest.root.clone());
            PersistenceError::Io { path, source: e.into() }
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(&manifest.root).expect("walk stays under root");
        let rel: String = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        if globs.is_match(&rel) {
            matched.push((rel, entry.into_path()));
        }
    }
    matched.sort();
    if matched.is_empty() {
        log::warn!("corpus manifest matched no files under {}", manifest.root.display());
    }

    let mut docs = Vec::with_capacity(matched.len());
    for (rel, path) in matched {
        let raw = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        let text = match manifest.format {
            DocFormat::PlainText => raw,
            DocFormat::Markdown => strip_markdown(&raw),
        };
        let tags = manifest.tags.get(&rel).cloned().unwrap_or_default();
        match Document::new(rel.clone(), text, path.display().to_string(), tags) {
            Ok(d) => docs.push(d),
            Err(_) => log::warn!("skipping empty document {rel}"),
        }
    }
    Ok(docs)
}
