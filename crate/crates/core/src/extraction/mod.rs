//! Documents to entities and relations.
//!
//! Documents are split into overlapping [`Chunk`]s, each chunk is handed to a
//! pluggable [`Extractor`], and the results are merged into a
//! [`KnowledgeGraph`] with [`merge_into_graph`]. Two extractors ship here: a
//! pure gazetteer/pattern [`RuleBasedExtractor`] for offline builds and tests,
//! and an [`LlmExtractor`] that prompts a chat model for a JSON object.

mod chunk;
mod llm;
mod rules;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generation::LlmError;
use crate::kg::{KgError, KnowledgeGraph};
use crate::text::normalize_name;

pub use chunk::{chunk_document, reconstruct, Chunk, ChunkConfig, ChunkRef, MIN_MAX_CHARS};
pub use llm::{parse_extraction_reply, LlmExtractor, DEFAULT_EXTRACTION_PROMPT};
pub use rules::{parse_gazetteer, parse_patterns, RuleBasedExtractor, ENTITY_PLACEHOLDER};

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error("document {0:?} has empty text")]
    EmptyDocument(String),
    #[error("invalid chunk config: max_chars={max_chars} (min {MIN_MAX_CHARS}), overlap={overlap} must be < max_chars")]
    InvalidChunkConfig { max_chars: usize, overlap: usize },
    #[error("chunk text is empty")]
    EmptyChunk,
    #[error("{what} line {line}: {message}")]
    RuleFile { what: &'static str, line: usize, message: String },
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Graph(#[from] KgError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub source: String,
    #[serde(default)]
    pub tags: Vec<String>,
}

impl Document {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        source: impl Into<String>,
        tags: Vec<String>,
    ) -> Result<Self, ExtractionError> {
        let id = id.into();
        let text = text.into();
        if text.trim().is_empty() {
            return Err(ExtractionError::EmptyDocument(id));
        }
        Ok(Self { id, text, source: source.into(), tags })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedEntity {
    pub surface: String,
    pub entity_type: String,
    /// Sentence-level evidence.
    pub context: String,
    pub chunk_ref: ChunkRef,
    /// `false` when the surface does not occur verbatim in the chunk.
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedRelation {
    pub head_surface: String,
    pub tail_surface: String,
    pub label: String,
    pub chunk_ref: ChunkRef,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extraction {
    pub entities: Vec<ExtractedEntity>,
    pub relations: Vec<ExtractedRelation>,
}

impl Extraction {
    pub fn is_empty(&self) -> bool {
        self.entities.is_empty() && self.relations.is_empty()
    }

    /// Every relation endpoint equals some entity surface.
    pub fn endpoints_closed(&self) -> bool {
        self.relations.iter().all(|r| {
            self.entities.iter().any(|e| e.surface == r.head_surface)
                && self.entities.iter().any(|e| e.surface == r.tail_surface)
        })
    }
}

/// A chunk-level entity/relation extractor. Implementations must be
/// deterministic for identical input and configuration.
pub trait Extractor: Send + Sync {
    fn extract_chunk(&self, chunk: &Chunk) -> Result<Extraction, ExtractionError>;
}

pub fn extract(chunk: &Chunk, extractor: &dyn Extractor) -> Result<Extraction, ExtractionError> {
    if chunk.text.trim().is_empty() {
        return Err(ExtractionError::EmptyChunk);
    }
    extractor.extract_chunk(chunk)
}

/// Extract every chunk with at most `parallelism` concurrent extractor calls.
/// Results come back in chunk order.
pub fn extract_all(
    chunks: &[Chunk],
    extractor: &dyn Extractor,
    parallelism: usize,
) -> Result<Vec<Extraction>, ExtractionError> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        chunks
            .par_iter()
            .filter(|c| !c.text.trim().is_empty())
            .map(|c| extract(c, extractor))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeReport {
    pub entities_added: usize,
    pub entities_merged: usize,
    pub triples_added: usize,
    pub triples_duplicate: usize,
}

impl MergeReport {
    fn absorb(&mut self, other: MergeReport) {
        self.entities_added += other.entities_added;
        self.entities_merged += other.entities_merged;
        self.triples_added += other.triples_added;
        self.triples_duplicate += other.triples_duplicate;
    }
}

/// Canonicalize extracted entities into `graph` and add one triple per relation.
///
/// Entity metadata records the source document and the evidence sentence of
/// the first sighting. Relation endpoints resolve against the entities of the
/// same extraction; relations whose endpoints do not resolve are skipped.
pub fn merge_into_graph(
    graph: &mut KnowledgeGraph,
    extractions: &[Extraction],
) -> Result<MergeReport, ExtractionError> {
    if graph.is_frozen() {
        return Err(KgError::Frozen.into());
    }
    let mut report = MergeReport::default();
    for ex in extractions {
        report.absorb(merge_one(graph, ex)?);
    }
    Ok(report)
}

fn merge_one(graph: &mut KnowledgeGraph, ex: &Extraction) -> Result<MergeReport, ExtractionError> {
    let mut report = MergeReport::default();
    let mut by_surface = HashMap::new();
    for e in &ex.entities {
        let mut meta = BTreeMap::new();
        meta.insert("source".to_string(), e.chunk_ref.doc_id.clone());
        if !e.context.is_empty() {
            meta.insert("context".to_string(), e.context.clone());
        }
        let up = match graph.upsert_entity(&e.surface, &e.entity_type, meta) {
            Ok(up) => up,
            Err(KgError::EmptyName) => {
                log::warn!("skipping entity with empty surface in {:?}", e.chunk_ref);
                continue;
            }
            Err(err) => return Err(err.into()),
        };
        if up.inserted {
            report.entities_added += 1;
        } else {
            report.entities_merged += 1;
        }
        by_surface.entry(normalize_name(&e.surface)).or_insert(up.id);
    }
    for r in &ex.relations {
        let (Some(&h), Some(&t)) = (
            by_surface.get(&normalize_name(&r.head_surface)),
            by_surface.get(&normalize_name(&r.tail_surface)),
        ) else {
            log::warn!("relation {:?} has unresolved endpoints; skipped", r.label);
            continue;
        };
        let rel = match graph.add_relation(&r.label) {
            Ok(rel) => rel,
            Err(KgError::EmptyLabel) => continue,
            Err(err) => return Err(err.into()),
        };
        if graph.add_triple(h, rel, t)? {
            report.triples_added += 1;
        } else {
            report.triples_duplicate += 1;
        }
    }
    Ok(report)
}
