use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{io_err, write_atomic, PersistenceError, SNAPSHOT_VERSION};
use crate::embedding::EmbeddingTable;
use crate::extraction::{Chunk, ChunkConfig, Document};
use crate::kg::{Entity, EntityId, KnowledgeGraph, RelationId, RelationType, Triple};
use crate::retrieval::{CorpusStats, KnowledgeSnippet, SnippetSource, VectorIndex};

#[derive(Serialize, Deserialize)]
struct Header<M> {
    kind: String,
    format: String,
    version: u64,
    #[serde(flatten)]
    meta: M,
}

fn render<M: Serialize, R: Serialize>(path: &Path, format: &str, meta: M, records: impl IntoIterator<Item = R>) -> Result<String, PersistenceError> {
    let invalid = |e: serde_json::Error| PersistenceError::Invalid { path: path.to_path_buf(), message: e.to_string() };
    let header = Header { kind: "header".into(), format: format.into(), version: SNAPSHOT_VERSION.into(), meta };
    let mut out = serde_json::to_string(&header).map_err(invalid)?;
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(&r).map_err(invalid)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parse a snapshot file: header metadata plus `(line number, record)` pairs.
fn parse<M: DeserializeOwned, R: DeserializeOwned>(path: &Path, format: &str) -> Result<(M, Vec<(usize, R)>), PersistenceError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let corrupt = |line: usize, message: String| PersistenceError::Corrupt { path: path.to_path_buf(), line, message };
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    let Some(first) = lines.first() else { return Err(corrupt(1, "empty file".into())) };

    let head: Value = serde_json::from_str(first).map_err(|e| corrupt(1, format!("unreadable header: {e}")))?;
    if head.get("kind").and_then(Value::as_str) != Some("header") {
        return Err(corrupt(1, "first record is not a header".into()));
    }
    let found = head.get("format").and_then(Value::as_str).unwrap_or_default();
    if found != format {
        return Err(PersistenceError::WrongFormat { path: path.to_path_buf(), expected: format.into(), found: found.into() });
    }
    let version = head.get("version").and_then(Value::as_u64).ok_or_else(|| corrupt(1, "header has no version".into()))?;
    if version != u64::from(SNAPSHOT_VERSION) {
        return Err(PersistenceError::VersionMismatch { path: path.to_path_buf(), found: version, expected: SNAPSHOT_VERSION });
    }
    let header: Header<M> = serde_json::from_value(head).map_err(|e| corrupt(1, format!("bad header: {e}")))?;

    let mut records = Vec::with_capacity(lines.len() - 1);
    for (i, raw) in lines.iter().enumerate().skip(1) {
        let line = i + 1;
        if !raw.ends_with('\n') {
            return Err(corrupt(line, "truncated record (no line terminator)".into()));
        }
        if raw.trim().is_empty() {
            continue;
        }
        let rec: R = serde_json::from_str(raw).map_err(|e| corrupt(line, e.to_string()))?;
        records.push((line, rec));
    }
    Ok((header.meta, records))
}

fn count_check(path: &Path, what: &str, expected: usize, found: usize, last_line: usize) -> Result<(), PersistenceError> {
    if expected != found {
        return Err(PersistenceError::Corrupt {
            path: path.to_path_buf(),
            line: last_line + 1,
            message: format!("header announces {expected} {what} records, file has {found}"),
        });
    }
    Ok(())
}

fn last_line<R>(records: &[(usize, R)]) -> usize {
    records.last().map_or(1, |r| r.0)
}

// ---- knowledge graph ----

#[derive(Serialize, Deserialize)]
struct KgMeta {
    entity_count: usize,
    relation_count: usize,
    triple_count: usize,
    frozen: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum KgRecord {
    Entity(Entity),
    Relation(RelationType),
    Triple(Triple),
}

pub fn save_kg(graph: &KnowledgeGraph, path: &Path) -> Result<(), PersistenceError> {
    let meta = KgMeta {
        entity_count: graph.entity_count(),
        relation_count: graph.relation_count(),
        triple_count: graph.triple_count(),
        frozen: graph.is_frozen(),
    };
    let records = graph
        .entities()
        .cloned()
        .map(KgRecord::Entity)
        .chain(graph.relations().cloned().map(KgRecord::Relation))
        .chain(graph.triples().cloned().map(KgRecord::Triple));
    write_atomic(path, render(path, "kg", meta, records)?.as_bytes())
}

pub fn load_kg(path: &Path) -> Result<KnowledgeGraph, PersistenceError> {
    let (meta, records): (KgMeta, Vec<(usize, KgRecord)>) = parse(path, "kg")?;
    let mut g = KnowledgeGraph::new();
    let (mut ne, mut nr, mut nt) = (0, 0, 0);
    for (line, rec) in &records {
        let res = match rec {
            KgRecord::Entity(e) => {
                ne += 1;
                g.insert_entity_raw(e.clone())
            }
            KgRecord::Relation(r) => {
                nr += 1;
                g.insert_relation_raw(r.clone())
            }
            KgRecord::Triple(t) => {
                nt += 1;
                g.insert_triple_raw(t.clone()).map(|_| ())
            }
        };
        res.map_err(|e| PersistenceError::Corrupt { path: path.to_path_buf(), line: *line, message: e.to_string() })?;
    }
    let end = last_line(&records);
    count_check(path, "entity", meta.entity_count, ne, end)?;
    count_check(path, "relation", meta.relation_count, nr, end)?;
    count_check(path, "triple", meta.triple_count, nt, end)?;
    if meta.frozen {
        g.freeze();
    }
    Ok(g)
}

// ---- embeddings ----

#[derive(Serialize, Deserialize)]
struct EmbeddingMeta {
    dim: usize,
    entity_count: usize,
    relation_count: usize,
    seed: u64,
    epochs: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum EmbeddingRecord {
    EntityVec { id: EntityId, values: Vec<f64> },
    RelationVec { id: RelationId, values: Vec<f64> },
}

pub fn save_embeddings(table: &EmbeddingTable, path: &Path) -> Result<(), PersistenceError> {
    let invalid = |message: String| PersistenceError::Invalid { path: path.to_path_buf(), message };
    table.check_dims().map_err(|e| invalid(e.to_string()))?;
    if table.entities.values().chain(table.relations.values()).flatten().any(|x| !x.is_finite()) {
        return Err(invalid("embedding table has non-finite values".into()));
    }
    let meta = EmbeddingMeta {
        dim: table.dim,
        entity_count: table.entities.len(),
        relation_count: table.relations.len(),
        seed: table.seed,
        epochs: table.epochs,
    };
    let records = table
        .entities
        .iter()
        .map(|(&id, v)| EmbeddingRecord::EntityVec { id, values: v.clone() })
        .chain(table.relations.iter().map(|(&id, v)| EmbeddingRecord::RelationVec { id, values: v.clone() }));
    write_atomic(path, render(path, "embeddings", meta, records)?.as_bytes())
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable, PersistenceError> {
    let (meta, records): (EmbeddingMeta, Vec<(usize, EmbeddingRecord)>) = parse(path, "embeddings")?;
    let corrupt = |line: usize, message: String| PersistenceError::Corrupt { path: path.to_path_buf(), line, message };
    let mut entities = BTreeMap::new();
    let mut relations = BTreeMap::new();
    for (line, rec) in records.iter() {
        let (values, fresh) = match rec {
            EmbeddingRecord::EntityVec { id, values } => (values, entities.insert(*id, values.clone()).is_none()),
            EmbeddingRecord::RelationVec { id, values } => (values, relations.insert(*id, values.clone()).is_none()),
        };
        if values.len() != meta.dim {
            return Err(corrupt(*line, format!("vector of length {}, header dim {}", values.len(), meta.dim)));
        }
        if !fresh {
            return Err(corrupt(*line, "duplicate id".into()));
        }
    }
    let end = last_line(&records);
    count_check(path, "entity_vec", meta.entity_count, entities.len(), end)?;
    count_check(path, "relation_vec", meta.relation_count, relations.len(), end)?;
    Ok(EmbeddingTable { dim: meta.dim, entities, relations, seed: meta.seed, epochs: meta.epochs })
}

// ---- vector index ----

#[derive(Serialize, Deserialize)]
struct IndexMeta {
    encoder_id: String,
    dim: usize,
    snippet_count: usize,
    stats: CorpusStats,
}

#[derive(Serialize, Deserialize)]
struct SnippetRecord {
    id: String,
    text: String,
    source: SnippetSource,
    #[serde(default)]
    source_triples: Vec<Triple>,
    #[serde(default)]
    linked_entities: BTreeSet<EntityId>,
    vector: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum IndexRecord {
    Snippet(SnippetRecord),
}

pub fn save_index(index: &VectorIndex, path: &Path) -> Result<(), PersistenceError> {
    if index.vectors().iter().flatten().any(|x| !x.is_finite()) {
        return Err(PersistenceError::Invalid { path: path.to_path_buf(), message: "index has non-finite vector values".into() });
    }
    let meta = IndexMeta {
        encoder_id: index.encoder_id().to_string(),
        dim: index.dim(),
        snippet_count: index.len(),
        stats: index.stats().clone(),
    };
    let records = index.snippets().iter().zip(index.vectors()).map(|(s, v)| {
        IndexRecord::Snippet(SnippetRecord {
            id: s.id.clone(),
            text: s.text.clone(),
            source: s.source,
            source_triples: s.source_triples.clone(),
            linked_entities: s.linked_entities.clone(),
            vector: v.clone(),
        })
    });
    write_atomic(path, render(path, "index", meta, records)?.as_bytes())
}

pub fn load_index(path: &Path) -> Result<VectorIndex, PersistenceError> {
    let (meta, records): (IndexMeta, Vec<(usize, IndexRecord)>) = parse(path, "index")?;
    count_check(path, "snippet", meta.snippet_count, records.len(), last_line(&records))?;
    let mut snippets = Vec::with_capacity(records.len());
    let mut vectors = Vec::with_capacity(records.len());
    for (_, IndexRecord::Snippet(r)) in records {
        snippets.push(KnowledgeSnippet {
            id: r.id,
            text: r.text,
            source: r.source,
            source_triples: r.source_triples,
            linked_entities: r.linked_entities,
        });
        vectors.push(r.vector);
    }
    VectorIndex::from_parts(meta.encoder_id, meta.dim, snippets, vectors, meta.stats)
        .map_err(|e| PersistenceError::Invalid { path: path.to_path_buf(), message: e.to_string() })
}

// ---- chunk store ----

/// Ingested documents and their chunks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkStore {
    pub chunking: ChunkConfig,
    pub documents: Vec<Document>,
    pub chunks: Vec<Chunk>,
}

#[derive(Serialize, Deserialize)]
struct ChunkMeta {
    chunking: ChunkConfig,
    document_count: usize,
    chunk_count: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ChunkRecord {
    Document(Document),
    Chunk(Chunk),
}

pub fn save_chunks(store: &ChunkStore, path: &Path) -> Result<(), PersistenceError> {
    let meta = ChunkMeta { chunking: store.chunking, document_count: store.documents.len(), chunk_count: store.chunks.len() };
    let records = store
        .documents
        .iter()
        .cloned()
        .map(ChunkRecord::Document)
        .chain(store.chunks.iter().cloned().map(ChunkRecord::Chunk));
    write_atomic(path, render(path, "chunks", meta, records)?.as_bytes())
}

pub fn load_chunks(path: &Path) -> Result<ChunkStore, PersistenceError> {
    let (meta, records): (ChunkMeta, Vec<(usize, ChunkRecord)>) = parse(path, "chunks")?;
    let end = last_line(&records);
    let mut store = ChunkStore { chunking: meta.chunking, documents: Vec::new(), chunks: Vec::new() };
    for (_, rec) in records {
        match rec {
            ChunkRecord::Document(d) => store.documents.push(d),
            ChunkRecord::Chunk(c) => store.chunks.push(c),
        }
    }
    count_check(path, "document", meta.document_count, store.documents.len(), end)?;
    count_check(path, "chunk", meta.chunk_count, store.chunks.len(), end)?;
    Ok(store)
}
