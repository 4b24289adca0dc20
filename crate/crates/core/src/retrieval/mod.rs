//! Hybrid retrieval over document chunks and linearized KG neighborhoods.
//!
//! Every candidate snippet is scored as
//!
//! ```text
//! s(q, k) = α·cos(φ(q), φ(k)) + β·tfidf(q, k) + γ·em(q, k)
//! ```
//!
//! and the top-K by `s` are returned, ties broken by snippet id. The encoder
//! `φ` is pluggable; the built-in [`HashedEncoder`] runs fully offline.

mod encoder;
mod scoring;

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::Chunk;
use crate::kg::{EntityId, KgError, KnowledgeGraph, Tail, Triple};
use crate::text::{fnv1a64, terms};

pub use encoder::{Encoder, HashedEncoder, DEFAULT_ENCODER_DIM};
pub use scoring::{
    cosine_sim, entity_coverage, entity_match_score, idf, tfidf_score, CorpusStats, EntityMatcher,
    ScoreParts, ScoringWeights, TermStats,
};
use scoring::{term_freqs, tfidf_with_tf, UnionStats};

pub const DEFAULT_TOP_K: usize = 5;
pub const DEFAULT_HOPS: usize = 1;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("text is empty")]
    EmptyText,
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("invalid encoder dimension {0}")]
    InvalidDimension(usize),
    #[error("duplicate snippet id {0:?}")]
    DuplicateId(String),
    #[error("index is empty")]
    EmptyIndex,
    #[error("unknown snippet id {0:?}")]
    UnknownSnippet(String),
    #[error("encoder {actual:?} does not match index encoder {expected:?}")]
    EncoderMismatch { expected: String, actual: String },
    #[error("weights must be finite, non-negative and not all zero: {0:?}")]
    InvalidWeights(ScoringWeights),
    #[error("malformed weights {0:?}, expected a,b,c")]
    MalformedWeights(String),
    #[error("k must be positive")]
    ZeroK,
    #[error("stored corpus stats do not match the snippets")]
    StatsMismatch,
    #[error("no triples to linearize")]
    NoTriples,
    #[error(transparent)]
    Graph(#[from] KgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnippetSource {
    DocumentChunk,
    KgTriples,
}

impl SnippetSource {
    pub fn as_str(self) -> &'static str {
        match self {
            SnippetSource::DocumentChunk => "document_chunk",
            SnippetSource::KgTriples => "kg_triples",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeSnippet {
    pub id: String,
    pub text: String,
    pub source: SnippetSource,
    #[serde(default)]
    pub source_triples: Vec<Triple>,
    #[serde(default)]
    pub linked_entities: BTreeSet<EntityId>,
}

impl KnowledgeSnippet {
    /// Snippet for a document chunk, linked to the graph entities it names.
    pub fn from_chunk(chunk: &Chunk, matcher: &EntityMatcher) -> Self {
        Self {
            id: chunk.snippet_id(),
            text: chunk.text.clone(),
            source: SnippetSource::DocumentChunk,
            source_triples: Vec::new(),
            linked_entities: matcher.detect(&chunk.text),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSnippet {
    pub snippet: KnowledgeSnippet,
    pub score: f64,
    pub parts: ScoreParts,
}

/// Descending score, then ascending snippet id.
fn rank_order(a: (f64, &str), b: (f64, &str)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

#[derive(Debug, Clone)]
pub struct VectorIndex {
    encoder_id: String,
    dim: usize,
    snippets: Vec<KnowledgeSnippet>,
    vectors: Vec<Vec<f64>>,
    stats: CorpusStats,
    positions: HashMap<String, usize>,
    tfs: Vec<HashMap<String, usize>>,
}

impl PartialEq for VectorIndex {
    fn eq(&self, other: &Self) -> bool {
        self.encoder_id == other.encoder_id
            && self.dim == other.dim
            && self.snippets == other.snippets
            && self.vectors == other.vectors
            && self.stats == other.stats
    }
}

impl VectorIndex {
    pub fn empty(encoder: &dyn Encoder) -> Self {
        Self::assemble(encoder.id(), encoder.dim(), Vec::new(), Vec::new())
    }

    fn assemble(encoder_id: String, dim: usize, snippets: Vec<KnowledgeSnippet>, vectors: Vec<Vec<f64>>) -> Self {
        let stats = CorpusStats::from_texts(snippets.iter().map(|s| s.text.as_str()));
        let positions = snippets.iter().enumerate().map(|(i, s)| (s.id.clone(), i)).collect();
        let tfs = snippets.iter().map(|s| term_freqs(&s.text)).collect();
        Self { encoder_id, dim, snippets, vectors, stats, positions, tfs }
    }

    /// Rebuild from persisted parts, checking that the stored corpus stats and
    /// vector dimensions agree with the snippets.
    pub fn from_parts(
        encoder_id: String,
        dim: usize,
        snippets: Vec<KnowledgeSnippet>,
        vectors: Vec<Vec<f64>>,
        stats: CorpusStats,
    ) -> Result<Self, RetrievalError> {
        let mut seen = BTreeSet::new();
        for s in &snippets {
            if !seen.insert(s.id.as_str()) {
                return Err(RetrievalError::DuplicateId(s.id.clone()));
            }
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(RetrievalError::DimensionMismatch { left: v.len(), right: dim });
        }
        if vectors.len() != snippets.len() {
            return Err(RetrievalError::DimensionMismatch { left: vectors.len(), right: snippets.len() });
        }
        let index = Self::assemble(encoder_id, dim, snippets, vectors);
        if index.stats != stats {
            return Err(RetrievalError::StatsMismatch);
        }
        Ok(index)
    }

    pub fn encoder_id(&self) -> &str {
        &self.encoder_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.snippets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snippets.is_empty()
    }

    pub fn snippets(&self) -> &[KnowledgeSnippet] {
        &self.snippets
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }

    pub fn get(&self, id: &str) -> Option<(&KnowledgeSnippet, &[f64])> {
        self.positions.get(id).map(|&i| (&self.snippets[i], self.vectors[i].as_slice()))
    }

    fn check_encoder(&self, encoder: &dyn Encoder) -> Result<(), RetrievalError> {
        if encoder.id() != self.encoder_id {
            return Err(RetrievalError::EncoderMismatch { expected: self.encoder_id.clone(), actual: encoder.id() });
        }
        Ok(())
    }
}

/// Encode every snippet. Snippet order is preserved.
pub fn build_index(snippets: Vec<KnowledgeSnippet>, encoder: &dyn Encoder) -> Result<VectorIndex, RetrievalError> {
    let mut seen = BTreeSet::new();
    for s in &snippets {
        if !seen.insert(s.id.as_str()) {
            return Err(RetrievalError::DuplicateId(s.id.clone()));
        }
    }
    let vectors = snippets.iter().map(|s| encoder.encode(&s.text)).collect::<Result<Vec<_>, _>>()?;
    Ok(VectorIndex::assemble(encoder.id(), encoder.dim(), snippets, vectors))
}

/// Render triples as `"<head> <relation> <tail>."` sentences, one per line,
/// sorted and deduplicated.
pub fn linearize_triples(triples: &[Triple], graph: &KnowledgeGraph) -> Result<KnowledgeSnippet, RetrievalError> {
    if triples.is_empty() {
        return Err(RetrievalError::NoTriples);
    }
    let mut sentences = BTreeSet::new();
    let mut linked = BTreeSet::new();
    for t in triples {
        let head = graph.entity(t.head).ok_or(KgError::UnknownEntity(t.head))?;
        let rel = graph.relation(t.relation).ok_or(KgError::UnknownRelation(t.relation))?;
        let tail = match &t.tail {
            Tail::Entity(id) => {
                linked.insert(*id);
                graph.entity(*id).ok_or(KgError::UnknownEntity(*id))?.name.as_str()
            }
            Tail::Literal(lit) => lit.value.as_str(),
        };
        linked.insert(t.head);
        sentences.insert(format!("{} {} {}.", head.name, rel.label, tail));
    }
    let text = sentences.into_iter().collect::<Vec<_>>().join("\n");
    let mut source_triples = triples.to_vec();
    source_triples.sort();
    source_triples.dedup();
    Ok(KnowledgeSnippet {
        id: format!("kg:{:016x}", fnv1a64(text.as_bytes())),
        text,
        source: SnippetSource::KgTriples,
        source_triples,
        linked_entities: linked,
    })
}

struct Candidate<'a> {
    snippet: &'a KnowledgeSnippet,
    vector: &'a [f64],
    tf: &'a HashMap<String, usize>,
}

/// Query-time view over an index, its encoder and the knowledge graph.
pub struct Retriever<'a> {
    index: &'a VectorIndex,
    encoder: &'a dyn Encoder,
    graph: &'a KnowledgeGraph,
    matcher: EntityMatcher,
}

impl<'a> Retriever<'a> {
    pub fn new(index: &'a VectorIndex, encoder: &'a dyn Encoder, graph: &'a KnowledgeGraph) -> Result<Self, RetrievalError> {
        index.check_encoder(encoder)?;
        Ok(Self { index, encoder, graph, matcher: EntityMatcher::new(graph) })
    }

    pub fn matcher(&self) -> &EntityMatcher {
        &self.matcher
    }

    pub fn encode_query(&self, query: &str) -> Result<Vec<f64>, RetrievalError> {
        self.encoder.encode(query)
    }

    /// Score one indexed snippet.
    pub fn hybrid_score(&self, query: &str, qvec: &[f64], snippet_id: &str, weights: ScoringWeights) -> Result<ScoredSnippet, RetrievalError> {
        weights.validate()?;
        let &i = self.index.positions.get(snippet_id).ok_or_else(|| RetrievalError::UnknownSnippet(snippet_id.into()))?;
        let q = QueryFeatures::new(query, qvec, &self.matcher);
        let c = Candidate { snippet: &self.index.snippets[i], vector: &self.index.vectors[i], tf: &self.index.tfs[i] };
        let parts = q.parts(&c, &self.index.stats)?;
        Ok(ScoredSnippet { snippet: c.snippet.clone(), score: weights.combine(parts), parts })
    }

    /// Top-K indexed snippets by hybrid score.
    pub fn top_k(&self, query: &str, k: usize, weights: ScoringWeights) -> Result<Vec<ScoredSnippet>, RetrievalError> {
        if self.index.is_empty() {
            return Err(RetrievalError::EmptyIndex);
        }
        self.rank_with_extras(query, Vec::new(), k, weights)
    }

    /// Linearized `hops`-neighborhood of each entity named in `query`.
    pub fn kg_snippets(&self, query: &str, hops: usize) -> Result<Vec<KnowledgeSnippet>, RetrievalError> {
        let mut out = Vec::new();
        for seed in self.matcher.detect(query) {
            let sub = self.graph.subgraph(&BTreeSet::from([seed]), hops)?;
            let triples: Vec<Triple> = sub.triples().cloned().collect();
            if triples.is_empty() {
                continue;
            }
            let mut snippet = linearize_triples(&triples, self.graph)?;
            snippet.id = format!("kg:{seed}");
            out.push(snippet);
        }
        Ok(out)
    }

    /// KG-RAG retrieval: indexed chunks plus KG neighborhood snippets of the
    /// query's entities, ranked together.
    pub fn for_query(&self, query: &str, k: usize, weights: ScoringWeights, hops: usize) -> Result<Vec<ScoredSnippet>, RetrievalError> {
        let extras = self.kg_snippets(query, hops)?;
        self.rank_with_extras(query, extras, k, weights)
    }

    /// Rank the index together with `extras`. Extras whose id collides with an
    /// indexed snippet are ignored; document frequencies cover the union.
    /// Returns an empty list when there are no candidates at all.
    pub fn rank_with_extras(
        &self,
        query: &str,
        extras: Vec<KnowledgeSnippet>,
        k: usize,
        weights: ScoringWeights,
    ) -> Result<Vec<ScoredSnippet>, RetrievalError> {
        if k == 0 {
            return Err(RetrievalError::ZeroK);
        }
        weights.validate()?;
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let extras: Vec<KnowledgeSnippet> = extras
            .into_iter()
            .filter(|s| !self.index.positions.contains_key(&s.id) && seen.insert(s.id.clone()))
            .collect();
        let extra_vecs = extras.iter().map(|s| self.encoder.encode(&s.text)).collect::<Result<Vec<_>, _>>()?;
        let extra_tfs: Vec<_> = extras.iter().map(|s| term_freqs(&s.text)).collect();
        let stats = UnionStats {
            base: &self.index.stats,
            extra: CorpusStats::from_texts(extras.iter().map(|s| s.text.as_str())),
        };

        let candidates: Vec<Candidate> = (0..self.index.len())
            .map(|i| Candidate { snippet: &self.index.snippets[i], vector: &self.index.vectors[i], tf: &self.index.tfs[i] })
            .chain((0..extras.len()).map(|i| Candidate { snippet: &extras[i], vector: &extra_vecs[i], tf: &extra_tfs[i] }))
            .collect();
        if candidates.is_empty() {
            return Ok(Vec::new());
        }

        let qvec = self.encoder.encode(query)?;
        let q = QueryFeatures::new(query, &qvec, &self.matcher);
        let mut scored = candidates
            .iter()
            .map(|c| q.parts(c, &stats).map(|p| (weights.combine(p), p, c.snippet)))
            .collect::<Result<Vec<_>, _>>()?;

        let cmp = |a: &(f64, ScoreParts, &KnowledgeSnippet), b: &(f64, ScoreParts, &KnowledgeSnippet)| {
            rank_order((a.0, &a.2.id), (b.0, &b.2.id))
        };
        if scored.len() > k {
            scored.select_nth_unstable_by(k - 1, cmp);
            scored.truncate(k);
        }
        scored.sort_by(cmp);
        Ok(scored
            .into_iter()
            .map(|(score, parts, s)| ScoredSnippet { snippet: s.clone(), score, parts })
            .collect())
    }
}

struct QueryFeatures<'q> {
    terms: BTreeSet<String>,
    vector: &'q [f64],
    vector_zero: bool,
    entities: BTreeSet<EntityId>,
}

impl<'q> QueryFeatures<'q> {
    fn new(query: &str, vector: &'q [f64], matcher: &EntityMatcher) -> Self {
        Self {
            terms: terms(query).into_iter().collect(),
            vector,
            vector_zero: vector.iter().all(|&x| x == 0.0),
            entities: matcher.detect(query),
        }
    }

    fn parts(&self, c: &Candidate, stats: &dyn TermStats) -> Result<ScoreParts, RetrievalError> {
        // a text with no terms has no direction; it contributes no similarity
        let sim = if self.vector_zero || c.vector.iter().all(|&x| x == 0.0) {
            if self.vector.len() != c.vector.len() {
                return Err(RetrievalError::DimensionMismatch { left: self.vector.len(), right: c.vector.len() });
            }
            0.0
        } else {
            cosine_sim(self.vector, c.vector)?
        };
        Ok(ScoreParts {
            sim,
            tfidf: tfidf_with_tf(&self.terms, c.tf, stats),
            em: entity_coverage(&self.entities, &c.snippet.linked_entities),
        })
    }
}

pub fn retrieve_top_k(
    query: &str,
    index: &VectorIndex,
    encoder: &dyn Encoder,
    graph: &KnowledgeGraph,
    k: usize,
    weights: ScoringWeights,
) -> Result<Vec<ScoredSnippet>, RetrievalError> {
    Retriever::new(index, encoder, graph)?.top_k(query, k, weights)
}

pub fn retrieve_for_query(
    query: &str,
    graph: &KnowledgeGraph,
    index: &VectorIndex,
    encoder: &dyn Encoder,
    k: usize,
    weights: ScoringWeights,
    hops: usize,
) -> Result<Vec<ScoredSnippet>, RetrievalError> {
    Retriever::new(index, encoder, graph)?.for_query(query, k, weights, hops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn doc_snippet(id: &str, text: &str) -> KnowledgeSnippet {
        KnowledgeSnippet {
            id: id.into(),
            text: text.into(),
            source: SnippetSource::DocumentChunk,
            source_triples: vec![],
            linked_entities: BTreeSet::new(),
        }
    }

    fn corpus() -> Vec<KnowledgeSnippet> {
        vec![
            doc_snippet("a", "RLC segments packets for transmission"),
            doc_snippet("b", "PDCP performs header compression and ciphering"),
            doc_snippet("c", "handover latency depends on the RRC procedure"),
            doc_snippet("d", "beam management in millimetre wave bands"),
            doc_snippet("e", "the paging occasion is derived from the UE identity"),
        ]
    }

    #[test]
    fn build_index_cases() {
        let enc = HashedEncoder::default();
        let empty = build_index(vec![], &enc).unwrap();
        assert!(empty.is_empty());
        let idx = build_index(corpus(), &enc).unwrap();
        assert_eq!(idx.len(), 5);
        assert_eq!(idx.stats().doc_freq("the"), 2);
        assert_eq!(idx, build_index(corpus(), &enc).unwrap());
        let mut dup = corpus();
        dup.push(doc_snippet("a", "again"));
        assert!(matches!(build_index(dup, &enc), Err(RetrievalError::DuplicateId(_))));
    }

    #[test]
    fn verbatim_snippet_ranks_first_under_pure_similarity() {
        let enc = HashedEncoder::default();
        let idx = build_index(corpus(), &enc).unwrap();
        let g = KnowledgeGraph::new();
        let w = ScoringWeights::new(1.0, 0.0, 0.0).unwrap();
        let res = retrieve_top_k("handover latency depends on the RRC procedure", &idx, &enc, &g, 3, w).unwrap();
        assert_eq!(res.len(), 3);
        assert_eq!(res[0].snippet.id, "c");
        assert!((res[0].score - 1.0).abs() < 1e-12);
        assert_eq!(res[0].score, res[0].parts.sim);
        let all = retrieve_top_k("handover", &idx, &enc, &g, 50, w).unwrap();
        assert_eq!(all.len(), 5);
        assert!(all.windows(2).all(|p| p[0].score >= p[1].score));
    }

    #[test]
    fn ties_break_by_id() {
        let enc = HashedEncoder::default();
        let idx = build_index(vec![doc_snippet("z", "same text"), doc_snippet("m", "same text")], &enc).unwrap();
        let res = retrieve_top_k("same", &idx, &enc, &KnowledgeGraph::new(), 2, ScoringWeights::default()).unwrap();
        assert_eq!(res.iter().map(|s| s.snippet.id.as_str()).collect::<Vec<_>>(), ["m", "z"]);
    }

    #[test]
    fn errors() {
        let enc = HashedEncoder::default();
        let g = KnowledgeGraph::new();
        let empty = VectorIndex::empty(&enc);
        assert!(matches!(retrieve_top_k("q", &empty, &enc, &g, 1, ScoringWeights::default()), Err(RetrievalError::EmptyIndex)));
        let other = HashedEncoder::new(8).unwrap();
        assert!(matches!(Retriever::new(&empty, &other, &g), Err(RetrievalError::EncoderMismatch { .. })));
    }

    #[test]
    fn hybrid_reductions() {
        let enc = HashedEncoder::default();
        let mut g = KnowledgeGraph::new();
        let rlc = g.add_entity("RLC", "protocol", BTreeMap::new()).unwrap();
        let mut snippets = corpus();
        snippets[0].linked_entities.insert(rlc);
        let idx = build_index(snippets, &enc).unwrap();
        let r = Retriever::new(&idx, &enc, &g).unwrap();
        let q = "what does RLC do";
        let qv = r.encode_query(q).unwrap();
        let s = r.hybrid_score(q, &qv, "a", ScoringWeights::new(1.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(s.score, cosine_sim(&qv, idx.get("a").unwrap().1).unwrap());
        let s = r.hybrid_score(q, &qv, "a", ScoringWeights::new(0.0, 0.0, 1.0).unwrap()).unwrap();
        assert_eq!(s.score, 1.0);
        let s = r.hybrid_score(q, &qv, "a", ScoringWeights::default()).unwrap();
        assert!((s.score - ScoringWeights::default().combine(s.parts)).abs() < 1e-12);
        assert!(r.hybrid_score(q, &qv, "nope", ScoringWeights::default()).is_err());
    }

    #[test]
    fn linearization_format() {
        let mut g = KnowledgeGraph::new();
        let rlc = g.add_entity("RLC", "protocol", BTreeMap::new()).unwrap();
        let arq = g.add_entity("ARQ", "mechanism", BTreeMap::new()).unwrap();
        let mac = g.add_entity("MAC", "protocol", BTreeMap::new()).unwrap();
        let uses = g.add_relation("uses").unwrap();
        let above = g.add_relation("sits above").unwrap();
        let s = linearize_triples(&[Triple::new(rlc, uses, arq)], &g).unwrap();
        assert_eq!(s.text, "RLC uses ARQ.");
        assert_eq!(s.source, SnippetSource::KgTriples);
        assert_eq!(s.linked_entities, BTreeSet::from([rlc, arq]));

        let s2 = linearize_triples(&[Triple::new(rlc, uses, arq), Triple::new(rlc, above, mac)], &g).unwrap();
        assert_eq!(s2.text, "RLC sits above MAC.\nRLC uses ARQ.");
        // parse-back: entities named in the text are exactly the linked ones
        let named = EntityMatcher::new(&g).detect(&s2.text);
        assert_eq!(named, s2.linked_entities);
        assert!(matches!(linearize_triples(&[], &g), Err(RetrievalError::NoTriples)));
    }

    #[test]
    fn kg_composite_retrieval() {
        let enc = HashedEncoder::default();
        let mut g = KnowledgeGraph::new();
        let a = g.add_entity("RLC", "protocol", BTreeMap::new()).unwrap();
        let b = g.add_entity("ARQ", "mechanism", BTreeMap::new()).unwrap();
        let r = g.add_relation("uses").unwrap();
        g.add_triple(a, r, b).unwrap();
        let idx = build_index(corpus(), &enc).unwrap();
        let w = ScoringWeights::default();

        // no entities named → same as plain top-k
        let q = "paging occasion of the UE";
        assert_eq!(
            retrieve_for_query(q, &g, &idx, &enc, 3, w, 1).unwrap(),
            retrieve_top_k(q, &idx, &enc, &g, 3, w).unwrap()
        );

        let res = retrieve_for_query("how does RLC work", &g, &idx, &enc, 10, w, 1).unwrap();
        let kg = res.iter().find(|s| s.snippet.source == SnippetSource::KgTriples).unwrap();
        assert_eq!(kg.snippet.text, "RLC uses ARQ.");
        assert_eq!(kg.snippet.id, format!("kg:{a}"));

        let one = retrieve_for_query("how does RLC work", &g, &idx, &enc, 1, w, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0], res[0]);
    }

    #[test]
    fn empty_candidates_give_empty_result() {
        let enc = HashedEncoder::default();
        let g = KnowledgeGraph::new();
        let idx = VectorIndex::empty(&enc);
        assert!(retrieve_for_query("anything", &g, &idx, &enc, 3, ScoringWeights::default(), 1).unwrap().is_empty());
    }
}
