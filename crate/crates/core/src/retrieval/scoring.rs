//! Components of the hybrid relevance score.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::kg::{EntityId, KnowledgeGraph};
use crate::text::terms;

use super::{KnowledgeSnippet, RetrievalError};

pub fn cosine_sim(u: &[f64], v: &[f64]) -> Result<f64, RetrievalError> {
    if u.len() != v.len() {
        return Err(RetrievalError::DimensionMismatch { left: u.len(), right: v.len() });
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(RetrievalError::ZeroVector);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Document-frequency source for TF-IDF.
pub trait TermStats {
    fn snippet_count(&self) -> usize;
    fn doc_freq(&self, term: &str) -> usize;
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub snippet_count: usize,
    pub doc_freq: std::collections::BTreeMap<String, usize>,
}

impl CorpusStats {
    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut stats = CorpusStats::default();
        for t in texts {
            stats.add(t);
        }
        stats
    }

    pub fn add(&mut self, text: &str) {
        self.snippet_count += 1;
        let distinct: BTreeSet<String> = terms(text).into_iter().collect();
        for t in distinct {
            *self.doc_freq.entry(t).or_default() += 1;
        }
    }
}

impl TermStats for CorpusStats {
    fn snippet_count(&self) -> usize {
        self.snippet_count
    }

    fn doc_freq(&self, term: &str) -> usize {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }
}

/// Stats of an index extended with extra candidate snippets.
pub(crate) struct UnionStats<'a> {
    pub base: &'a CorpusStats,
    pub extra: CorpusStats,
}

impl TermStats for UnionStats<'_> {
    fn snippet_count(&self) -> usize {
        self.base.snippet_count + self.extra.snippet_count
    }

    fn doc_freq(&self, term: &str) -> usize {
        self.base.doc_freq(term) + self.extra.doc_freq(term)
    }
}

pub(crate) fn term_freqs(text: &str) -> HashMap<String, usize> {
    let mut tf = HashMap::new();
    for t in terms(text) {
        *tf.entry(t).or_default() += 1;
    }
    tf
}

/// Smoothed inverse document frequency `ln((1 + N) / (1 + df)) + 1`.
pub fn idf(snippet_count: usize, doc_freq: usize) -> f64 {
    ((1.0 + snippet_count as f64) / (1.0 + doc_freq as f64)).ln() + 1.0
}

/// Σ over distinct query terms of raw tf in the snippet × idf.
pub(crate) fn tfidf_with_tf(query_terms: &BTreeSet<String>, tf: &HashMap<String, usize>, stats: &dyn TermStats) -> f64 {
    query_terms
        .iter()
        .filter_map(|t| tf.get(t).map(|&c| c as f64 * idf(stats.snippet_count(), stats.doc_freq(t))))
        .sum()
}

pub fn tfidf_score(query: &str, snippet: &KnowledgeSnippet, stats: &dyn TermStats) -> f64 {
    let q: BTreeSet<String> = terms(query).into_iter().collect();
    tfidf_with_tf(&q, &term_freqs(&snippet.text), stats)
}

/// Longest-match scanner for graph entity names over the shared term pipeline.
#[derive(Debug, Clone, Default)]
pub struct EntityMatcher {
    names: HashMap<Vec<String>, Vec<EntityId>>,
    max_len: usize,
}

impl EntityMatcher {
    pub fn new(graph: &KnowledgeGraph) -> Self {
        let mut names: HashMap<Vec<String>, Vec<EntityId>> = HashMap::new();
        for e in graph.entities() {
            let key = terms(&e.name);
            if !key.is_empty() {
                names.entry(key).or_default().push(e.id);
            }
        }
        let max_len = names.keys().map(Vec::len).max().unwrap_or(0);
        Self { names, max_len }
    }

    /// Entities named in `text`, scanning left to right and taking the longest
    /// name that starts at each position.
    pub fn detect(&self, text: &str) -> BTreeSet<EntityId> {
        let toks = terms(text);
        let mut found = BTreeSet::new();
        let mut i = 0;
        while i < toks.len() {
            let longest = (1..=self.max_len.min(toks.len() - i))
                .rev()
                .find_map(|len| self.names.get(&toks[i..i + len]).map(|ids| (len, ids)));
            match longest {
                Some((len, ids)) => {
                    found.extend(ids.iter().copied());
                    i += len;
                }
                None => i += 1,
            }
        }
        found
    }
}

/// Fraction of query entities covered by `linked`; 0 when the query names none.
pub fn entity_coverage(query_entities: &BTreeSet<EntityId>, linked: &BTreeSet<EntityId>) -> f64 {
    if query_entities.is_empty() {
        return 0.0;
    }
    query_entities.intersection(linked).count() as f64 / query_entities.len() as f64
}

pub fn entity_match_score(query: &str, snippet: &KnowledgeSnippet, graph: &KnowledgeGraph) -> f64 {
    entity_coverage(&EntityMatcher::new(graph).detect(query), &snippet.linked_entities)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringWeights {
    /// α: dense cosine similarity.
    pub sim: f64,
    /// β: TF-IDF (unnormalized).
    pub tfidf: f64,
    /// γ: entity match.
    pub em: f64,
}

impl Default for ScoringWeights {
    fn default() -> Self {
        Self { sim: 1.0, tfidf: 0.05, em: 0.5 }
    }
}

impl ScoringWeights {
    pub fn new(sim: f64, tfidf: f64, em: f64) -> Result<Self, RetrievalError> {
        let w = Self { sim, tfidf, em };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), RetrievalError> {
        let all = [self.sim, self.tfidf, self.em];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) || all.iter().all(|w| *w == 0.0) {
            return Err(RetrievalError::InvalidWeights(*self));
        }
        Ok(())
    }

    pub fn combine(&self, parts: ScoreParts) -> f64 {
        self.sim * parts.sim + self.tfidf * parts.tfidf + self.em * parts.em
    }
}

impl std::str::FromStr for ScoringWeights {
    type Err = RetrievalError;

    /// `"a,b,c"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| RetrievalError::MalformedWeights(s.to_string()))?;
        match parts[..] {
            [a, b, c] => Self::new(a, b, c),
            _ => Err(RetrievalError::MalformedWeights(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreParts {
    pub sim: f64,
    pub tfidf: f64,
    pub em: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::SnippetSource;
    use std::collections::BTreeMap;

    fn snippet(text: &str, linked: &[EntityId]) -> KnowledgeSnippet {
        KnowledgeSnippet {
            id: "s".into(),
            text: text.into(),
            source: SnippetSource::DocumentChunk,
            source_triples: vec![],
            linked_entities: linked.iter().copied().collect(),
        }
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine_sim(&[0.3, 0.4], &[0.3, 0.4]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine_sim(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let expected = 32.0 / (14f64.sqrt() * 77f64.sqrt());
        let got = cosine_sim(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.974631).abs() < 1e-6);
        assert!(matches!(cosine_sim(&[0.0, 0.0], &[1.0, 0.0]), Err(RetrievalError::ZeroVector)));
        assert!(matches!(cosine_sim(&[1.0], &[1.0, 0.0]), Err(RetrievalError::DimensionMismatch { .. })));
    }

    #[test]
    fn tfidf_examples() {
        let s = snippet("beam management and beam failure", &[]);
        let single = CorpusStats::from_texts([s.text.as_str()]);
        // N = 1, df = 1, tf = 2 → 2 · (ln(2/2) + 1) = 2
        assert!((tfidf_score("beam", &s, &single) - 2.0).abs() < 1e-12);
        assert_eq!(tfidf_score("paging occasion", &s, &single), 0.0);
        assert_eq!(tfidf_score("unseen unseen", &s, &single), 0.0);
        assert_eq!(tfidf_score("Beam", &s, &single), tfidf_score("beam beam", &s, &single));
    }

    #[test]
    fn document_frequency_by_hand() {
        let stats = CorpusStats::from_texts(["RLC and MAC", "the MAC layer, MAC again", "PHY only"]);
        assert_eq!(stats.snippet_count, 3);
        assert_eq!(stats.doc_freq("mac"), 2);
        assert_eq!(stats.doc_freq("phy"), 1);
        assert_eq!(stats.doc_freq("ip"), 0);
    }

    #[test]
    fn entity_match_examples() {
        let mut g = KnowledgeGraph::new();
        let rlc = g.add_entity("RLC", "protocol", BTreeMap::new()).unwrap();
        let pdcp = g.add_entity("PDCP", "protocol", BTreeMap::new()).unwrap();
        let q = "How does RLC interact with PDCP?";
        assert_eq!(entity_match_score("what is a beam?", &snippet("x", &[rlc]), &g), 0.0);
        assert_eq!(entity_match_score(q, &snippet("x", &[rlc, pdcp]), &g), 1.0);
        assert_eq!(entity_match_score(q, &snippet("x", &[pdcp]), &g), 0.5);
        assert_eq!(entity_match_score(q, &snippet("x", &[]), &g), 0.0);
    }

    #[test]
    fn longest_match_prefers_multiword_names() {
        let mut g = KnowledgeGraph::new();
        let nr = g.add_entity("NR", "technology", BTreeMap::new()).unwrap();
        let five_g_nr = g.add_entity("5G NR", "technology", BTreeMap::new()).unwrap();
        let m = EntityMatcher::new(&g);
        assert_eq!(m.detect("5G NR carriers"), BTreeSet::from([five_g_nr]));
        assert_eq!(m.detect("NR and 5g nr"), BTreeSet::from([nr, five_g_nr]));
        assert!(EntityMatcher::default().detect("anything").is_empty());
    }

    #[test]
    fn weights_parse_and_validate() {
        let w: ScoringWeights = "0.5, 0.3,0.2".parse().unwrap();
        assert_eq!(w, ScoringWeights { sim: 0.5, tfidf: 0.3, em: 0.2 });
        assert!("0,0,0".parse::<ScoringWeights>().is_err());
        assert!("1,-1,0".parse::<ScoringWeights>().is_err());
        assert!("1,2".parse::<ScoringWeights>().is_err());
        let parts = ScoreParts { sim: 0.9, tfidf: 2.0, em: 1.0 };
        assert!((w.combine(parts) - 1.25).abs() < 1e-12);
    }
}
