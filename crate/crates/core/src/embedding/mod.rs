//! TransE embeddings trained with a margin ranking loss.
//!
//! A triple `(h, r, t)` scores `-‖e_h + w_r - e_t‖²`; training pushes each true
//! triple to score at least `margin` above a corrupted copy of itself.

mod link;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::{EntityId, KnowledgeGraph, RelationId, Tail, Triple};

pub use link::{predict_links, rank_metrics, RankResult, DEFAULT_HITS_AT};

/// Attempts at drawing a negative that is not a known triple.
pub const NEGATIVE_RETRIES: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error("graph has no entities")]
    EmptyGraph,
    #[error("graph must be frozen before embedding")]
    NotFrozen,
    #[error("graph has no triple with an entity tail to train on")]
    NoTrainableTriples,
    #[error("need at least 2 entities to corrupt a triple")]
    TooFewEntities,
    #[error("no vector for entity {0}")]
    MissingEntity(EntityId),
    #[error("no vector for relation {0}")]
    MissingRelation(RelationId),
    #[error("triple {0:?} has a literal tail")]
    LiteralTail(Triple),
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
    #[error("vector of length {got}, expected {dim}")]
    BadVector { dim: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corruption {
    TailOnly,
    HeadOrTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub dim: usize,
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub negatives_per_positive: usize,
    pub corruption: Corruption,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 50,
            margin: 1.0,
            learning_rate: 0.01,
            epochs: 100,
            batch_size: 32,
            negatives_per_positive: 1,
            corruption: Corruption::TailOnly,
            seed: 42,
        }
    }
}

impl TrainConfig {
    /// `epochs` may be 0 (initialization only); every other count must be positive.
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let bad = |m: &str| Err(EmbeddingError::InvalidConfig(m.into()));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if !(self.margin.is_finite() && self.margin > 0.0) {
            return bad("margin must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.negatives_per_positive == 0 {
            return bad("negatives_per_positive must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub entities: BTreeMap<EntityId, Vec<f64>>,
    pub relations: BTreeMap<RelationId, Vec<f64>>,
    pub seed: u64,
    /// Epochs trained so far.
    pub epochs: usize,
}

impl EmbeddingTable {
    pub fn entity(&self, id: EntityId) -> Result<&[f64], EmbeddingError> {
        self.entities.get(&id).map(Vec::as_slice).ok_or(EmbeddingError::MissingEntity(id))
    }

    pub fn relation(&self, id: RelationId) -> Result<&[f64], EmbeddingError> {
        self.relations.get(&id).map(Vec::as_slice).ok_or(EmbeddingError::MissingRelation(id))
    }

    /// Every vector has length `dim`.
    pub fn check_dims(&self) -> Result<(), EmbeddingError> {
        let lens = self.entities.values().chain(self.relations.values()).map(Vec::len);
        for got in lens {
            if got != self.dim {
                return Err(EmbeddingError::BadVector { dim: self.dim, got });
            }
        }
        Ok(())
    }

    /// Exactly one vector per graph entity and relation.
    pub fn covers(&self, graph: &KnowledgeGraph) -> bool {
        self.entities.keys().copied().eq(graph.entity_ids())
            && self.relations.keys().copied().eq(graph.relations().map(|r| r.id))
    }
}

pub(crate) fn l2_normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

pub fn init_embeddings(graph: &KnowledgeGraph, config: &TrainConfig) -> Result<EmbeddingTable, EmbeddingError> {
    config.validate()?;
    if !graph.is_frozen() {
        return Err(EmbeddingError::NotFrozen);
    }
    if graph.entity_count() == 0 {
        return Err(EmbeddingError::EmptyGraph);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bound = 6.0 / (config.dim as f64).sqrt();
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..config.dim).map(|_| rng.gen_range(-bound..=bound)).collect() };
    let entities = graph
        .entity_ids()
        .map(|id| {
            let mut v = draw(&mut rng);
            l2_normalize(&mut v);
            (id, v)
        })
        .collect();
    let relations = graph.relations().map(|r| (r.id, draw(&mut rng))).collect();
    Ok(EmbeddingTable { dim: config.dim, entities, relations, seed: config.seed, epochs: 0 })
}

fn sq_dist_translated(h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    h.iter().zip(r).zip(t).map(|((h, r), t)| (h + r - t).powi(2)).sum()
}

/// `-‖e_h + w_r - e_t‖²`.
pub fn score_triple(table: &EmbeddingTable, h: EntityId, r: RelationId, t: EntityId) -> Result<f64, EmbeddingError> {
    Ok(-sq_dist_translated(table.entity(h)?, table.relation(r)?, table.entity(t)?))
}

/// Hinge `max(0, margin + neg - pos)`.
pub fn margin_loss(pos_score: f64, neg_score: f64, margin: f64) -> f64 {
    (margin + neg_score - pos_score).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegativeSample {
    pub triple: Triple,
    /// The retry budget ran out; the triple may be a true fact.
    pub false_negative_possible: bool,
}

fn entity_tail(t: &Triple) -> Result<EntityId, EmbeddingError> {
    t.tail.entity().ok_or_else(|| EmbeddingError::LiteralTail(t.clone()))
}

/// Corrupt one side of `triple` with a uniformly drawn different entity,
/// redrawing while the result is a triple of `graph`.
pub fn negative_sample<R: Rng + ?Sized>(
    triple: &Triple,
    graph: &KnowledgeGraph,
    corruption: Corruption,
    rng: &mut R,
) -> Result<NegativeSample, EmbeddingError> {
    let entities: Vec<EntityId> = graph.entity_ids().collect();
    negative_from(triple, &entities, |t| graph.contains(t), corruption, rng)
}

fn negative_from<R: Rng + ?Sized>(
    triple: &Triple,
    entities: &[EntityId],
    known: impl Fn(&Triple) -> bool,
    corruption: Corruption,
    rng: &mut R,
) -> Result<NegativeSample, EmbeddingError> {
    if entities.len() < 2 {
        return Err(EmbeddingError::TooFewEntities);
    }
    let tail = entity_tail(triple)?;
    let mut candidate = triple.clone();
    for _ in 0..NEGATIVE_RETRIES {
        let corrupt_head = corruption == Corruption::HeadOrTail && rng.gen_bool(0.5);
        let original = if corrupt_head { triple.head } else { tail };
        // uniform over the other n-1 entities
        let pick = match entities.binary_search(&original) {
            Ok(skip) => {
                let j = rng.gen_range(0..entities.len() - 1);
                entities[if j >= skip { j + 1 } else { j }]
            }
            Err(_) => entities[rng.gen_range(0..entities.len())],
        };
        candidate = if corrupt_head {
            Triple::new(pick, triple.relation, tail)
        } else {
            Triple::new(triple.head, triple.relation, pick)
        };
        if !known(&candidate) {
            return Ok(NegativeSample { triple: candidate, false_negative_possible: false });
        }
    }
    Ok(NegativeSample { triple: candidate, false_negative_possible: true })
}

/// Gradient of the hinge loss for one (positive, negative) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    pub loss: f64,
    pub entities: BTreeMap<EntityId, Vec<f64>>,
    pub relations: BTreeMap<RelationId, Vec<f64>>,
}

struct Slots<'a> {
    h: &'a [f64],
    r: &'a [f64],
    t: &'a [f64],
}

/// Per-coordinate gradients `[dh, dr, dt, dh', dr', dt']`, or `None` when
/// the hinge is inactive.
fn pair_terms(pos: &Slots, neg: &Slots, margin: f64) -> Option<(f64, [Vec<f64>; 6])> {
    let u: Vec<f64> = pos.h.iter().zip(pos.r).zip(pos.t).map(|((h, r), t)| h + r - t).collect();
    let v: Vec<f64> = neg.h.iter().zip(neg.r).zip(neg.t).map(|((h, r), t)| h + r - t).collect();
    let pos_score = -u.iter().map(|x| x * x).sum::<f64>();
    let neg_score = -v.iter().map(|x| x * x).sum::<f64>();
    let loss = margin_loss(pos_score, neg_score, margin);
    if loss <= 0.0 {
        return None;
    }
    let du: Vec<f64> = u.iter().map(|x| 2.0 * x).collect();
    let dv: Vec<f64> = v.iter().map(|x| -2.0 * x).collect();
    let neg_du: Vec<f64> = du.iter().map(|x| -x).collect();
    let neg_dv: Vec<f64> = dv.iter().map(|x| -x).collect();
    Some((loss, [du.clone(), du, neg_du, dv.clone(), dv, neg_dv]))
}

/// Analytic gradient of `max(0, margin + f(neg) - f(pos))` with respect to
/// every vector involved. Shared vectors (e.g. the relation) get summed terms.
pub fn pair_gradient(table: &EmbeddingTable, pos: &Triple, neg: &Triple, margin: f64) -> Result<PairGradient, EmbeddingError> {
    let (pt, nt) = (entity_tail(pos)?, entity_tail(neg)?);
    let ps = Slots { h: table.entity(pos.head)?, r: table.relation(pos.relation)?, t: table.entity(pt)? };
    let ns = Slots { h: table.entity(neg.head)?, r: table.relation(neg.relation)?, t: table.entity(nt)? };
    let mut g = PairGradient { loss: 0.0, entities: BTreeMap::new(), relations: BTreeMap::new() };
    let Some((loss, terms)) = pair_terms(&ps, &ns, margin) else { return Ok(g) };
    g.loss = loss;
    let [dh, dr, dt, dhn, drn, dtn] = terms;
    for (id, d) in [(pos.head, dh), (pt, dt), (neg.head, dhn), (nt, dtn)] {
        add_into(g.entities.entry(id).or_insert_with(|| vec![0.0; table.dim]), &d);
    }
    for (id, d) in [(pos.relation, dr), (neg.relation, drn)] {
        add_into(g.relations.entry(id).or_insert_with(|| vec![0.0; table.dim]), &d);
    }
    Ok(g)
}

/// Hinge loss of one pair under `table`.
pub fn pair_loss(table: &EmbeddingTable, pos: &Triple, neg: &Triple, margin: f64) -> Result<f64, EmbeddingError> {
    let p = score_triple(table, pos.head, pos.relation, entity_tail(pos)?)?;
    let n = score_triple(table, neg.head, neg.relation, entity_tail(neg)?)?;
    Ok(margin_loss(p, n, margin))
}

fn add_into(acc: &mut [f64], d: &[f64]) {
    acc.iter_mut().zip(d).for_each(|(a, b)| *a += b);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    /// Mean pair loss of each epoch, measured before that epoch's updates.
    pub epoch_losses: Vec<f64>,
    /// Last entry of `epoch_losses`, or 0 when no epoch ran.
    pub final_loss: f64,
    pub elapsed: Duration,
    /// Negatives drawn after the retry budget ran out.
    pub unfiltered_negatives: usize,
}

/// Dense working copy of a table, indexed by position in the sorted id lists.
struct Dense {
    ent_ids: Vec<EntityId>,
    rel_ids: Vec<RelationId>,
    ent: Vec<Vec<f64>>,
    rel: Vec<Vec<f64>>,
}

impl Dense {
    fn from_table(table: &EmbeddingTable) -> Self {
        Self {
            ent_ids: table.entities.keys().copied().collect(),
            rel_ids: table.relations.keys().copied().collect(),
            ent: table.entities.values().cloned().collect(),
            rel: table.relations.values().cloned().collect(),
        }
    }

    fn ent_pos(&self, id: EntityId) -> usize {
        self.ent_ids.binary_search(&id).expect("entity has a vector")
    }

    fn rel_pos(&self, id: RelationId) -> usize {
        self.rel_ids.binary_search(&id).expect("relation has a vector")
    }

    fn write_back(self, table: &mut EmbeddingTable) {
        table.entities = self.ent_ids.into_iter().zip(self.ent).collect();
        table.relations = self.rel_ids.into_iter().zip(self.rel).collect();
    }
}

/// Train TransE on the entity-tailed triples of `graph`.
///
/// Each epoch shuffles the triples, walks them in mini-batches, draws
/// `negatives_per_positive` filtered negatives per triple, applies one SGD
/// step per batch on the summed gradients, then re-normalizes entity vectors.
pub fn train(graph: &KnowledgeGraph, config: &TrainConfig) -> Result<(EmbeddingTable, TrainStats), EmbeddingError> {
    let started = Instant::now();
    let mut table = init_embeddings(graph, config)?;
    let positives: Vec<(usize, usize, usize)> = {
        let dense = Dense::from_table(&table);
        graph
            .triples()
            .filter_map(|t| match t.tail {
                Tail::Entity(tail) => Some((dense.ent_pos(t.head), dense.rel_pos(t.relation), dense.ent_pos(tail))),
                Tail::Literal(_) => None,
            })
            .collect()
    };
    if positives.is_empty() {
        return Err(EmbeddingError::NoTrainableTriples);
    }
    if config.epochs > 0 && graph.entity_count() < 2 {
        return Err(EmbeddingError::TooFewEntities);
    }

    // training draws from a stream independent of initialization
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut dense = Dense::from_table(&table);
    let mut order: Vec<usize> = (0..positives.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut unfiltered = 0;
    let d = config.dim;

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut pairs = 0usize;
        for batch in order.chunks(config.batch_size) {
            let mut g_ent: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            let mut g_rel: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            for &i in batch {
                let (h, r, t) = positives[i];
                let pos = Triple::new(dense.ent_ids[h], dense.rel_ids[r], dense.ent_ids[t]);
                for _ in 0..config.negatives_per_positive {
                    let neg = negative_from(&pos, &dense.ent_ids, |c| graph.contains(c), config.corruption, &mut rng)?;
                    unfiltered += usize::from(neg.false_negative_possible);
                    let nh = dense.ent_pos(neg.triple.head);
                    let nt = dense.ent_pos(entity_tail(&neg.triple)?);
                    pairs += 1;
                    let ps = Slots { h: &dense.ent[h], r: &dense.rel[r], t: &dense.ent[t] };
                    let ns = Slots { h: &dense.ent[nh], r: &dense.rel[r], t: &dense.ent[nt] };
                    let Some((loss, [dh, dr, dt, dhn, drn, dtn])) = pair_terms(&ps, &ns, config.margin) else { continue };
                    total += loss;
                    for (k, g) in [(h, dh), (t, dt), (nh, dhn), (nt, dtn)] {
                        add_into(g_ent.entry(k).or_insert_with(|| vec![0.0; d]), &g);
                    }
                    for g in [dr, drn] {
                        add_into(g_rel.entry(r).or_insert_with(|| vec![0.0; d]), &g);
                    }
                }
            }
            for (k, g) in g_ent {
                dense.ent[k].iter_mut().zip(&g).for_each(|(x, gx)| *x -= config.learning_rate * gx);
            }
            for (k, g) in g_rel {
                dense.rel[k].iter_mut().zip(&g).for_each(|(x, gx)| *x -= config.learning_rate * gx);
            }
        }
        dense.ent.iter_mut().for_each(|v| l2_normalize(v));
        epoch_losses.push(if pairs == 0 { 0.0 } else { total / pairs as f64 });
    }

    dense.write_back(&mut table);
    table.epochs = config.epochs;
    if unfiltered > 0 {
        log::warn!("{unfiltered} negatives may be true triples (retry budget exhausted)");
    }
    let final_loss = epoch_losses.last().copied().unwrap_or(0.0);
    Ok((table, TrainStats { epoch_losses, final_loss, elapsed: started.elapsed(), unfiltered_negatives: unfiltered }))
}

/// Mean hinge loss over the entity-tailed triples of `graph`, each paired with
/// every corruption of its tail that is not itself in `graph`.
pub fn exhaustive_tail_loss(table: &EmbeddingTable, graph: &KnowledgeGraph, margin: f64) -> Result<f64, EmbeddingError> {
    let ids: BTreeSet<EntityId> = table.entities.keys().copied().collect();
    let mut total = 0.0;
    let mut n = 0usize;
    for pos in graph.triples().filter(|t| t.tail.entity().is_some()) {
        for &e in &ids {
            let neg = Triple::new(pos.head, pos.relation, e);
            if graph.contains(&neg) {
                continue;
            }
            total += pair_loss(table, pos, &neg, margin)?;
            n += 1;
        }
    }
    if n == 0 {
        return Err(EmbeddingError::NoTrainableTriples);
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap as Map;

    pub(super) fn graph(n: usize, edges: &[(usize, &str, usize)]) -> (KnowledgeGraph, Vec<EntityId>) {
        let mut g = KnowledgeGraph::new();
        let ids: Vec<EntityId> = (0..n).map(|i| g.add_entity(&format!("E{i}"), "node", Map::new()).unwrap()).collect();
        for &(h, r, t) in edges {
            let r = g.add_relation(r).unwrap();
            g.add_triple(ids[h], r, ids[t]).unwrap();
        }
        g.freeze();
        (g, ids)
    }

    fn table2(h: [f64; 2], r: [f64; 2], t: [f64; 2]) -> (EmbeddingTable, EntityId, RelationId, EntityId) {
        let (e0, e1, r0) = (EntityId::new(0), EntityId::new(1), RelationId::new(0));
        let table = EmbeddingTable {
            dim: 2,
            entities: [(e0, h.to_vec()), (e1, t.to_vec())].into(),
            relations: [(r0, r.to_vec())].into(),
            seed: 0,
            epochs: 0,
        };
        (table, e0, r0, e1)
    }

    #[test]
    fn score_examples() {
        let (t, h, r, e) = table2([1.0, 0.0], [0.0, 1.0], [1.0, 1.0]);
        assert_eq!(score_triple(&t, h, r, e).unwrap(), 0.0);
        let (t, h, r, e) = table2([1.0, 0.0], [0.0, 1.0], [2.0, 1.0]);
        assert_eq!(score_triple(&t, h, r, e).unwrap(), -1.0);
        let (t, h, r, e) = table2([0.0, 0.0], [0.0, 0.0], [3.0, 4.0]);
        assert_eq!(score_triple(&t, h, r, e).unwrap(), -25.0);
        assert!(matches!(score_triple(&t, EntityId::new(9), r, e), Err(EmbeddingError::MissingEntity(_))));
    }

    #[test]
    fn margin_loss_examples() {
        assert_eq!(margin_loss(-1.0, -5.0, 1.0), 0.0);
        assert_eq!(margin_loss(-3.0, -1.0, 1.0), 3.0);
        assert_eq!(margin_loss(-2.0, -2.0, 1.0), 1.0);
    }

    #[test]
    fn init_is_seeded_bounded_and_normalized() {
        let (g, _) = graph(5, &[(0, "r", 1), (1, "s", 2)]);
        let cfg = TrainConfig { dim: 8, ..Default::default() };
        let a = init_embeddings(&g, &cfg).unwrap();
        assert_eq!(a, init_embeddings(&g, &cfg).unwrap());
        assert!(a.covers(&g));
        a.check_dims().unwrap();
        for v in a.entities.values() {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-6);
        }
        let bound = 6.0 / 8f64.sqrt();
        assert!(a.relations.values().flatten().all(|x| x.abs() <= bound));
        let b = init_embeddings(&g, &TrainConfig { seed: 7, ..cfg }).unwrap();
        assert_ne!(a, b);

        let mut open = KnowledgeGraph::new();
        open.add_entity("x", "t", Map::new()).unwrap();
        assert_eq!(init_embeddings(&open, &cfg), Err(EmbeddingError::NotFrozen));
        assert_eq!(init_embeddings(&KnowledgeGraph::new().frozen(), &cfg), Err(EmbeddingError::EmptyGraph));
    }

    #[test]
    fn negative_sampling_rules() {
        let (g, ids) = graph(2, &[(0, "r", 1)]);
        let pos = g.triples().next().unwrap().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let neg = negative_sample(&pos, &g, Corruption::TailOnly, &mut rng).unwrap();
        assert_eq!(neg.triple, Triple::new(ids[0], pos.relation, ids[0]));
        assert!(!neg.false_negative_possible);

        // (A,r,C) also holds: C is never offered as the corrupted tail of (A,r,B)
        let (g, ids) = graph(5, &[(0, "r", 1), (0, "r", 2)]);
        let pos = Triple::new(ids[0], g.relation_by_label("r").unwrap(), ids[1]);
        let mut heads = 0;
        for _ in 0..10_000 {
            let n = negative_sample(&pos, &g, Corruption::TailOnly, &mut rng).unwrap();
            assert!(!g.contains(&n.triple));
            assert_ne!(n.triple.tail, Tail::Entity(ids[2]));
            let n = negative_sample(&pos, &g, Corruption::HeadOrTail, &mut rng).unwrap();
            assert!(!g.contains(&n.triple));
            if n.triple.head != pos.head {
                heads += 1;
            }
        }
        assert!((3_000..=7_000).contains(&heads), "head corruptions: {heads}");
    }

    #[test]
    fn negatives_are_uniform_over_other_entities() {
        let (g, ids) = graph(6, &[(2, "r", 3)]);
        let pos = g.triples().next().unwrap().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts: Map<EntityId, usize> = Map::new();
        for _ in 0..25_000 {
            let n = negative_sample(&pos, &g, Corruption::TailOnly, &mut rng).unwrap();
            *counts.entry(n.triple.tail.entity().unwrap()).or_default() += 1;
        }
        assert!(!counts.contains_key(&ids[3]));
        assert_eq!(counts.len(), 5);
        assert!(counts.values().all(|&c| (4_500..=5_500).contains(&c)), "{counts:?}");
    }

    #[test]
    fn exhausted_retries_are_flagged() {
        // every corruption is a true triple
        let (g, ids) = graph(3, &[(0, "r", 0), (0, "r", 1), (0, "r", 2)]);
        let pos = Triple::new(ids[0], g.relation_by_label("r").unwrap(), ids[1]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(negative_sample(&pos, &g, Corruption::TailOnly, &mut rng).unwrap().false_negative_possible);
    }

    #[test]
    fn translation_invariance() {
        let (g, ids) = graph(4, &[(0, "r", 1), (2, "s", 3)]);
        let table = init_embeddings(&g, &TrainConfig { dim: 5, ..Default::default() }).unwrap();
        let mut shifted = table.clone();
        let c = [0.3, -1.2, 4.0, 0.01, -7.5];
        for v in shifted.entities.values_mut() {
            add_into(v, &c);
        }
        for t in g.triples() {
            let tail = t.tail.entity().unwrap();
            let a = score_triple(&table, t.head, t.relation, tail).unwrap();
            let b = score_triple(&shifted, t.head, t.relation, tail).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
        let _ = ids;
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (g, ids) = graph(3, &[(0, "r", 1)]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pos = g.triples().next().unwrap().clone();
        let neg = Triple::new(ids[0], pos.relation, ids[2]);
        let mut checked = 0;
        while checked < 20 {
            let mut table = init_embeddings(&g, &TrainConfig { dim: 3, seed: rng.gen(), ..Default::default() }).unwrap();
            for v in table.entities.values_mut().chain(table.relations.values_mut()) {
                v.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
            }
            let raw = {
                let p = score_triple(&table, pos.head, pos.relation, ids[1]).unwrap();
                let n = score_triple(&table, neg.head, neg.relation, ids[2]).unwrap();
                1.0 + n - p
            };
            if raw.abs() <= 1e-3 {
                continue;
            }
            let grad = pair_gradient(&table, &pos, &neg, 1.0).unwrap();
            let step = 1e-5;
            for (&id, _) in table.entities.clone().iter() {
                for k in 0..3 {
                    let mut plus = table.clone();
                    plus.entities.get_mut(&id).unwrap()[k] += step;
                    let mut minus = table.clone();
                    minus.entities.get_mut(&id).unwrap()[k] -= step;
                    let fd = (pair_loss(&plus, &pos, &neg, 1.0).unwrap() - pair_loss(&minus, &pos, &neg, 1.0).unwrap()) / (2.0 * step);
                    let an = grad.entities.get(&id).map_or(0.0, |v| v[k]);
                    assert!((fd - an).abs() <= 1e-4 * fd.abs().max(an.abs()).max(1e-8), "{fd} vs {an}");
                }
            }
            checked += 1;
        }
    }

    #[test]
    fn single_triple_converges() {
        let (g, _) = graph(2, &[(0, "r", 1)]);
        let cfg = TrainConfig { dim: 4, learning_rate: 0.05, epochs: 200, batch_size: 1, seed: 5, ..Default::default() };
        let (table, stats) = train(&g, &cfg).unwrap();
        assert_eq!(stats.epoch_losses.len(), 200);
        assert!(exhaustive_tail_loss(&table, &g, cfg.margin).unwrap() < 1e-6);
        assert!(stats.final_loss < 1e-6);
        for v in table.entities.values() {
            assert!((v.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_epochs_and_determinism() {
        let (g, _) = graph(6, &[(0, "r", 1), (1, "r", 2), (3, "s", 4), (4, "s", 5)]);
        let cfg = TrainConfig { dim: 6, epochs: 0, ..Default::default() };
        let (table, stats) = train(&g, &cfg).unwrap();
        assert_eq!(table, init_embeddings(&g, &cfg).unwrap());
        assert!(stats.epoch_losses.is_empty());
        let cfg = TrainConfig { epochs: 15, batch_size: 2, corruption: Corruption::HeadOrTail, ..cfg };
        assert_eq!(train(&g, &cfg).unwrap().0, train(&g, &cfg).unwrap().0);
    }

    #[test]
    fn literal_only_graph_is_not_trainable() {
        let mut g = KnowledgeGraph::new();
        let a = g.add_entity("A", "x", Map::new()).unwrap();
        g.add_entity("B", "x", Map::new()).unwrap();
        let r = g.add_relation("has value").unwrap();
        g.add_triple(a, r, crate::kg::Literal::new("7", crate::kg::LiteralKind::Number).unwrap()).unwrap();
        g.freeze();
        assert_eq!(train(&g, &TrainConfig::default()).unwrap_err(), EmbeddingError::NoTrainableTriples);
    }
}
