//! In-memory typed triple store.
//!
//! A [`KnowledgeGraph`] is a set of `(head, relation, tail)` triples where the
//! head is an entity, the relation is an open-vocabulary [`RelationType`], and
//! the tail is either another entity or an inline [`Literal`]. Three adjacency
//! indexes (by head, by entity tail, by relation) are maintained alongside the
//! triple set and are kept coherent on every insertion.
//!
//! Entities are canonicalized on `(normalized name, type)`: re-adding
//! `"3gpp "` as an `organization` returns the id of an existing `"3GPP"`
//! organization and merges metadata into it.
//!
//! Iteration order is deterministic everywhere (ids are sequential and all
//! maps are ordered).

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::text::{collapse_whitespace, normalize_name};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KgError {
    #[error("entity name is empty after normalization")]
    EmptyName,
    #[error("relation label is empty")]
    EmptyLabel,
    #[error("literal value is empty")]
    EmptyLiteral,
    #[error("unknown entity id {0}")]
    UnknownEntity(EntityId),
    #[error("unknown relation id {0}")]
    UnknownRelation(RelationId),
    #[error("graph is frozen")]
    Frozen,
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("malformed id {0:?}")]
    MalformedId(String),
}

macro_rules! graph_id {
    ($name:ident, $prefix:literal) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(u32);

        impl $name {
            pub fn new(raw: u32) -> Self {
                Self(raw)
            }

            pub fn raw(self) -> u32 {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }

        impl FromStr for $name {
            type Err = KgError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                s.strip_prefix($prefix)
                    .and_then(|n| n.parse().ok())
                    .map(Self)
                    .ok_or_else(|| KgError::MalformedId(s.to_string()))
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

graph_id!(EntityId, "e");
graph_id!(RelationId, "r");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: EntityId,
    /// Canonical surface form (whitespace-collapsed, case preserved from first sighting).
    pub name: String,
    pub entity_type: String,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl Entity {
    pub fn key(&self) -> (String, String) {
        (normalize_name(&self.name), self.entity_type.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationType {
    pub id: RelationId,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiteralKind {
    Text,
    Number,
    Identifier,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub value: String,
    pub datatype: LiteralKind,
}

impl Literal {
    pub fn new(value: impl Into<String>, datatype: LiteralKind) -> Result<Self, KgError> {
        let value = value.into();
        if value.trim().is_empty() {
            return Err(KgError::EmptyLiteral);
        }
        Ok(Self { value, datatype })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    Entity(EntityId),
    Literal(Literal),
}

impl Tail {
    pub fn entity(&self) -> Option<EntityId> {
        match self {
            Tail::Entity(id) => Some(*id),
            Tail::Literal(_) => None,
        }
    }
}

impl From<EntityId> for Tail {
    fn from(id: EntityId) -> Self {
        Tail::Entity(id)
    }
}

impl From<Literal> for Tail {
    fn from(lit: Literal) -> Self {
        Tail::Literal(lit)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: Tail,
}

impl Triple {
    pub fn new(head: EntityId, relation: RelationId, tail: impl Into<Tail>) -> Self {
        Self { head, relation, tail: tail.into() }
    }
}

/// Vertex of the directed-labelled-graph view: entities and literals.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Vertex {
    Entity(EntityId),
    Literal(Literal),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
    Both,
}

/// Whether [`KnowledgeGraph::upsert_entity`] created a new entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Upsert {
    pub id: EntityId,
    pub inserted: bool,
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    entities: BTreeMap<EntityId, Entity>,
    entity_keys: HashMap<(String, String), EntityId>,
    relations: BTreeMap<RelationId, RelationType>,
    relation_labels: HashMap<String, RelationId>,
    triples: BTreeSet<Triple>,
    by_head: BTreeMap<EntityId, BTreeSet<Triple>>,
    by_tail: BTreeMap<EntityId, BTreeSet<Triple>>,
    by_relation: BTreeMap<RelationId, BTreeSet<Triple>>,
    next_entity: u32,
    next_relation: u32,
    frozen: bool,
}

impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.entities == other.entities
            && self.relations == other.relations
            && self.triples == other.triples
    }
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert or merge an entity and return its id.
    pub fn add_entity(
        &mut self,
        name: &str,
        entity_type: &str,
        metadata: BTreeMap<String, String>,
    ) -> Result<EntityId, KgError> {
        self.upsert_entity(name, entity_type, metadata).map(|u| u.id)
    }

    /// Like [`add_entity`](Self::add_entity) but reports whether the entity is new.
    ///
    /// On a key hit, metadata keys not yet present are added; existing keys keep
    /// their first value.
    pub fn upsert_entity(
        &mut self,
        name: &str,
        entity_type: &str,
        metadata: BTreeMap<String, String>,
    ) -> Result<Upsert, KgError> {
        self.ensure_mutable()?;
        let key_name = normalize_name(name);
        if key_name.is_empty() {
            return Err(KgError::EmptyName);
        }
        let entity_type = entity_type.trim().to_string();
        let key = (key_name, entity_type.clone());
        if let Some(&id) = self.entity_keys.get(&key) {
            let entity = self.entities.get_mut(&id).expect("key index points at stored entity");
            for (k, v) in metadata {
                entity.metadata.entry(k).or_insert(v);
            }
            return Ok(Upsert { id, inserted: false });
        }
        let id = EntityId(self.next_entity);
        self.next_entity += 1;
        self.entity_keys.insert(key, id);
        self.entities.insert(
            id,
            Entity { id, name: collapse_whitespace(name), entity_type, metadata },
        );
        Ok(Upsert { id, inserted: true })
    }

    /// Get-or-create the relation type with this label (open vocabulary).
    pub fn add_relation(&mut self, label: &str) -> Result<RelationId, KgError> {
        let label = label.trim();
        if label.is_empty() {
            return Err(KgError::EmptyLabel);
        }
        if let Some(&id) = self.relation_labels.get(label) {
            return Ok(id);
        }
        self.ensure_mutable()?;
        let id = RelationId(self.next_relation);
        self.next_relation += 1;
        self.relation_labels.insert(label.to_string(), id);
        self.relations.insert(id, RelationType { id, label: label.to_string() });
        Ok(id)
    }

    /// Insert a triple; `Ok(false)` if it was already present.
    pub fn add_triple(
        &mut self,
        head: EntityId,
        relation: RelationId,
        tail: impl Into<Tail>,
    ) -> Result<bool, KgError> {
        self.ensure_mutable()?;
        let triple = Triple::new(head, relation, tail);
        self.check_resolves(&triple)?;
        if self.triples.contains(&triple) {
            return Ok(false);
        }
        self.index_insert(triple);
        Ok(true)
    }

    fn index_insert(&mut self, triple: Triple) {
        self.by_head.entry(triple.head).or_default().insert(triple.clone());
        self.by_relation.entry(triple.relation).or_default().insert(triple.clone());
        if let Tail::Entity(t) = triple.tail {
            self.by_tail.entry(t).or_default().insert(triple.clone());
        }
        self.triples.insert(triple);
    }

    fn check_resolves(&self, triple: &Triple) -> Result<(), KgError> {
        if !self.entities.contains_key(&triple.head) {
            return Err(KgError::UnknownEntity(triple.head));
        }
        if !self.relations.contains_key(&triple.relation) {
            return Err(KgError::UnknownRelation(triple.relation));
        }
        if let Tail::Entity(t) = triple.tail {
            if !self.entities.contains_key(&t) {
                return Err(KgError::UnknownEntity(t));
            }
        }
        Ok(())
    }

    fn ensure_mutable(&self) -> Result<(), KgError> {
        if self.frozen {
            Err(KgError::Frozen)
        } else {
            Ok(())
        }
    }

    /// Insert an entity with a caller-chosen id (snapshot loading, subgraph copies).
    pub(crate) fn insert_entity_raw(&mut self, entity: Entity) -> Result<(), KgError> {
        if normalize_name(&entity.name).is_empty() {
            return Err(KgError::EmptyName);
        }
        let key = entity.key();
        if self.entities.contains_key(&entity.id) || self.entity_keys.contains_key(&key) {
            return Err(KgError::DuplicateId(entity.id.to_string()));
        }
        self.next_entity = self.next_entity.max(entity.id.0 + 1);
        self.entity_keys.insert(key, entity.id);
        self.entities.insert(entity.id, entity);
        Ok(())
    }

    pub(crate) fn insert_relation_raw(&mut self, relation: RelationType) -> Result<(), KgError> {
        if relation.label.trim().is_empty() {
            return Err(KgError::EmptyLabel);
        }
        if self.relations.contains_key(&relation.id)
            || self.relation_labels.contains_key(&relation.label)
        {
            return Err(KgError::DuplicateId(relation.id.to_string()));
        }
        self.next_relation = self.next_relation.max(relation.id.0 + 1);
        self.relation_labels.insert(relation.label.clone(), relation.id);
        self.relations.insert(relation.id, relation);
        Ok(())
    }

    pub(crate) fn insert_triple_raw(&mut self, triple: Triple) -> Result<bool, KgError> {
        self.check_resolves(&triple)?;
        if self.triples.contains(&triple) {
            return Ok(false);
        }
        self.index_insert(triple);
        Ok(true)
    }

    /// Make the graph immutable. Further mutation returns [`KgError::Frozen`].
    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn frozen(mut self) -> Self {
        self.frozen = true;
        self
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn entity(&self, id: EntityId) -> Option<&Entity> {
        self.entities.get(&id)
    }

    pub fn relation(&self, id: RelationId) -> Option<&RelationType> {
        self.relations.get(&id)
    }

    pub fn relation_by_label(&self, label: &str) -> Option<RelationId> {
        self.relation_labels.get(label.trim()).copied()
    }

    pub fn find_entity(&self, name: &str, entity_type: &str) -> Option<EntityId> {
        self.entity_keys
            .get(&(normalize_name(name), entity_type.trim().to_string()))
            .copied()
    }

    /// All entities whose normalized name equals `name`, any type, ascending id.
    pub fn find_entities_by_name(&self, name: &str) -> Vec<EntityId> {
        let key = normalize_name(name);
        self.entities
            .values()
            .filter(|e| normalize_name(&e.name) == key)
            .map(|e| e.id)
            .collect()
    }

    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    pub fn entity_ids(&self) -> impl Iterator<Item = EntityId> + '_ {
        self.entities.keys().copied()
    }

    pub fn relations(&self) -> impl Iterator<Item = &RelationType> {
        self.relations.values()
    }

    pub fn triples(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty() && self.relations.is_empty()
    }

    pub fn with_head(&self, head: EntityId) -> impl Iterator<Item = &Triple> {
        self.by_head.get(&head).into_iter().flatten()
    }

    pub fn with_tail(&self, tail: EntityId) -> impl Iterator<Item = &Triple> {
        self.by_tail.get(&tail).into_iter().flatten()
    }

    pub fn with_relation(&self, relation: RelationId) -> impl Iterator<Item = &Triple> {
        self.by_relation.get(&relation).into_iter().flatten()
    }

    /// Vertex set of the labelled-graph view: all entities plus every literal tail.
    pub fn vertices(&self) -> BTreeSet<Vertex> {
        let mut v: BTreeSet<Vertex> = self.entities.keys().map(|&id| Vertex::Entity(id)).collect();
        for t in &self.triples {
            if let Tail::Literal(lit) = &t.tail {
                v.insert(Vertex::Literal(lit.clone()));
            }
        }
        v
    }

    /// Display string for a tail: the entity name or the literal value.
    pub fn tail_text<'a>(&'a self, tail: &'a Tail) -> Option<&'a str> {
        match tail {
            Tail::Entity(id) => self.entities.get(id).map(|e| e.name.as_str()),
            Tail::Literal(lit) => Some(lit.value.as_str()),
        }
    }

    /// Triples incident to `entity`, sorted by (relation label, tail text, head name).
    pub fn neighbors(&self, entity: EntityId, direction: Direction) -> Result<Vec<Triple>, KgError> {
        if !self.entities.contains_key(&entity) {
            return Err(KgError::UnknownEntity(entity));
        }
        let mut set: BTreeSet<&Triple> = BTreeSet::new();
        if matches!(direction, Direction::Out | Direction::Both) {
            set.extend(self.with_head(entity));
        }
        if matches!(direction, Direction::In | Direction::Both) {
            set.extend(self.with_tail(entity));
        }
        let mut out: Vec<Triple> = set.into_iter().cloned().collect();
        out.sort_by(|a, b| self.display_key(a).cmp(&self.display_key(b)).then_with(|| a.cmp(b)));
        Ok(out)
    }

    fn display_key<'a>(&'a self, t: &'a Triple) -> (&'a str, &'a str, &'a str) {
        (
            self.relations.get(&t.relation).map_or("", |r| r.label.as_str()),
            self.tail_text(&t.tail).unwrap_or(""),
            self.entities.get(&t.head).map_or("", |e| e.name.as_str()),
        )
    }

    /// Breadth-first neighborhood of `seeds` over both edge directions.
    ///
    /// The result holds every entity within `hops` of a seed and every triple
    /// traversed by the expansion, i.e. triples with an endpoint at distance
    /// `< hops`. `hops = 0` yields the seeds alone. Entity and relation ids are
    /// preserved.
    pub fn subgraph(&self, seeds: &BTreeSet<EntityId>, hops: usize) -> Result<KnowledgeGraph, KgError> {
        for &s in seeds {
            if !self.entities.contains_key(&s) {
                return Err(KgError::UnknownEntity(s));
            }
        }
        let mut dist: BTreeMap<EntityId, usize> = seeds.iter().map(|&s| (s, 0)).collect();
        let mut queue: VecDeque<EntityId> = seeds.iter().copied().collect();
        let mut edges: BTreeSet<&Triple> = BTreeSet::new();
        while let Some(e) = queue.pop_front() {
            let d = dist[&e];
            if d >= hops {
                continue;
            }
            for t in self.with_head(e).chain(self.with_tail(e)) {
                edges.insert(t);
                let other = if t.head == e { t.tail.entity() } else { Some(t.head) };
                if let Some(o) = other {
                    if !dist.contains_key(&o) {
                        dist.insert(o, d + 1);
                        queue.push_back(o);
                    }
                }
            }
        }

        let mut sub = KnowledgeGraph::new();
        for id in dist.keys() {
            sub.insert_entity_raw(self.entities[id].clone())?;
        }
        let rels: BTreeSet<RelationId> = edges.iter().map(|t| t.relation).collect();
        for r in rels {
            sub.insert_relation_raw(self.relations[&r].clone())?;
        }
        for t in edges {
            sub.insert_triple_raw(t.clone())?;
        }
        sub.next_entity = self.next_entity;
        sub.next_relation = self.next_relation;
        Ok(sub)
    }

    /// Rebuild the adjacency indexes from the triple set and compare.
    pub fn indexes_coherent(&self) -> bool {
        let mut head: BTreeMap<EntityId, BTreeSet<Triple>> = BTreeMap::new();
        let mut tail: BTreeMap<EntityId, BTreeSet<Triple>> = BTreeMap::new();
        let mut rel: BTreeMap<RelationId, BTreeSet<Triple>> = BTreeMap::new();
        for t in &self.triples {
            head.entry(t.head).or_default().insert(t.clone());
            rel.entry(t.relation).or_default().insert(t.clone());
            if let Tail::Entity(e) = t.tail {
                tail.entry(e).or_default().insert(t.clone());
            }
        }
        head == self.by_head
            && tail == self.by_tail
            && rel == self.by_relation
            && self.triples.iter().all(|t| self.check_resolves(t).is_ok())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> BTreeMap<String, String> {
        BTreeMap::new()
    }

    #[test]
    fn entity_canonicalization() {
        let mut g = KnowledgeGraph::new();
        let a = g.add_entity("3GPP", "organization", meta()).unwrap();
        assert_eq!(g.entity_count(), 1);
        let b = g.add_entity("3gpp ", "organization", meta()).unwrap();
        assert_eq!(a, b);
        assert_eq!(g.entity_count(), 1);
        let c = g.add_entity("3GPP", "protocol", meta()).unwrap();
        assert_ne!(a, c);
        assert_eq!(g.entity_count(), 2);
        // brute-force: distinct (normalized name, type) pairs
        let keys: BTreeSet<_> = g.entities().map(Entity::key).collect();
        assert_eq!(keys.len(), g.entity_count());
        assert_eq!(g.entity(a).unwrap().name, "3GPP");
    }

    #[test]
    fn empty_name_rejected() {
        let mut g = KnowledgeGraph::new();
        assert_eq!(g.add_entity(" \t\n", "x", meta()), Err(KgError::EmptyName));
    }

    #[test]
    fn metadata_merges_first_value_wins() {
        let mut g = KnowledgeGraph::new();
        let m1 = BTreeMap::from([("source".to_string(), "d1".to_string())]);
        let m2 = BTreeMap::from([
            ("source".to_string(), "d2".to_string()),
            ("context".to_string(), "ctx".to_string()),
        ]);
        let id = g.add_entity("PDCP", "protocol", m1).unwrap();
        g.add_entity("pdcp", "protocol", m2).unwrap();
        let e = g.entity(id).unwrap();
        assert_eq!(e.metadata["source"], "d1");
        assert_eq!(e.metadata["context"], "ctx");
    }

    #[test]
    fn triple_set_semantics_and_direction() {
        let mut g = KnowledgeGraph::new();
        let a = g.add_entity("A", "t", meta()).unwrap();
        let b = g.add_entity("B", "t", meta()).unwrap();
        let uses = g.add_relation("uses").unwrap();
        assert!(g.add_triple(a, uses, b).unwrap());
        assert_eq!(g.triple_count(), 1);
        assert!(!g.add_triple(a, uses, b).unwrap());
        assert_eq!(g.triple_count(), 1);
        assert!(g.add_triple(b, uses, a).unwrap());
        let stored: BTreeSet<_> = g.triples().cloned().collect();
        assert_eq!(stored, BTreeSet::from([Triple::new(a, uses, b), Triple::new(b, uses, a)]));
        assert!(g.indexes_coherent());
    }

    #[test]
    fn unknown_references() {
        let mut g = KnowledgeGraph::new();
        let a = g.add_entity("A", "t", meta()).unwrap();
        let r = g.add_relation("r").unwrap();
        let ghost = EntityId::new(99);
        assert_eq!(g.add_triple(a, r, ghost), Err(KgError::UnknownEntity(ghost)));
        assert_eq!(
            g.add_triple(a, RelationId::new(7), a),
            Err(KgError::UnknownRelation(RelationId::new(7)))
        );
        assert_eq!(g.neighbors(ghost, Direction::Out), Err(KgError::UnknownEntity(ghost)));
        assert_eq!(g.triple_count(), 0);
    }

    #[test]
    fn literal_tails_are_inline() {
        let mut g = KnowledgeGraph::new();
        let a = g.add_entity("T310", "timer", meta()).unwrap();
        let r = g.add_relation("default value").unwrap();
        let lit = Literal::new("1000 ms", LiteralKind::Text).unwrap();
        assert!(g.add_triple(a, r, lit.clone()).unwrap());
        assert!(g.vertices().contains(&Vertex::Literal(lit)));
        assert!(Literal::new("  ", LiteralKind::Number).is_err());
        assert!(g.indexes_coherent());
    }

    #[test]
    fn neighbors_by_direction() {
        let mut g = KnowledgeGraph::new();
        let a = g.add_entity("A", "t", meta()).unwrap();
        let b = g.add_entity("B", "t", meta()).unwrap();
        let c = g.add_entity("C", "t", meta()).unwrap();
        let r = g.add_relation("r").unwrap();
        let s = g.add_relation("s").unwrap();
        g.add_triple(a, r, b).unwrap();
        assert_eq!(g.neighbors(a, Direction::Out).unwrap(), vec![Triple::new(a, r, b)]);
        assert!(g.neighbors(a, Direction::In).unwrap().is_empty());
        g.add_triple(c, s, a).unwrap();
        let both = g.neighbors(a, Direction::Both).unwrap();
        let expected: Vec<Triple> = g
            .triples()
            .filter(|t| t.head == a || t.tail == Tail::Entity(a))
            .cloned()
            .collect();
        assert_eq!(both.len(), expected.len());
        assert!(expected.iter().all(|t| both.contains(t)));
        // sorted by relation label
        assert_eq!(both, vec![Triple::new(a, r, b), Triple::new(c, s, a)]);
    }

    #[test]
    fn subgraph_hops() {
        let mut g = KnowledgeGraph::new();
        let a = g.add_entity("A", "t", meta()).unwrap();
        let b = g.add_entity("B", "t", meta()).unwrap();
        let c = g.add_entity("C", "t", meta()).unwrap();
        let d = g.add_entity("D", "t", meta()).unwrap();
        let r = g.add_relation("r").unwrap();
        g.add_triple(a, r, b).unwrap();
        g.add_triple(b, r, c).unwrap();
        let seeds = BTreeSet::from([a]);

        let zero = g.subgraph(&seeds, 0).unwrap();
        assert_eq!(zero.entity_count(), 1);
        assert_eq!(zero.triple_count(), 0);

        let one = g.subgraph(&seeds, 1).unwrap();
        assert_eq!(one.triples().cloned().collect::<Vec<_>>(), vec![Triple::new(a, r, b)]);
        assert!(one.indexes_coherent());

        let all = g.subgraph(&seeds, 10).unwrap();
        assert_eq!(all.triple_count(), 2);
        assert!(all.entity(d).is_none());
        assert_eq!(g.subgraph(&BTreeSet::from([EntityId::new(42)]), 1).unwrap_err(), KgError::UnknownEntity(EntityId::new(42)));
    }

    #[test]
    fn frozen_graph_rejects_mutation() {
        let mut g = KnowledgeGraph::new();
        let a = g.add_entity("A", "t", meta()).unwrap();
        let r = g.add_relation("r").unwrap();
        g.freeze();
        assert_eq!(g.add_entity("B", "t", meta()), Err(KgError::Frozen));
        assert_eq!(g.add_triple(a, r, a), Err(KgError::Frozen));
        // lookups of existing labels still work
        assert_eq!(g.add_relation("r"), Ok(r));
    }

    #[test]
    fn id_display_roundtrip() {
        let id = EntityId::new(12);
        assert_eq!(id.to_string(), "e12");
        assert_eq!("e12".parse::<EntityId>().unwrap(), id);
        assert!("r12".parse::<EntityId>().is_err());
        assert_eq!(serde_json::to_string(&RelationId::new(3)).unwrap(), "\"r3\"");
    }
}
