//! Interned knowledge graphs with a symmetric, relation-blind adjacency.
//!
//! Directed triples are kept for export (manifests, external matchers). Every
//! algorithm in the crate works on the undirected adjacency: sorted, deduplicated
//! and free of self-entries, stored in compressed-row form.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use hashbrown::{HashMap, HashSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type EntityId = u32;
pub type RelationId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Source,
    Target,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Source => "source",
            Side::Target => "target",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

/// Bidirectional raw-string <-> dense-id map, ids in first-appearance order.
#[derive(Clone, Debug, Default)]
struct Interner {
    labels: Vec<String>,
    index: HashMap<String, u32>,
}

impl Interner {
    fn intern(&mut self, label: &str) -> u32 {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len() as u32;
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }

    fn get(&self, label: &str) -> Option<u32> {
        self.index.get(label).copied()
    }
}

/// Incremental constructor; see [`KnowledgeGraph`].
#[derive(Debug)]
pub struct KgBuilder {
    side: Side,
    entities: Interner,
    relations: Interner,
    triples: Vec<Triple>,
    seen: HashSet<Triple>,
}

impl KgBuilder {
    pub fn new(side: Side) -> Self {
        Self {
            side,
            entities: Interner::default(),
            relations: Interner::default(),
            triples: Vec::new(),
            seen: HashSet::new(),
        }
    }

    /// Interns an entity without adding any triple.
    pub fn add_entity(&mut self, label: &str) -> EntityId {
        self.entities.intern(label)
    }

    /// Adds a triple; returns `false` when it was already present.
    pub fn add_triple(&mut self, head: &str, relation: &str, tail: &str) -> bool {
        let triple = Triple {
            head: self.entities.intern(head),
            relation: self.relations.intern(relation),
            tail: self.entities.intern(tail),
        };
        if self.seen.insert(triple) {
            self.triples.push(triple);
            true
        } else {
            false
        }
    }

    pub fn build(self) -> Result<KnowledgeGraph> {
        let n = self.entities.labels.len();
        if n == 0 {
            return Err(Error::EmptyGraph(self.side));
        }
        let mut pairs: Vec<(EntityId, EntityId)> = Vec::with_capacity(self.triples.len() * 2);
        for t in &self.triples {
            if t.head != t.tail {
                pairs.push((t.head, t.tail));
                pairs.push((t.tail, t.head));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();

        let mut offsets = alloc::vec![0usize; n + 1];
        for &(u, _) in &pairs {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let neighbors = pairs.into_iter().map(|(_, v)| v).collect();

        Ok(KnowledgeGraph {
            side: self.side,
            entities: self.entities,
            relations: self.relations,
            triples: self.triples,
            offsets,
            neighbors,
        })
    }
}

/// An immutable knowledge graph.
#[derive(Clone, Debug)]
pub struct KnowledgeGraph {
    side: Side,
    entities: Interner,
    relations: Interner,
    triples: Vec<Triple>,
    offsets: Vec<usize>,
    neighbors: Vec<EntityId>,
}

impl KnowledgeGraph {
    /// Graph over entities labelled `"0".."n-1"` with one relation `"r"`.
    pub fn from_edges(side: Side, n: usize, edges: &[(EntityId, EntityId)]) -> Result<Self> {
        let mut b = KgBuilder::new(side);
        let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        for l in &labels {
            b.add_entity(l);
        }
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::InvalidEntity { side, id: u.max(v) });
            }
            b.add_triple(&labels[u as usize], "r", &labels[v as usize]);
        }
        b.build()
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn entity_count(&self) -> usize {
        self.entities.labels.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.labels.len()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn neighbors(&self, e: EntityId) -> &[EntityId] {
        let e = e as usize;
        &self.neighbors[self.offsets[e]..self.offsets[e + 1]]
    }

    pub fn degree(&self, e: EntityId) -> usize {
        let e = e as usize;
        self.offsets[e + 1] - self.offsets[e]
    }

    /// Number of undirected adjacency edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn entity_label(&self, e: EntityId) -> &str {
        &self.entities.labels[e as usize]
    }

    pub fn relation_label(&self, r: RelationId) -> &str {
        &self.relations.labels[r as usize]
    }

    pub fn entity_id(&self, label: &str) -> Option<EntityId> {
        self.entities.get(label)
    }

    pub fn entities(&self) -> impl Iterator<Item = EntityId> {
        0..self.entity_count() as EntityId
    }

    pub fn contains(&self, e: EntityId) -> bool {
        (e as usize) < self.entity_count()
    }

    /// Triples with both endpoints inside `members`.
    pub fn induced_triples(&self, members: &[bool]) -> Vec<Triple> {
        self.triples.iter().filter(|t| members[t.head as usize] && members[t.tail as usize]).copied().collect()
    }

    /// Raw-string triples in storage order; reloading them reproduces the graph.
    pub fn labelled_triples(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.triples
            .iter()
            .map(|t| (self.entity_label(t.head), self.relation_label(t.relation), self.entity_label(t.tail)))
    }
}
