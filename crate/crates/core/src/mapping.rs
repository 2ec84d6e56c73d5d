//! Entity mappings between the source and the target graph.

use alloc::string::ToString;
use alloc::vec::Vec;

use hashbrown::HashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EntityId, KnowledgeGraph, Side};
use crate::set::EntitySet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Seed,
    Pseudo,
    Predicted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Mapping {
    pub source: EntityId,
    pub target: EntityId,
    pub provenance: Provenance,
}

/// A set of (source, target) pairs, one-to-one on the source side always and
/// on the target side for seed and pseudo pairs.
///
/// Predicted pairs may share a target: two subtasks can both pick the same
/// target entity as their top-1 answer.
#[derive(Clone, Debug, Default)]
pub struct MappingSet {
    pairs: Vec<Mapping>,
    by_source: HashMap<EntityId, usize>,
    by_target: HashMap<EntityId, usize>,
}

impl MappingSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (EntityId, EntityId)>, provenance: Provenance) -> Result<Self> {
        let mut set = Self::new();
        for (source, target) in pairs {
            set.insert(Mapping { source, target, provenance })?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, m: Mapping) -> Result<()> {
        if self.by_source.contains_key(&m.source) {
            return Err(Error::NotOneToOne { side: Side::Source, entity: m.source.to_string() });
        }
        let indexed = m.provenance != Provenance::Predicted;
        if indexed && self.by_target.contains_key(&m.target) {
            return Err(Error::NotOneToOne { side: Side::Target, entity: m.target.to_string() });
        }
        let idx = self.pairs.len();
        self.by_source.insert(m.source, idx);
        if indexed {
            self.by_target.insert(m.target, idx);
        }
        self.pairs.push(m);
        Ok(())
    }

    /// Inserts unless either endpoint is already taken; returns whether it was added.
    pub fn try_insert(&mut self, m: Mapping) -> bool {
        if self.by_source.contains_key(&m.source) || self.by_target.contains_key(&m.target) {
            return false;
        }
        self.insert(m).is_ok()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Mapping> {
        self.pairs.iter()
    }

    pub fn target_of(&self, source: EntityId) -> Option<EntityId> {
        self.by_source.get(&source).map(|&i| self.pairs[i].target)
    }

    pub fn source_of(&self, target: EntityId) -> Option<EntityId> {
        self.by_target.get(&target).map(|&i| self.pairs[i].source)
    }

    pub fn get_by_source(&self, source: EntityId) -> Option<&Mapping> {
        self.by_source.get(&source).map(|&i| &self.pairs[i])
    }

    pub fn contains_source(&self, source: EntityId) -> bool {
        self.by_source.contains_key(&source)
    }

    pub fn contains_target(&self, target: EntityId) -> bool {
        self.by_target.contains_key(&target)
    }

    /// Anchor entities on one side.
    pub fn anchors(&self, side: Side) -> EntitySet {
        self.pairs
            .iter()
            .map(|m| match side {
                Side::Source => m.source,
                Side::Target => m.target,
            })
            .collect()
    }

    pub fn anchor_mask(&self, side: Side, universe: usize) -> Vec<bool> {
        self.anchors(side).mask(universe)
    }

    /// Union of two one-to-one sets; pairs of `self` win every conflict.
    pub fn merged(&self, other: &MappingSet) -> MappingSet {
        let mut out = self.clone();
        for m in other.iter() {
            out.try_insert(*m);
        }
        out
    }

    /// Pairs whose source satisfies `keep`.
    pub fn filter_sources(&self, keep: impl Fn(EntityId) -> bool) -> MappingSet {
        let mut out = MappingSet::new();
        for m in self.pairs.iter().filter(|m| keep(m.source)) {
            out.insert(*m).expect("subset of a valid set stays valid");
        }
        out
    }

    /// Checks every id against the graphs it refers to.
    pub fn validate(&self, kg_s: &KnowledgeGraph, kg_t: &KnowledgeGraph) -> Result<()> {
        for m in &self.pairs {
            if !kg_s.contains(m.source) {
                return Err(Error::InvalidEntity { side: Side::Source, id: m.source });
            }
            if !kg_t.contains(m.target) {
                return Err(Error::InvalidEntity { side: Side::Target, id: m.target });
            }
        }
        Ok(())
    }
}

/// Entities of `kg` that are not anchors of `mappings` on `side`.
pub fn unmatched_entities(kg: &KnowledgeGraph, mappings: &MappingSet, side: Side) -> EntitySet {
    let anchors = mappings.anchor_mask(side, kg.entity_count());
    kg.entities().filter(|&e| !anchors[e as usize]).collect()
}
