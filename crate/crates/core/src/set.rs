use alloc::vec::Vec;
use core::ops::Deref;

use crate::graph::EntityId;

/// Sorted, deduplicated set of entity ids.
///
/// Iteration order is ascending id, which every selection routine in the
/// crate relies on for deterministic tie-breaking.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct EntitySet(Vec<EntityId>);

impl EntitySet {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    /// Wraps a vector that is already strictly ascending.
    pub fn from_sorted(ids: Vec<EntityId>) -> Self {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        Self(ids)
    }

    pub fn contains(&self, id: EntityId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn as_slice(&self) -> &[EntityId] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<EntityId> {
        self.0
    }

    /// Dense membership mask over `0..universe`.
    pub fn mask(&self, universe: usize) -> Vec<bool> {
        let mut mask = alloc::vec![false; universe];
        for &id in &self.0 {
            mask[id as usize] = true;
        }
        mask
    }

    pub fn union(&self, other: &EntitySet) -> EntitySet {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, b) = (self.0[i], other.0[j]);
            if a < b {
                out.push(a);
                i += 1;
            } else if b < a {
                out.push(b);
                j += 1;
            } else {
                out.push(a);
                i += 1;
                j += 1;
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        EntitySet(out)
    }

    pub fn difference(&self, other: &EntitySet) -> EntitySet {
        self.iter().filter(|&id| !other.contains(id)).collect()
    }

    pub fn intersection(&self, other: &EntitySet) -> EntitySet {
        self.iter().filter(|&id| other.contains(id)).collect()
    }

    pub fn is_subset(&self, other: &EntitySet) -> bool {
        self.iter().all(|id| other.contains(id))
    }

    pub fn iter(&self) -> impl Iterator<Item = EntityId> + '_ {
        self.0.iter().copied()
    }
}

impl Deref for EntitySet {
    type Target = [EntityId];

    fn deref(&self) -> &[EntityId] {
        &self.0
    }
}

impl FromIterator<EntityId> for EntitySet {
    fn from_iter<I: IntoIterator<Item = EntityId>>(iter: I) -> Self {
        let mut ids: Vec<EntityId> = iter.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        EntitySet(ids)
    }
}

impl<'a> IntoIterator for &'a EntitySet {
    type Item = EntityId;
    type IntoIter = core::iter::Copied<core::slice::Iter<'a, EntityId>>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter().copied()
    }
}
