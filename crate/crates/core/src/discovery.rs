//! Counterpart candidate discovery on the target graph.
//!
//! A target entity's weight combines locality (negative hop distance to the
//! group's target anchors) with a similarity feature accumulated from the
//! previous iteration's matcher output. The top-weighted non-anchor entities
//! become the group's counterpart candidates.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{EntityId, KnowledgeGraph};
use crate::mapping::MappingSet;
use crate::matcher::SimilarityMatrix;
use crate::partition::Partition;
use crate::set::EntitySet;

pub const DEFAULT_RADIUS: u32 = 6;
pub const DEFAULT_ALPHA: f64 = 0.9;
pub const DEFAULT_BETA: f64 = 1.0;
pub const DEFAULT_TOP_K: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CandidateScore {
    pub target: EntityId,
    /// Negative hop distance to the nearest local target anchor.
    pub w_loc: i32,
    /// Normalized similarity feature; 0 for never-scored entities.
    pub w_sim: f64,
    pub w_combined: f64,
}

/// Latest similarity feature per target entity for one group.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimilarityStore {
    values: BTreeMap<EntityId, (f64, u32)>,
}

impl SimilarityStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stored feature, or 0 for entities never scored.
    pub fn get(&self, target: EntityId) -> f64 {
        self.values.get(&target).map_or(0.0, |&(v, _)| v)
    }

    pub fn written_at(&self, target: EntityId) -> Option<u32> {
        self.values.get(&target).map(|&(_, it)| it)
    }

    /// Overwrites entries with the values of a newer iteration.
    pub fn update(&mut self, features: &BTreeMap<EntityId, f64>, iteration: u32) {
        for (&t, &v) in features {
            self.values.insert(t, (v, iteration));
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Mappings whose source entity lies inside the partition.
pub fn group_seed_mappings(partition: &Partition, mappings: &MappingSet) -> MappingSet {
    mappings.filter_sources(|s| partition.entities.contains(s))
}

/// Hop distances from the nearest anchor, up to a radius.
#[derive(Clone, Debug)]
pub struct LocalityWeights {
    dist: Vec<u32>,
    reached: Vec<EntityId>,
}

impl LocalityWeights {
    /// `-dist`, or `None` beyond the radius or unreachable.
    pub fn get(&self, e: EntityId) -> Option<i32> {
        match self.dist[e as usize] {
            u32::MAX => None,
            d => Some(-(d as i32)),
        }
    }

    /// Reached entities in BFS order.
    pub fn reached(&self) -> &[EntityId] {
        &self.reached
    }
}

/// Multi-source BFS from `target_anchors` over the undirected adjacency.
pub fn locality_weights(kg_t: &KnowledgeGraph, target_anchors: &EntitySet, radius: u32) -> Result<LocalityWeights> {
    if target_anchors.is_empty() {
        return Err(Error::NoLocalEvidence);
    }
    let mut dist = alloc::vec![u32::MAX; kg_t.entity_count()];
    let mut reached = Vec::new();
    let mut queue = VecDeque::new();
    for a in target_anchors {
        dist[a as usize] = 0;
        reached.push(a);
        queue.push_back(a);
    }
    while let Some(u) = queue.pop_front() {
        let d = dist[u as usize];
        if d >= radius {
            continue;
        }
        for &v in kg_t.neighbors(u) {
            if dist[v as usize] == u32::MAX {
                dist[v as usize] = d + 1;
                reached.push(v);
                queue.push_back(v);
            }
        }
    }
    Ok(LocalityWeights { dist, reached })
}

/// Per target in `pool`: sum of its `top_k` largest scores over the rows of
/// `group_sources`. Targets without any score are absent.
pub fn accumulate_similarity(
    sim: &SimilarityMatrix,
    group_sources: &EntitySet,
    pool: &EntitySet,
    top_k: usize,
) -> BTreeMap<EntityId, f64> {
    let mut scores: BTreeMap<EntityId, Vec<f64>> = BTreeMap::new();
    for s in group_sources {
        for &(t, score) in sim.row(s) {
            if pool.contains(t) {
                scores.entry(t).or_default().push(score);
            }
        }
    }
    scores
        .into_iter()
        .map(|(t, mut v)| {
            v.sort_by(|a, b| b.total_cmp(a));
            (t, v.iter().take(top_k).sum())
        })
        .collect()
}

/// Min-max scales the scored members of `pool` and subtracts `alpha`.
///
/// When all scored values coincide the scaled value is 0, so every entry
/// becomes `-alpha`. Entities absent from `raw` keep the implicit 0 of the
/// [`SimilarityStore`].
pub fn normalize_similarity(raw: &BTreeMap<EntityId, f64>, alpha: f64, pool: &EntitySet) -> BTreeMap<EntityId, f64> {
    let scored: Vec<(EntityId, f64)> = raw.iter().filter(|(t, _)| pool.contains(**t)).map(|(&t, &v)| (t, v)).collect();
    let Some(min) = scored.iter().map(|&(_, v)| v).reduce(f64::min) else {
        return BTreeMap::new();
    };
    let max = scored.iter().map(|&(_, v)| v).fold(min, f64::max);
    let span = max - min;
    scored
        .into_iter()
        .map(|(t, v)| {
            let scaled = if span > 0.0 { (v - min) / span } else { 0.0 };
            (t, scaled - alpha)
        })
        .collect()
}

/// Combined weights for every reached entity.
///
/// Without a store (first iteration) the combined weight is the locality
/// weight alone.
pub fn candidate_scores(locality: &LocalityWeights, store: Option<&SimilarityStore>, beta: f64) -> Vec<CandidateScore> {
    locality
        .reached()
        .iter()
        .map(|&t| {
            let w_loc = locality.get(t).expect("reached entities have a distance");
            let w_sim = store.map_or(0.0, |s| s.get(t));
            let w_combined = match store {
                Some(_) => w_loc as f64 + beta * w_sim,
                None => w_loc as f64,
            };
            CandidateScore { target: t, w_loc, w_sim, w_combined }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSelection {
    pub candidates: EntitySet,
    /// Slots filled with unreached entities in ascending id order.
    pub padded: usize,
    /// True when fewer than `quota` entities were available.
    pub short: bool,
}

/// The `quota` highest-weighted entities outside `exclude`, ties by ascending
/// id, topped up with unreached entities in ascending id order.
pub fn select_candidates(
    kg_t: &KnowledgeGraph,
    weights: &[CandidateScore],
    quota: usize,
    exclude: &EntitySet,
) -> CandidateSelection {
    let mut ranked: Vec<&CandidateScore> = weights.iter().filter(|w| !exclude.contains(w.target)).collect();
    ranked.sort_by(|a, b| b.w_combined.total_cmp(&a.w_combined).then(a.target.cmp(&b.target)));
    let mut chosen: Vec<EntityId> = ranked.iter().take(quota).map(|w| w.target).collect();

    let mut padded = 0;
    if chosen.len() < quota {
        let scored: EntitySet = weights.iter().map(|w| w.target).collect();
        for t in kg_t.entities() {
            if chosen.len() == quota {
                break;
            }
            if !exclude.contains(t) && !scored.contains(t) {
                chosen.push(t);
                padded += 1;
            }
        }
    }
    let short = chosen.len() < quota;
    if short {
        log::warn!("candidate quota {quota} exceeds the {} available target entities", chosen.len());
    }
    CandidateSelection { candidates: chosen.into_iter().collect(), padded, short }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredPair {
    pub source: EntityId,
    pub target: EntityId,
    pub score: f64,
}

/// Mutual nearest neighbours between `sources` and `candidates`.
///
/// A pair qualifies when the target is the strict maximum of the source's row
/// and the source is the strict maximum of the target's column; exact ties
/// disqualify, and so do zero scores. Columns are read from the stored
/// (truncated) rows.
pub fn generate_pseudo_mappings(
    sim: &SimilarityMatrix,
    sources: &EntitySet,
    candidates: &EntitySet,
) -> Vec<ScoredPair> {
    let mut row_best: Vec<ScoredPair> = Vec::new();
    let mut col_best: BTreeMap<EntityId, (f64, Option<EntityId>)> = BTreeMap::new();
    for s in sources {
        let mut best: Option<(EntityId, f64)> = None;
        let mut tied = false;
        for &(t, score) in sim.row(s) {
            if !candidates.contains(t) || score <= 0.0 {
                continue;
            }
            match best {
                None => best = Some((t, score)),
                Some((_, b)) if score > b => {
                    best = Some((t, score));
                    tied = false;
                }
                Some((_, b)) if score == b => tied = true,
                _ => {}
            }
            let col = col_best.entry(t).or_insert((f64::NEG_INFINITY, None));
            if score > col.0 {
                *col = (score, Some(s));
            } else if score == col.0 {
                col.1 = None;
            }
        }
        if let (Some((t, score)), false) = (best, tied) {
            row_best.push(ScoredPair { source: s, target: t, score });
        }
    }
    row_best.into_iter().filter(|p| col_best.get(&p.target).and_then(|c| c.1) == Some(p.source)).collect()
}
