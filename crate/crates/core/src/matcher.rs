//! Per-subtask similarity, the built-in matcher and candidate rankings.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::context::Subtask;
use crate::discovery::generate_pseudo_mappings;
use crate::graph::{EntityId, KnowledgeGraph};
use crate::set::EntitySet;

pub const DEFAULT_TOP_K_STORE: usize = 50;
pub const DEFAULT_ROUNDS: usize = 3;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("matcher failed: {0}")]
    Failed(String),
    #[error("matcher exited with status {0}")]
    Exit(i32),
    #[error("matcher timed out after {0} s")]
    Timeout(u64),
    #[error("malformed matcher response: {0}")]
    Protocol(String),
    #[error("matcher returned unknown entity {0:?}")]
    UnknownEntity(String),
}

/// Sparse top-k similarity rows keyed by source entity.
///
/// Rows are sorted by score descending, ties by ascending target id, and hold
/// at most `top_k_store` entries. Targets missing from a row score 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimilarityMatrix {
    rows: BTreeMap<EntityId, Vec<(EntityId, f64)>>,
    top_k_store: usize,
}

impl SimilarityMatrix {
    pub fn new(top_k_store: usize) -> Self {
        Self { rows: BTreeMap::new(), top_k_store }
    }

    pub fn from_rows(rows: impl IntoIterator<Item = (EntityId, Vec<(EntityId, f64)>)>, top_k_store: usize) -> Self {
        let mut m = Self::new(top_k_store);
        for (s, row) in rows {
            m.set_row(s, row);
        }
        m
    }

    pub fn set_row(&mut self, source: EntityId, mut row: Vec<(EntityId, f64)>) {
        row.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        row.truncate(self.top_k_store);
        self.rows.insert(source, row);
    }

    pub fn row(&self, source: EntityId) -> &[(EntityId, f64)] {
        self.rows.get(&source).map_or(&[], Vec::as_slice)
    }

    pub fn rows(&self) -> impl Iterator<Item = (EntityId, &[(EntityId, f64)])> {
        self.rows.iter().map(|(&s, r)| (s, r.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn top_k_store(&self) -> usize {
        self.top_k_store
    }

    pub fn score(&self, source: EntityId, target: EntityId) -> f64 {
        self.row(source).iter().find(|&&(t, _)| t == target).map_or(0.0, |&(_, s)| s)
    }
}

/// Everything a matcher sees for one subtask.
#[derive(Clone, Copy, Debug)]
pub struct MatchTask<'a> {
    pub subtask: &'a Subtask,
    pub kg_s: &'a KnowledgeGraph,
    pub kg_t: &'a KnowledgeGraph,
    pub iteration: u32,
}

/// The entity-alignment model run on every subtask.
pub trait Matcher: Sync {
    fn match_subtask(&self, task: &MatchTask<'_>) -> Result<SimilarityMatrix, MatchError>;
}

impl<M: Matcher + ?Sized> Matcher for &M {
    fn match_subtask(&self, task: &MatchTask<'_>) -> Result<SimilarityMatrix, MatchError> {
        (**self).match_subtask(task)
    }
}

/// Deterministic neighbourhood-overlap matcher with mutual-nearest bootstrapping.
///
/// `sim(s, t) = |{(s', t') aligned : s' ~ s, t' ~ t}| / sqrt((deg s + 1)(deg t + 1))`
/// with neighbourhoods and degrees taken inside the two context graphs. Each
/// round after the first adds mutual-nearest pairs scoring at least
/// `threshold` to the aligned set and rescores.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuiltinMatcher {
    /// Scoring passes, including the initial one.
    pub rounds: usize,
    pub threshold: f64,
    pub top_k_store: usize,
}

impl Default for BuiltinMatcher {
    fn default() -> Self {
        Self { rounds: DEFAULT_ROUNDS, threshold: DEFAULT_THRESHOLD, top_k_store: DEFAULT_TOP_K_STORE }
    }
}

impl Matcher for BuiltinMatcher {
    fn match_subtask(&self, task: &MatchTask<'_>) -> Result<SimilarityMatrix, MatchError> {
        Ok(builtin_match(task, self))
    }
}

pub fn builtin_match(task: &MatchTask<'_>, params: &BuiltinMatcher) -> SimilarityMatrix {
    let sub = task.subtask;
    if sub.seeds.is_empty() {
        log::warn!("subtask {} has no seed mappings; returning an empty similarity matrix", sub.group);
        return SimilarityMatrix::new(params.top_k_store);
    }
    let src_in = sub.source.entities.mask(task.kg_s.entity_count());
    let tgt_in = sub.target.entities.mask(task.kg_t.entity_count());
    let rankable = sub.ranking_targets.mask(task.kg_t.entity_count());

    let ctx_degree =
        |g: &KnowledgeGraph, mask: &[bool], e: EntityId| g.neighbors(e).iter().filter(|&&u| mask[u as usize]).count();
    let src_deg: HashMap<EntityId, usize> =
        sub.unmatched.iter().map(|s| (s, ctx_degree(task.kg_s, &src_in, s))).collect();

    let mut s_to_t: HashMap<EntityId, EntityId> = sub.seeds.iter().copied().collect();
    let mut aligned_t: EntitySet = sub.seeds.iter().map(|&(_, t)| t).collect();

    let mut counts = alloc::vec![0u32; task.kg_t.entity_count()];
    let mut touched: Vec<EntityId> = Vec::new();
    let mut matrix = SimilarityMatrix::new(params.top_k_store);
    for round in 0..params.rounds.max(1) {
        matrix = SimilarityMatrix::new(params.top_k_store);
        for s in &sub.unmatched {
            for &s2 in task.kg_s.neighbors(s) {
                if !src_in[s2 as usize] {
                    continue;
                }
                let Some(&t2) = s_to_t.get(&s2) else { continue };
                for &t in task.kg_t.neighbors(t2) {
                    if tgt_in[t as usize] && rankable[t as usize] {
                        if counts[t as usize] == 0 {
                            touched.push(t);
                        }
                        counts[t as usize] += 1;
                    }
                }
            }
            let ds = src_deg[&s] as f64 + 1.0;
            let row: Vec<(EntityId, f64)> = touched
                .iter()
                .map(|&t| {
                    let dt = ctx_degree(task.kg_t, &tgt_in, t) as f64 + 1.0;
                    (t, counts[t as usize] as f64 / libm::sqrt(ds * dt))
                })
                .collect();
            for &t in &touched {
                counts[t as usize] = 0;
            }
            touched.clear();
            matrix.set_row(s, row);
        }

        if round + 1 == params.rounds.max(1) {
            break;
        }
        let free_sources: EntitySet = sub.unmatched.iter().filter(|s| !s_to_t.contains_key(s)).collect();
        let free_targets = sub.ranking_targets.difference(&aligned_t);
        let provisional: Vec<_> = generate_pseudo_mappings(&matrix, &free_sources, &free_targets)
            .into_iter()
            .filter(|p| p.score >= params.threshold)
            .collect();
        if provisional.is_empty() {
            break;
        }
        for p in &provisional {
            s_to_t.insert(p.source, p.target);
        }
        aligned_t = aligned_t.union(&provisional.iter().map(|p| p.target).collect());
    }
    matrix
}

/// Full ranking of a subtask's ranking targets for one source, stored as the
/// scored head; the remaining targets follow in ascending id order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ranking {
    pub source: EntityId,
    pub head: Vec<EntityId>,
}

impl Ranking {
    /// 1-based position of `target`, `None` when it is not rankable.
    pub fn rank_of(&self, target: EntityId, targets: &EntitySet) -> Option<usize> {
        if !targets.contains(target) {
            return None;
        }
        if let Some(pos) = self.head.iter().position(|&t| t == target) {
            return Some(pos + 1);
        }
        let smaller = targets.partition_point(|&t| t < target);
        let smaller_in_head = self.head.iter().filter(|&&t| t < target).count();
        Some(self.head.len() + smaller - smaller_in_head + 1)
    }

    pub fn full(&self, targets: &EntitySet) -> Vec<EntityId> {
        let head: EntitySet = self.head.iter().copied().collect();
        let mut out = self.head.clone();
        out.extend(targets.iter().filter(|&t| !head.contains(t)));
        out
    }

    pub fn top1(&self, targets: &EntitySet) -> Option<EntityId> {
        self.head.first().copied().or_else(|| targets.first().copied())
    }
}

/// Rankings for every source over `targets`, from the matrix rows.
pub fn predict(sim: &SimilarityMatrix, sources: &EntitySet, targets: &EntitySet) -> Vec<Ranking> {
    sources
        .iter()
        .map(|s| Ranking {
            source: s,
            head: sim.row(s).iter().map(|&(t, _)| t).filter(|&t| targets.contains(t)).collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ids: &[u32]) -> EntitySet {
        ids.iter().copied().collect()
    }

    #[test]
    fn rows_are_sorted_and_truncated() {
        let m = SimilarityMatrix::from_rows([(0, alloc::vec![(3, 0.1), (2, 0.5), (1, 0.5), (4, 0.9)])], 3);
        assert_eq!(m.row(0), &[(4, 0.9), (1, 0.5), (2, 0.5)]);
        assert_eq!(m.score(0, 3), 0.0);
        assert!(m.row(7).is_empty());
    }

    #[test]
    fn ranking_completes_with_ascending_ids() {
        let m = SimilarityMatrix::from_rows([(0, alloc::vec![(2, 0.9), (1, 0.3)])], 50);
        let targets = set(&[1, 2, 3]);
        let r = &predict(&m, &set(&[0]), &targets)[0];
        assert_eq!(r.full(&targets), [2, 1, 3]);
        assert_eq!(r.rank_of(3, &targets), Some(3));
        assert_eq!(r.rank_of(2, &targets), Some(1));
        assert_eq!(r.rank_of(9, &targets), None);
    }

    #[test]
    fn empty_row_ranks_by_id() {
        let targets = set(&[5, 6, 7]);
        let r = &predict(&SimilarityMatrix::new(50), &set(&[0]), &targets)[0];
        assert_eq!(r.full(&targets), [5, 6, 7]);
        assert_eq!(r.top1(&targets), Some(5));
    }

    #[test]
    fn equal_scores_break_ties_by_id() {
        let m = SimilarityMatrix::from_rows([(0, alloc::vec![(7, 0.4), (6, 0.4)])], 50);
        let targets = set(&[5, 6, 7]);
        assert_eq!(predict(&m, &set(&[0]), &targets)[0].full(&targets), [6, 7, 5]);
    }

    #[test]
    fn rank_of_agrees_with_full_order() {
        let m = SimilarityMatrix::from_rows([(0, alloc::vec![(9, 0.9), (2, 0.5), (6, 0.2)])], 50);
        let targets = set(&[1, 2, 4, 6, 8, 9, 11]);
        let r = &predict(&m, &set(&[0]), &targets)[0];
        for (i, t) in r.full(&targets).into_iter().enumerate() {
            assert_eq!(r.rank_of(t, &targets), Some(i + 1));
        }
    }
}
