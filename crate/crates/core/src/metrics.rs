//! Ranking metrics over the subtask rankings.
//!
//! Every test pair counts once. A pair whose source has no ranking, or whose
//! target is not among the ranking targets of the source's subtask, is a miss
//! for every metric.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::graph::EntityId;
use crate::matcher::Ranking;
use crate::set::EntitySet;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub hits1: f64,
    pub hits5: f64,
    pub mrr: f64,
    pub coverage_recall: f64,
    pub test_pairs: usize,
}

/// Rankings of one iteration, indexed by source entity.
#[derive(Clone, Debug, Default)]
pub struct RankingTable {
    targets: Vec<(usize, EntitySet)>,
    by_source: BTreeMap<EntityId, (usize, Ranking)>,
}

impl RankingTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers the ranking targets of one subtask; returns its slot.
    pub fn add_subtask(&mut self, group: usize, targets: EntitySet) -> usize {
        self.targets.push((group, targets));
        self.targets.len() - 1
    }

    pub fn add_ranking(&mut self, slot: usize, ranking: Ranking) {
        self.by_source.insert(ranking.source, (slot, ranking));
    }

    pub fn subtask_targets(&self, slot: usize) -> &EntitySet {
        &self.targets[slot].1
    }

    pub fn subtask_group(&self, slot: usize) -> usize {
        self.targets[slot].0
    }

    pub fn subtask_count(&self) -> usize {
        self.targets.len()
    }

    pub fn rankings(&self) -> impl Iterator<Item = (usize, &Ranking)> {
        self.by_source.values().map(|(slot, r)| (*slot, r))
    }

    pub fn ranking(&self, source: EntityId) -> Option<(&Ranking, &EntitySet)> {
        self.by_source.get(&source).map(|(slot, r)| (r, &self.targets[*slot].1))
    }

    pub fn rank_of(&self, source: EntityId, target: EntityId) -> Option<usize> {
        let (r, targets) = self.ranking(source)?;
        r.rank_of(target, targets)
    }

    /// Top-1 answer per ranked source.
    pub fn top1(&self) -> Vec<(EntityId, EntityId)> {
        self.by_source.values().filter_map(|(slot, r)| r.top1(&self.targets[*slot].1).map(|t| (r.source, t))).collect()
    }
}

pub fn evaluate(rankings: &RankingTable, test: &[(EntityId, EntityId)]) -> Metrics {
    if test.is_empty() {
        return Metrics::default();
    }
    let (mut h1, mut h5, mut rr, mut covered) = (0usize, 0usize, 0.0f64, 0usize);
    for &(s, t) in test {
        let Some(rank) = rankings.rank_of(s, t) else { continue };
        covered += 1;
        h1 += usize::from(rank <= 1);
        h5 += usize::from(rank <= 5);
        rr += 1.0 / rank as f64;
    }
    let n = test.len() as f64;
    Metrics {
        hits1: h1 as f64 / n,
        hits5: h5 as f64 / n,
        mrr: rr / n,
        coverage_recall: covered as f64 / n,
        test_pairs: test.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[(u32, &[u32])], targets: &[u32]) -> RankingTable {
        let mut t = RankingTable::new();
        let slot = t.add_subtask(0, targets.iter().copied().collect());
        for &(s, head) in rows {
            t.add_ranking(slot, Ranking { source: s, head: head.to_vec() });
        }
        t
    }

    #[test]
    fn ranks_one_and_three() {
        let t = table(&[(0, &[10, 11, 12]), (1, &[10, 11, 12])], &[10, 11, 12]);
        let m = evaluate(&t, &[(0, 10), (1, 12)]);
        assert_eq!(m.hits1, 0.5);
        assert_eq!(m.hits5, 1.0);
        assert!((m.mrr - (1.0 + 1.0 / 3.0) / 2.0).abs() < 1e-12);
        assert_eq!(m.coverage_recall, 1.0);
    }

    #[test]
    fn uncovered_pairs_score_nothing() {
        let t = table(&[(0, &[10])], &[10]);
        let m = evaluate(&t, &[(0, 99), (5, 10)]);
        assert_eq!(m, Metrics { test_pairs: 2, ..Metrics::default() });
    }

    #[test]
    fn perfect_rankings() {
        let t = table(&[(0, &[10]), (1, &[11])], &[10, 11]);
        let m = evaluate(&t, &[(0, 10), (1, 11)]);
        assert_eq!((m.hits1, m.hits5, m.mrr, m.coverage_recall), (1.0, 1.0, 1.0, 1.0));
    }
}
