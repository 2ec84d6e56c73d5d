mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use common::{connected, graph, rng};
use kgdiv_core::context::{ContextGraph, Subtask};
use kgdiv_core::discovery::generate_pseudo_mappings;
use kgdiv_core::matcher::{builtin_match, predict, BuiltinMatcher, MatchTask, SimilarityMatrix};
use kgdiv_core::{EntityId, EntitySet, KnowledgeGraph, Side};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn whole(kg: &KnowledgeGraph, anchors: &EntitySet, unmatched: &EntitySet) -> ContextGraph {
    ContextGraph {
        side: kg.side(),
        entities: kg.entities().collect(),
        anchors: anchors.clone(),
        unmatched: unmatched.clone(),
        induced_triples: kg.triples().to_vec(),
    }
}

/// A subtask over two whole graphs; every non-seed target is a candidate.
fn subtask(kg_s: &KnowledgeGraph, kg_t: &KnowledgeGraph, seeds: &[(EntityId, EntityId)]) -> Subtask {
    let src_anchors: EntitySet = seeds.iter().map(|&(s, _)| s).collect();
    let tgt_anchors: EntitySet = seeds.iter().map(|&(_, t)| t).collect();
    let unmatched: EntitySet = kg_s.entities().filter(|&e| !src_anchors.contains(e)).collect();
    let candidates: EntitySet = kg_t.entities().filter(|&e| !tgt_anchors.contains(e)).collect();
    Subtask {
        group: 0,
        iteration: 1,
        source: Arc::new(whole(kg_s, &src_anchors, &unmatched)),
        target: whole(kg_t, &tgt_anchors, &candidates),
        source_anchors: src_anchors,
        seeds: seeds.to_vec(),
        unmatched,
        ranking_targets: candidates.clone(),
        candidates,
    }
}

fn run(st: &Subtask, kg_s: &KnowledgeGraph, kg_t: &KnowledgeGraph, rounds: usize) -> SimilarityMatrix {
    let task = MatchTask { subtask: st, kg_s, kg_t, iteration: 1 };
    builtin_match(&task, &BuiltinMatcher { rounds, ..BuiltinMatcher::default() })
}

fn permuted(kg: &KnowledgeGraph, perm: &[EntityId]) -> KnowledgeGraph {
    let edges: Vec<_> = kg.triples().iter().map(|t| (perm[t.head as usize], perm[t.tail as usize])).collect();
    graph(Side::Target, kg.entity_count(), &edges)
}

#[test]
fn bootstrapping_reaches_entities_without_seeded_neighbours() {
    // Triangle 0-1-2 with pendants 3 (on 2) and 4 (on 1); 0 and 1 seeded.
    // Round 0: sim(2,2') = 2/sqrt(4*4) = 0.5, sim(4,4') = 1/sqrt(2*2) = 0.5,
    // sim(2,4') = sim(4,2') = 1/sqrt(4*2); entity 3 has no aligned neighbour.
    // Both 0.5 pairs are mutual, so round 1 aligns them and sim(3,3') = 0.5.
    let kg_s = graph(Side::Source, 5, &[(0, 1), (0, 2), (1, 2), (2, 3), (1, 4)]);
    let perm = [3, 0, 4, 1, 2];
    let kg_t = permuted(&kg_s, &perm);
    let st = subtask(&kg_s, &kg_t, &[(0, perm[0]), (1, perm[1])]);

    let first = run(&st, &kg_s, &kg_t, 1);
    assert_eq!(first.row(2), &[(perm[2], 0.5), (perm[4], 1.0 / 8f64.sqrt())]);
    assert!(first.row(3).is_empty());

    let boot = run(&st, &kg_s, &kg_t, 3);
    assert_eq!(boot.row(3), &[(perm[3], 0.5)]);
    let mut pairs: Vec<_> =
        generate_pseudo_mappings(&boot, &st.unmatched, &st.candidates).iter().map(|p| (p.source, p.target)).collect();
    pairs.sort_unstable();
    assert_eq!(pairs, [(2, perm[2]), (3, perm[3]), (4, perm[4])]);
}

#[test]
fn disjoint_neighbourhoods_give_empty_rows() {
    let kg_s = graph(Side::Source, 4, &[(0, 1), (2, 3)]);
    let kg_t = graph(Side::Target, 4, &[(0, 1), (2, 3)]);
    let mut st = subtask(&kg_s, &kg_t, &[(0, 0)]);
    st.ranking_targets = [2, 3].into_iter().collect();
    st.candidates = st.ranking_targets.clone();
    let sim = run(&st, &kg_s, &kg_t, 3);
    assert!(st.unmatched.iter().all(|s| sim.row(s).is_empty()));
}

#[test]
fn no_seeds_no_scores() {
    let kg = graph(Side::Source, 3, &[(0, 1), (1, 2)]);
    let sim = run(&subtask(&kg, &kg, &[]), &kg, &kg, 3);
    assert!(sim.is_empty());
}

#[test]
fn last_unseeded_pair_is_the_clear_winner() {
    let mut r = rng(17);
    let n = 40;
    let kg_s = graph(Side::Source, n, &connected(n, 60, &mut r));
    let mut perm: Vec<EntityId> = (0..n as EntityId).collect();
    perm.shuffle(&mut r);
    let kg_t = permuted(&kg_s, &perm);
    let last = 13;
    let seeds: Vec<_> = (0..n as EntityId).filter(|&e| e != last).map(|e| (e, perm[e as usize])).collect();
    let mut st = subtask(&kg_s, &kg_t, &seeds);
    // Rank every target so competitors actually appear in the row.
    st.ranking_targets = kg_t.entities().collect();
    let sim = run(&st, &kg_s, &kg_t, 1);
    let row = sim.row(last);
    assert_eq!(row[0].0, perm[last as usize]);
    assert!(row.len() == 1 || row[0].1 > row[1].1);
}

fn scores(sim: &SimilarityMatrix) -> BTreeMap<(EntityId, EntityId), u64> {
    sim.rows().flat_map(|(s, row)| row.iter().map(move |&(t, v)| ((s, t), v.to_bits()))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn relabelling_permutes_the_matrix(seed in any::<u64>(), n in 4usize..40) {
        let mut r = rng(seed);
        let kg_s = graph(Side::Source, n, &connected(n, n, &mut r));
        let mut tperm: Vec<EntityId> = (0..n as EntityId).collect();
        tperm.shuffle(&mut r);
        let kg_t = permuted(&kg_s, &tperm);
        let seeds: Vec<_> = (0..n as EntityId).filter(|e| e % 3 == 0).map(|e| (e, tperm[e as usize])).collect();
        let base = run(&subtask(&kg_s, &kg_t, &seeds), &kg_s, &kg_t, 3);
        prop_assert_eq!(&base, &run(&subtask(&kg_s, &kg_t, &seeds), &kg_s, &kg_t, 3));

        // Relabel both graphs and compare score maps through the relabelling.
        let mut ps: Vec<EntityId> = (0..n as EntityId).collect();
        ps.shuffle(&mut r);
        let mut pt: Vec<EntityId> = (0..n as EntityId).collect();
        pt.shuffle(&mut r);
        let kg_s2 = {
            let edges: Vec<_> = kg_s.triples().iter().map(|t| (ps[t.head as usize], ps[t.tail as usize])).collect();
            graph(Side::Source, n, &edges)
        };
        let kg_t2 = permuted(&kg_t, &pt);
        let seeds2: Vec<_> = seeds.iter().map(|&(s, t)| (ps[s as usize], pt[t as usize])).collect();
        let moved = run(&subtask(&kg_s2, &kg_t2, &seeds2), &kg_s2, &kg_t2, 3);
        let expected: BTreeMap<_, _> =
            scores(&base).into_iter().map(|((s, t), v)| ((ps[s as usize], pt[t as usize]), v)).collect();
        prop_assert_eq!(scores(&moved), expected);
    }

    #[test]
    fn rankings_are_total_orders(seed in any::<u64>(), n in 4usize..30) {
        let mut r = rng(seed);
        let kg = graph(Side::Source, n, &connected(n, n, &mut r));
        let seeds: Vec<_> = (0..n as EntityId).filter(|e| e % 4 == 0).map(|e| (e, e)).collect();
        let st = subtask(&kg, &kg, &seeds);
        let sim = run(&st, &kg, &kg, 3);
        for ranking in predict(&sim, &st.unmatched, &st.ranking_targets) {
            let mut full = ranking.full(&st.ranking_targets);
            prop_assert_eq!(full.len(), st.ranking_targets.len());
            full.sort_unstable();
            prop_assert_eq!(full.as_slice(), st.ranking_targets.as_slice());
        }
    }
}
