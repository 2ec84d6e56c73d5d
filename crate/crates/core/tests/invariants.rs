mod common;

use common::{graph, rng};
use kgdiv_core::mapping::unmatched_entities;
use kgdiv_core::matcher::Ranking;
use kgdiv_core::metrics::{evaluate, RankingTable};
use kgdiv_core::{EntityId, EntitySet, KgBuilder, MappingSet, Provenance, Side};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

proptest! {
    #[test]
    fn adjacency_is_sorted_symmetric_and_loop_free(
        n in 1usize..40,
        edges in prop::collection::vec((0u32..40, 0u32..40), 0..120),
    ) {
        let edges: Vec<_> = edges.into_iter().filter(|&(a, b)| (a as usize) < n && (b as usize) < n).collect();
        let kg = graph(Side::Source, n, &edges);
        let mut total = 0;
        for u in kg.entities() {
            let adj = kg.neighbors(u);
            prop_assert!(adj.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(!adj.contains(&u));
            for &v in adj {
                prop_assert!(kg.neighbors(v).binary_search(&u).is_ok());
            }
            total += adj.len();
        }
        prop_assert_eq!(total % 2, 0);
    }

    #[test]
    fn unmatched_and_anchors_partition_the_entities(n in 1usize..60, seed in any::<u64>()) {
        let mut r = rng(seed);
        let kg = graph(Side::Source, n, &[]);
        let mut targets: Vec<EntityId> = (0..n as EntityId).collect();
        targets.shuffle(&mut r);
        let k = r.gen_range(0..=n);
        let m = MappingSet::from_pairs((0..k as EntityId).map(|s| (s, targets[s as usize])), Provenance::Seed).unwrap();
        let unmatched = unmatched_entities(&kg, &m, Side::Source);
        let anchors = m.anchors(Side::Source);
        prop_assert!(unmatched.intersection(&anchors).is_empty());
        prop_assert_eq!(unmatched.union(&anchors).len(), n);
    }

    #[test]
    fn interning_is_stable_under_reload(lines in prop::collection::vec((0u8..12, 0u8..3, 0u8..12), 1..40)) {
        let build = |rows: &[(String, String, String)]| {
            let mut b = KgBuilder::new(Side::Source);
            for (h, r, t) in rows {
                b.add_triple(h, r, t);
            }
            b.build().unwrap()
        };
        let rows: Vec<_> = lines.iter().map(|&(h, r, t)| (format!("e{h}"), format!("r{r}"), format!("e{t}"))).collect();
        let kg = build(&rows);
        let dumped: Vec<_> = kg.labelled_triples().map(|(h, r, t)| (h.to_owned(), r.to_owned(), t.to_owned())).collect();
        let again = build(&dumped);
        prop_assert_eq!(kg.triples(), again.triples());
        prop_assert_eq!(kg.entity_count(), again.entity_count());
        for e in kg.entities() {
            prop_assert_eq!(kg.entity_label(e), again.entity_label(e));
            prop_assert_eq!(kg.neighbors(e), again.neighbors(e));
        }
    }

    #[test]
    fn metric_bounds_hold(seed in any::<u64>(), sources in 1usize..30, targets in 1usize..20) {
        let mut r = rng(seed);
        let mut table = RankingTable::new();
        let pool: EntitySet = (0..targets as EntityId).map(|t| 1000 + t).collect();
        let slot = table.add_subtask(0, pool.clone());
        let mut test = Vec::new();
        for s in 0..sources as EntityId {
            if r.gen_bool(0.8) {
                let mut head: Vec<EntityId> = pool.iter().collect();
                head.shuffle(&mut r);
                head.truncate(r.gen_range(0..=targets));
                table.add_ranking(slot, Ranking { source: s, head });
            }
            // Some ground truths fall outside the pool.
            test.push((s, 1000 + r.gen_range(0..targets as EntityId + 3)));
        }
        let m = evaluate(&table, &test);
        prop_assert!(m.hits1 <= m.hits5 && m.hits5 <= m.coverage_recall && m.coverage_recall <= 1.0);
        prop_assert!(m.hits1 <= m.mrr && m.mrr <= 1.0);
    }
}
