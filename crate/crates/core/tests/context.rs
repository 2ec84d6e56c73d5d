mod common;

use common::{connected, graph, rng};
use kgdiv_core::context::{build_source_context, build_target_context};
use kgdiv_core::evidence::{informativeness, EvidenceConfig, EvidenceRefs, View};
use kgdiv_core::{EntityId, EntitySet, Side};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn contexts_fit_the_budget_and_keep_protected_entities(
        seed in any::<u64>(),
        n in 3usize..70,
        budget_frac in 0.0f64..1.2,
    ) {
        let mut r = rng(seed);
        let extra = r.gen_range(0..2 * n);
        let kg = graph(Side::Source, n, &connected(n, extra, &mut r));
        let ids: Vec<EntityId> = (0..n as EntityId).collect();
        let anchors: EntitySet = ids.iter().copied().filter(|_| r.gen_bool(0.3)).collect();
        let free: Vec<EntityId> = ids.iter().copied().filter(|&e| !anchors.contains(e)).collect();
        let group: EntitySet = free.iter().copied().filter(|_| r.gen_bool(0.4)).collect();
        let budget = group.len() + ((n - group.len()) as f64 * budget_frac) as usize;
        let config = EvidenceConfig::default();

        let src = build_source_context(&kg, &group, &anchors, budget, &config).unwrap();
        prop_assert_eq!(src.len(), budget.min(n));
        prop_assert!(group.is_subset(&src.entities));
        prop_assert_eq!(&src.unmatched, &group);
        prop_assert!(src.anchors.is_subset(&anchors));

        let tgt = build_target_context(&kg, &group, &anchors, budget.max(group.len() + anchors.len()), &config).unwrap();
        prop_assert!(group.is_subset(&tgt.entities));
        prop_assert!(anchors.is_subset(&tgt.entities));
        prop_assert!(tgt.len() <= budget.max(group.len() + anchors.len()));

        let mask = src.entities.mask(n);
        for t in &src.induced_triples {
            prop_assert!(mask[t.head as usize] && mask[t.tail as usize]);
        }
    }
}

#[test]
fn built_source_context_beats_random_contexts() {
    let config = EvidenceConfig::default();
    let (mut trials, mut wins) = (0, 0);
    for seed in 0..30u64 {
        let mut r = rng(900 + seed);
        let n = r.gen_range(20..=50);
        let kg = graph(Side::Source, n, &connected(n, n, &mut r));
        let ids: Vec<EntityId> = (0..n as EntityId).collect();
        let anchors: EntitySet = ids.iter().copied().filter(|_| r.gen_bool(0.3)).collect();
        let group: EntitySet = ids.iter().copied().filter(|&e| !anchors.contains(e) && r.gen_bool(0.3)).collect();
        if group.is_empty() || anchors.is_empty() {
            continue;
        }
        let budget = group.len() + (n - group.len()) / 3;
        let built = build_source_context(&kg, &group, &anchors, budget, &config).unwrap();
        let refs = EvidenceRefs::compute(&kg, &anchors.mask(n), config);
        let unmatched = group.as_slice();
        let score = informativeness(&View::from_entities(&kg, built.entities.iter()), unmatched, &refs);

        let others: Vec<EntityId> = ids.iter().copied().filter(|&e| !group.contains(e)).collect();
        for _ in 0..100 {
            let mut pick = others.clone();
            pick.shuffle(&mut r);
            let members = group.iter().chain(pick[..budget - group.len()].iter().copied());
            let random = informativeness(&View::from_entities(&kg, members), unmatched, &refs);
            trials += 1;
            wins += usize::from(score >= random - 1e-12);
        }
    }
    let rate = wins as f64 / trials as f64;
    assert!(rate >= 0.95, "built context won {wins} of {trials}");
}
