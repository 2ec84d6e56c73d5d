mod common;

use common::{gnp, graph, rng};
use kgdiv_core::partition::{assign, balance_cap, edge_cut, partition_source, DEFAULT_BALANCE_SLACK};
use kgdiv_core::{EntityId, Side};
use proptest::prelude::*;
use rand::seq::SliceRandom;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partitions_cover_and_respect_the_cap(
        n in 1usize..120,
        extra in 0usize..200,
        parts in 1usize..9,
        seed in any::<u64>(),
    ) {
        prop_assume!(parts <= n);
        let mut r = rng(seed);
        let edges: Vec<(EntityId, EntityId)> = (0..extra)
            .map(|_| (rand::Rng::gen_range(&mut r, 0..n as EntityId), rand::Rng::gen_range(&mut r, 0..n as EntityId)))
            .collect();
        let kg = graph(Side::Source, n, &edges);
        let ps = partition_source(&kg, parts, DEFAULT_BALANCE_SLACK, seed).unwrap();
        prop_assert_eq!(ps.len(), parts);
        let cap = balance_cap(n, parts, DEFAULT_BALANCE_SLACK);
        let mut seen = vec![false; n];
        for p in &ps {
            prop_assert!(!p.entities.is_empty());
            prop_assert!(p.entities.len() <= cap, "part of {} over cap {}", p.entities.len(), cap);
            for e in &p.entities {
                prop_assert!(!seen[e as usize]);
                seen[e as usize] = true;
            }
        }
        prop_assert!(seen.iter().all(|&s| s));
    }
}

#[test]
fn same_seed_same_assignment() {
    let mut r = rng(5);
    let kg = graph(Side::Source, 400, &gnp(400, 0.02, &mut r));
    assert_eq!(assign(&kg, 6, 0.1, 11).unwrap(), assign(&kg, 6, 0.1, 11).unwrap());
}

#[test]
fn beats_random_balanced_split_on_sparse_random_graphs() {
    for trial in 0..5 {
        let mut r = rng(100 + trial);
        let n = 600;
        let kg = graph(Side::Source, n, &gnp(n, 0.01, &mut r));
        let a = assign(&kg, 4, 0.1, trial).unwrap();
        let mut random: Vec<u32> = (0..n).map(|i| (i % 4) as u32).collect();
        random.shuffle(&mut r);
        assert!(edge_cut(&kg, &a) < edge_cut(&kg, &random), "trial {trial}");
    }
}

#[test]
fn grid_split_in_two_is_near_optimal() {
    // 20x20 grid: the best balanced bisection cuts 20 edges.
    let side = 20u32;
    let mut edges = Vec::new();
    for y in 0..side {
        for x in 0..side {
            let v = y * side + x;
            if x + 1 < side {
                edges.push((v, v + 1));
            }
            if y + 1 < side {
                edges.push((v, v + side));
            }
        }
    }
    let kg = graph(Side::Source, (side * side) as usize, &edges);
    let a = assign(&kg, 2, 0.1, 3).unwrap();
    let cut = edge_cut(&kg, &a);
    assert!(cut <= 30, "cut {cut}");
}
