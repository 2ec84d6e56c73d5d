#![allow(dead_code)]

use kgdiv_core::pipeline::Dataset;
use kgdiv_core::{EntityId, KnowledgeGraph, MappingSet, Provenance, Side};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// G(n, p) edge list.
pub fn gnp(n: usize, p: f64, rng: &mut impl Rng) -> Vec<(EntityId, EntityId)> {
    let mut edges = Vec::new();
    for u in 0..n as EntityId {
        for v in u + 1..n as EntityId {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    edges
}

/// Random connected graph: a random tree plus `extra` random edges.
pub fn connected(n: usize, extra: usize, rng: &mut impl Rng) -> Vec<(EntityId, EntityId)> {
    let mut edges: Vec<(EntityId, EntityId)> =
        (1..n).map(|i| (rng.gen_range(0..i) as EntityId, i as EntityId)).collect();
    for _ in 0..extra {
        let (a, b) = (rng.gen_range(0..n) as EntityId, rng.gen_range(0..n) as EntityId);
        if a != b {
            edges.push((a, b));
        }
    }
    edges
}

pub fn graph(side: Side, n: usize, edges: &[(EntityId, EntityId)]) -> KnowledgeGraph {
    KnowledgeGraph::from_edges(side, n, edges).unwrap()
}

/// Source graph and a copy with permuted ids; `seed_fraction` of the planted
/// pairs become seeds, the rest test pairs.
pub fn planted(n: usize, extra: usize, seed_fraction: f64, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let edges = connected(n, extra, &mut r);
    let mut perm: Vec<EntityId> = (0..n as EntityId).collect();
    perm.shuffle(&mut r);
    let t_edges: Vec<_> = edges.iter().map(|&(a, b)| (perm[a as usize], perm[b as usize])).collect();
    let kg_s = graph(Side::Source, n, &edges);
    let kg_t = graph(Side::Target, n, &t_edges);
    let mut pairs: Vec<(EntityId, EntityId)> = (0..n as EntityId).map(|e| (e, perm[e as usize])).collect();
    pairs.shuffle(&mut r);
    let k = (n as f64 * seed_fraction).round() as usize;
    let seeds = MappingSet::from_pairs(pairs[..k].iter().copied(), Provenance::Seed).unwrap();
    let mut test = pairs[k..].to_vec();
    test.sort_unstable();
    Dataset { kg_s, kg_t, seeds, test }
}

/// Number of walks of exactly `len` steps from `start` to a vertex in
/// `targets`, on the subgraph induced by `present` with a self loop added at
/// every vertex. Plain recursion; keep graphs and lengths small.
pub fn walks_to(kg: &KnowledgeGraph, present: &[bool], targets: &[bool], start: EntityId, len: usize) -> u128 {
    if !present[start as usize] {
        return 0;
    }
    if len == 0 {
        return u128::from(targets[start as usize]);
    }
    let mut total = walks_to(kg, present, targets, start, len - 1);
    for &v in kg.neighbors(start) {
        total += walks_to(kg, present, targets, v, len - 1);
    }
    total
}
