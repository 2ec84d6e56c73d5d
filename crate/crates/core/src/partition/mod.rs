//! Balanced min-cut partitioning of the source graph.
//!
//! Multilevel scheme: heavy-edge matching coarsens the graph until it has at
//! most `max(100, 20 * n_parts)` vertices, greedy region growing seeds an
//! initial k-way split (best of several randomized trials), and each
//! uncoarsening level runs balance repair plus boundary FM refinement. A final
//! descent at the finest level guarantees that no single feasible vertex move
//! lowers the cut.
//!
//! Edges are unweighted: parallel relations between two entities count once.
//! Isolated entities do not influence the cut and are dealt round-robin to the
//! currently smallest part after the connected entities are placed.

mod coarsen;
mod initial;
mod refine;
mod wgraph;

use alloc::vec::Vec;
use core::cmp::Reverse;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{EntityId, KnowledgeGraph};
use crate::mapping::MappingSet;
use crate::set::EntitySet;
use refine::Refiner;
use wgraph::WGraph;

pub const DEFAULT_BALANCE_SLACK: f64 = 0.10;

const INIT_TRIALS: usize = 6;

/// One part of the source graph and the unmatched entities it contributes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub index: usize,
    pub entities: EntitySet,
    /// `entities` minus source anchors; equal to `entities` until
    /// [`Partition::with_seeds`] is applied.
    pub unmatched: EntitySet,
}

impl Partition {
    pub fn new(index: usize, entities: EntitySet) -> Self {
        Self { index, unmatched: entities.clone(), entities }
    }

    pub fn with_seeds(mut self, seeds: &MappingSet) -> Self {
        self.unmatched = group_unmatched(&self, seeds);
        self
    }
}

/// Largest part size allowed: `floor((1 + slack) * ceil(n / n_parts))`.
pub fn balance_cap(n: usize, n_parts: usize, balance_slack: f64) -> usize {
    let ideal = n.div_ceil(n_parts);
    let cap = libm::floor((1.0 + balance_slack) * ideal as f64 + 1e-9) as usize;
    cap.max(ideal)
}

/// Splits `kg` into `n_parts` disjoint, covering, size-balanced partitions.
pub fn partition_source(
    kg: &KnowledgeGraph,
    n_parts: usize,
    balance_slack: f64,
    rng_seed: u64,
) -> Result<Vec<Partition>> {
    let assignment = assign(kg, n_parts, balance_slack, rng_seed)?;
    partitions_from_assignment(kg, &assignment, n_parts)
}

/// Part index per entity.
pub fn assign(kg: &KnowledgeGraph, n_parts: usize, balance_slack: f64, rng_seed: u64) -> Result<Vec<u32>> {
    let n = kg.entity_count();
    if n_parts == 0 {
        return Err(Error::ZeroParts);
    }
    if n_parts > n {
        return Err(Error::TooManyParts { parts: n_parts, entities: n });
    }
    if !(balance_slack >= 0.0 && balance_slack.is_finite()) {
        return Err(Error::Config(alloc::format!("balance slack must be >= 0, got {balance_slack}")));
    }
    if n_parts == 1 {
        return Ok(alloc::vec![0; n]);
    }
    let cap = balance_cap(n, n_parts, balance_slack) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let connected: Vec<EntityId> = kg.entities().filter(|&e| kg.degree(e) > 0).collect();
    let mut assignment = alloc::vec![u32::MAX; n];
    let mut sizes = alloc::vec![0usize; n_parts];

    if connected.len() < n_parts {
        for (p, &e) in connected.iter().enumerate() {
            assignment[e as usize] = p as u32;
            sizes[p] += 1;
        }
    } else if !connected.is_empty() {
        let g = compact_graph(kg, &connected);
        let part = multilevel(&g, n_parts, cap, &mut rng);
        for (i, &e) in connected.iter().enumerate() {
            assignment[e as usize] = part[i];
            sizes[part[i] as usize] += 1;
        }
    }

    for slot in assignment.iter_mut().filter(|a| **a == u32::MAX) {
        let p = (0..n_parts).min_by_key(|&p| (sizes[p], p)).unwrap();
        *slot = p as u32;
        sizes[p] += 1;
    }
    Ok(assignment)
}

fn compact_graph(kg: &KnowledgeGraph, vertices: &[EntityId]) -> WGraph {
    let mut local = alloc::vec![u32::MAX; kg.entity_count()];
    for (i, &e) in vertices.iter().enumerate() {
        local[e as usize] = i as u32;
    }
    let mut xadj = Vec::with_capacity(vertices.len() + 1);
    xadj.push(0);
    let mut adj = Vec::new();
    for &e in vertices {
        adj.extend(kg.neighbors(e).iter().map(|&u| local[u as usize]));
        xadj.push(adj.len());
    }
    let m = adj.len();
    WGraph { xadj, adj, ewgt: alloc::vec![1; m], vwgt: alloc::vec![1; vertices.len()] }
}

fn multilevel(g: &WGraph, nparts: usize, cap: u64, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let threshold = (20 * nparts).max(100);
    let max_vwgt = ((cap / 4).max(1)).min(u32::MAX as u64) as u32;
    let levels = coarsen::coarsen(g, threshold, max_vwgt, rng);
    let coarsest = levels.last().map_or(g, |l| &l.graph);

    let mut best: Option<(u64, u64, Vec<u32>)> = None;
    for _ in 0..INIT_TRIALS {
        let part = initial::grow(coarsest, nparts, cap, rng);
        let mut r = Refiner::new(coarsest, part, nparts, cap);
        r.rebalance();
        r.fm();
        let overflow: u64 = coarsest.part_weights(&r.part, nparts).iter().map(|&w| w.saturating_sub(cap)).sum();
        let cut = coarsest.cut(&r.part);
        if best.as_ref().is_none_or(|(o, c, _)| (overflow, cut) < (*o, *c)) {
            best = Some((overflow, cut, r.part));
        }
    }
    let mut part = best.unwrap().2;

    for i in (0..levels.len()).rev() {
        let fine = if i == 0 { g } else { &levels[i - 1].graph };
        let projected: Vec<u32> = levels[i].cmap.iter().map(|&c| part[c as usize]).collect();
        let mut r = Refiner::new(fine, projected, nparts, cap);
        r.rebalance();
        r.fm();
        part = r.part;
    }

    let mut r = Refiner::new(g, part, nparts, cap);
    r.rebalance();
    r.descend();
    r.part
}

/// Builds partitions from a total assignment (built-in or read from a file).
pub fn partitions_from_assignment(kg: &KnowledgeGraph, assignment: &[u32], n_parts: usize) -> Result<Vec<Partition>> {
    if assignment.len() != kg.entity_count() {
        return Err(Error::AssignmentLength { got: assignment.len(), expected: kg.entity_count() });
    }
    let mut members: Vec<Vec<EntityId>> = alloc::vec![Vec::new(); n_parts];
    for (e, &p) in assignment.iter().enumerate() {
        let p = p as usize;
        if p >= n_parts {
            return Err(Error::PartOutOfRange { entity: e as EntityId, part: p, parts: n_parts });
        }
        members[p].push(e as EntityId);
    }
    Ok(members.into_iter().enumerate().map(|(i, ids)| Partition::new(i, EntitySet::from_sorted(ids))).collect())
}

/// Number of adjacency edges whose endpoints lie in different parts.
pub fn edge_cut(kg: &KnowledgeGraph, assignment: &[u32]) -> usize {
    kg.entities()
        .map(|u| kg.neighbors(u).iter().filter(|&&v| v > u && assignment[u as usize] != assignment[v as usize]).count())
        .sum()
}

/// Entities of the partition that are not seed source anchors.
pub fn group_unmatched(partition: &Partition, seeds: &MappingSet) -> EntitySet {
    partition.entities.iter().filter(|&e| !seeds.contains_source(e)).collect()
}

/// Assignment vector from partitions, mostly for diagnostics.
pub fn assignment_of(partitions: &[Partition], n: usize) -> Vec<u32> {
    let mut a = alloc::vec![0u32; n];
    for p in partitions {
        for e in &p.entities {
            a[e as usize] = p.index as u32;
        }
    }
    a
}

/// Sizes sorted descending, handy for logging balance.
pub fn part_sizes(partitions: &[Partition]) -> Vec<usize> {
    let mut s: Vec<usize> = partitions.iter().map(|p| p.entities.len()).collect();
    s.sort_by_key(|&x| Reverse(x));
    s
}
