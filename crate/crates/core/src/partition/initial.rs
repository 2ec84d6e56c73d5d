//! Greedy region growing on the coarsest graph.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Reverse;

use rand::Rng;

use super::wgraph::WGraph;

const NONE: u32 = u32::MAX;

/// Grows parts `0..nparts-1` one at a time from random seeds, always absorbing
/// the frontier vertex most strongly connected to the growing region; the last
/// part takes whatever is left.
pub(crate) fn grow<R: Rng>(g: &WGraph, nparts: usize, cap: u64, rng: &mut R) -> Vec<u32> {
    let n = g.n();
    let total: u64 = g.vwgt.iter().map(|&w| w as u64).sum();
    let mut part = alloc::vec![NONE; n];
    let mut conn = alloc::vec![0u64; n];
    let mut remaining = n;

    for p in 0..nparts.saturating_sub(1) {
        let target = total / nparts as u64 + u64::from((p as u64) < total % nparts as u64);
        let mut weight = 0u64;
        let mut heap: BinaryHeap<(u64, Reverse<u32>)> = BinaryHeap::new();
        let mut touched: Vec<usize> = Vec::new();

        while weight < target && remaining > 0 {
            let next = loop {
                match heap.pop() {
                    Some((c, Reverse(v))) => {
                        let v = v as usize;
                        if part[v] == NONE && conn[v] == c && weight + g.vwgt[v] as u64 <= cap {
                            break Some(v);
                        }
                    }
                    None => break None,
                }
            };
            let v = match next {
                Some(v) => v,
                None => match random_free(&part, g, weight, cap, remaining, rng) {
                    Some(v) => v,
                    None => break,
                },
            };
            part[v] = p as u32;
            remaining -= 1;
            weight += g.vwgt[v] as u64;
            for (u, w) in g.edges(v) {
                if part[u] == NONE {
                    if conn[u] == 0 {
                        touched.push(u);
                    }
                    conn[u] += w as u64;
                    heap.push((conn[u], Reverse(u as u32)));
                }
            }
        }
        for u in touched {
            conn[u] = 0;
        }
    }

    let last = nparts as u32 - 1;
    for p in part.iter_mut().filter(|p| **p == NONE) {
        *p = last;
    }
    fill_empty_parts(g, &mut part, nparts);
    part
}

fn random_free<R: Rng>(
    part: &[u32],
    g: &WGraph,
    weight: u64,
    cap: u64,
    remaining: usize,
    rng: &mut R,
) -> Option<usize> {
    let free: Vec<usize> = (0..part.len()).filter(|&v| part[v] == NONE && weight + g.vwgt[v] as u64 <= cap).collect();
    if free.is_empty() || remaining == 0 {
        return None;
    }
    Some(free[rng.gen_range(0..free.len())])
}

/// Gives every empty part one vertex taken from the most populous part.
pub(crate) fn fill_empty_parts(g: &WGraph, part: &mut [u32], nparts: usize) {
    let mut count = alloc::vec![0usize; nparts];
    for &p in part.iter() {
        count[p as usize] += 1;
    }
    for empty in 0..nparts {
        if count[empty] > 0 {
            continue;
        }
        let donor = (0..nparts).max_by_key(|&p| (count[p], Reverse(p))).unwrap();
        if count[donor] < 2 {
            return;
        }
        // Cheapest vertex to detach from the donor: fewest edges into it.
        let v = (0..g.n())
            .filter(|&v| part[v] as usize == donor)
            .min_by_key(|&v| {
                let inside: u64 = g.edges(v).filter(|&(u, _)| part[u] as usize == donor).map(|(_, w)| w as u64).sum();
                (inside, v)
            })
            .unwrap();
        part[v] = empty as u32;
        count[donor] -= 1;
        count[empty] += 1;
    }
}
