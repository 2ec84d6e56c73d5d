//! Balance repair and boundary Fiduccia–Mattheyses refinement for k-way cuts.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Reverse;

use super::wgraph::WGraph;

const MAX_PASSES: usize = 10;

/// Mutable refinement state: assignment plus part weights and a scratch
/// connectivity table.
pub(crate) struct Refiner<'g> {
    g: &'g WGraph,
    pub part: Vec<u32>,
    pw: Vec<u64>,
    pcount: Vec<usize>,
    cap: u64,
    conn: Vec<i64>,
    touched: Vec<usize>,
}

impl<'g> Refiner<'g> {
    pub fn new(g: &'g WGraph, part: Vec<u32>, nparts: usize, cap: u64) -> Self {
        let pw = g.part_weights(&part, nparts);
        let mut pcount = alloc::vec![0usize; nparts];
        for &p in &part {
            pcount[p as usize] += 1;
        }
        Self { g, part, pw, pcount, cap, conn: alloc::vec![0; nparts], touched: Vec::new() }
    }

    fn nparts(&self) -> usize {
        self.pw.len()
    }

    /// Connection weight of `v` to every part it touches; result in `self.conn`.
    fn load_conn(&mut self, v: usize) {
        for &p in &self.touched {
            self.conn[p] = 0;
        }
        self.touched.clear();
        for (u, w) in self.g.edges(v) {
            let p = self.part[u] as usize;
            if self.conn[p] == 0 {
                self.touched.push(p);
            }
            self.conn[p] += w as i64;
        }
    }

    /// Best feasible move of `v` to an adjacent part: `(part, gain)`.
    ///
    /// A move is feasible when the destination stays within the cap and the
    /// origin keeps at least one vertex.
    fn best_move(&mut self, v: usize) -> Option<(usize, i64)> {
        let from = self.part[v] as usize;
        if self.pcount[from] <= 1 {
            return None;
        }
        self.load_conn(v);
        let own = self.conn[from];
        let vw = self.g.vwgt[v] as u64;
        let mut best: Option<(usize, i64)> = None;
        for &q in &self.touched {
            if q == from || self.pw[q] + vw > self.cap {
                continue;
            }
            let gain = self.conn[q] - own;
            let better = match best {
                None => true,
                Some((bq, bg)) => gain > bg || (gain == bg && (self.pw[q], q) < (self.pw[bq], bq)),
            };
            if better {
                best = Some((q, gain));
            }
        }
        best
    }

    fn apply(&mut self, v: usize, to: usize) {
        let from = self.part[v] as usize;
        let vw = self.g.vwgt[v] as u64;
        self.pw[from] -= vw;
        self.pw[to] += vw;
        self.pcount[from] -= 1;
        self.pcount[to] += 1;
        self.part[v] = to as u32;
    }

    fn is_boundary(&self, v: usize) -> bool {
        let p = self.part[v];
        self.g.edges(v).any(|(u, _)| self.part[u] != p)
    }

    /// Moves vertices out of over-cap parts, cheapest cut damage first.
    ///
    /// Coarse vertices may be too heavy to fit anywhere; the finest level always
    /// succeeds because every vertex weighs 1 and `nparts * cap >= n`.
    pub fn rebalance(&mut self) {
        loop {
            let Some(over) = (0..self.nparts()).filter(|&p| self.pw[p] > self.cap).max_by_key(|&p| self.pw[p]) else {
                return;
            };
            let mut candidates: Vec<(i64, usize, usize)> = Vec::new();
            for v in 0..self.g.n() {
                if self.part[v] as usize != over {
                    continue;
                }
                self.load_conn(v);
                let own = self.conn[over];
                let vw = self.g.vwgt[v] as u64;
                let dest = (0..self.nparts())
                    .filter(|&q| q != over && self.pw[q] + vw <= self.cap)
                    .max_by_key(|&q| (self.conn[q], Reverse(self.pw[q]), Reverse(q)));
                if let Some(q) = dest {
                    candidates.push((self.conn[q] - own, v, q));
                }
            }
            if candidates.is_empty() {
                return;
            }
            candidates.sort_by_key(|&(gain, v, _)| (Reverse(gain), v));
            let mut moved = false;
            for (_, v, q) in candidates {
                if self.pw[over] <= self.cap {
                    break;
                }
                let vw = self.g.vwgt[v] as u64;
                if self.pw[q] + vw <= self.cap && self.pcount[over] > 1 {
                    self.apply(v, q);
                    moved = true;
                }
            }
            if !moved {
                return;
            }
        }
    }

    /// Repeated FM passes until one yields no gain.
    pub fn fm(&mut self) {
        for _ in 0..MAX_PASSES {
            if self.fm_pass() == 0 {
                break;
            }
        }
    }

    /// One FM pass: moves every boundary vertex at most once in best-gain
    /// order, negative gains included, then rolls back to the best prefix.
    fn fm_pass(&mut self) -> i64 {
        let n = self.g.n();
        let limit = (n / 50).max(64);
        let mut locked = alloc::vec![false; n];
        let mut stamp = alloc::vec![0u32; n];
        let mut heap: BinaryHeap<(i64, Reverse<u32>, u32)> = BinaryHeap::new();
        for v in 0..n {
            if self.is_boundary(v) {
                if let Some((_, gain)) = self.best_move(v) {
                    heap.push((gain, Reverse(v as u32), 0));
                }
            }
        }

        let mut moves: Vec<(usize, usize)> = Vec::new();
        let (mut cum, mut best, mut best_len) = (0i64, 0i64, 0usize);
        while let Some((gain, Reverse(v), st)) = heap.pop() {
            let v = v as usize;
            if locked[v] || st != stamp[v] {
                continue;
            }
            let Some((to, now)) = self.best_move(v) else { continue };
            if now != gain {
                stamp[v] += 1;
                heap.push((now, Reverse(v as u32), stamp[v]));
                continue;
            }
            let from = self.part[v] as usize;
            self.apply(v, to);
            locked[v] = true;
            moves.push((v, from));
            cum += gain;
            if cum > best {
                best = cum;
                best_len = moves.len();
            } else if moves.len() - best_len > limit {
                break;
            }
            for i in self.g.xadj[v]..self.g.xadj[v + 1] {
                let u = self.g.adj[i] as usize;
                if locked[u] {
                    continue;
                }
                stamp[u] += 1;
                if let Some((_, g)) = self.best_move(u) {
                    heap.push((g, Reverse(u as u32), stamp[u]));
                }
            }
        }
        for &(v, from) in moves[best_len..].iter().rev() {
            self.apply(v, from);
        }
        best
    }

    /// Applies strictly improving single moves until none is left, leaving a
    /// cut that is locally minimal under feasible single-vertex moves.
    pub fn descend(&mut self) {
        loop {
            let mut changed = false;
            for v in 0..self.g.n() {
                if let Some((to, gain)) = self.best_move(v) {
                    if gain > 0 {
                        self.apply(v, to);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }
}

/// Whether some feasible single-vertex move would lower the cut.
#[cfg(test)]
pub(crate) fn has_improving_move(g: &WGraph, part: &[u32], nparts: usize, cap: u64) -> bool {
    let mut r = Refiner::new(g, part.to_vec(), nparts, cap);
    (0..g.n()).any(|v| r.best_move(v).is_some_and(|(_, gain)| gain > 0))
}
