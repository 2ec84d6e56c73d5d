//! Heavy-edge matching contraction.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use super::wgraph::WGraph;

pub(crate) struct Level {
    pub graph: WGraph,
    /// Fine vertex -> coarse vertex of `graph`.
    pub cmap: Vec<u32>,
}

/// Contracts until at most `threshold` vertices remain or a round stalls.
///
/// `levels[0].cmap` maps the input graph onto `levels[0].graph`, and so on.
pub(crate) fn coarsen<R: Rng>(g: &WGraph, threshold: usize, max_vwgt: u32, rng: &mut R) -> Vec<Level> {
    let mut levels: Vec<Level> = Vec::new();
    loop {
        let current = levels.last().map_or(g, |l| &l.graph);
        if current.n() <= threshold {
            break;
        }
        let level = coarsen_once(current, max_vwgt, rng);
        // Fewer than 5% of vertices merged: matching has run dry.
        if level.graph.n() * 20 > current.n() * 19 {
            break;
        }
        levels.push(level);
    }
    levels
}

fn coarsen_once<R: Rng>(g: &WGraph, max_vwgt: u32, rng: &mut R) -> Level {
    const UNMATCHED: u32 = u32::MAX;
    let n = g.n();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(rng);

    let mut mate = alloc::vec![UNMATCHED; n];
    for &u in &order {
        let u = u as usize;
        if mate[u] != UNMATCHED {
            continue;
        }
        let mut best: Option<(usize, u32)> = None;
        for (v, w) in g.edges(u) {
            if mate[v] != UNMATCHED || g.vwgt[u] + g.vwgt[v] > max_vwgt {
                continue;
            }
            if best.is_none_or(|(_, bw)| w > bw) {
                best = Some((v, w));
            }
        }
        match best {
            Some((v, _)) => {
                mate[u] = v as u32;
                mate[v] = u as u32;
            }
            None => mate[u] = u as u32,
        }
    }

    let mut cmap = alloc::vec![UNMATCHED; n];
    let mut members: Vec<(u32, u32)> = Vec::new();
    for u in 0..n {
        if cmap[u] != UNMATCHED {
            continue;
        }
        let v = mate[u] as usize;
        let c = members.len() as u32;
        cmap[u] = c;
        cmap[v] = c;
        members.push((u as u32, v as u32));
    }

    let nc = members.len();
    let mut xadj = Vec::with_capacity(nc + 1);
    xadj.push(0usize);
    let mut adj: Vec<u32> = Vec::new();
    let mut ewgt: Vec<u32> = Vec::new();
    let mut vwgt = Vec::with_capacity(nc);
    // slot[c'] = position of coarse neighbour c' in the row being built
    let mut slot = alloc::vec![usize::MAX; nc];
    for (c, &(u, v)) in members.iter().enumerate() {
        let row_start = adj.len();
        let mut weight = g.vwgt[u as usize];
        if u != v {
            weight += g.vwgt[v as usize];
        }
        vwgt.push(weight);
        let pair = [u as usize, v as usize];
        let parts: &[usize] = if u == v { &pair[..1] } else { &pair[..] };
        for &x in parts {
            for (y, w) in g.edges(x) {
                let cy = cmap[y] as usize;
                if cy == c {
                    continue;
                }
                if slot[cy] == usize::MAX {
                    slot[cy] = adj.len();
                    adj.push(cy as u32);
                    ewgt.push(w);
                } else {
                    ewgt[slot[cy]] += w;
                }
            }
        }
        for &cy in &adj[row_start..] {
            slot[cy as usize] = usize::MAX;
        }
        xadj.push(adj.len());
    }

    Level { graph: WGraph { xadj, adj, ewgt, vwgt }, cmap }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn path(n: usize) -> WGraph {
        let mut xadj = alloc::vec![0];
        let mut adj = Vec::new();
        for v in 0..n {
            if v > 0 {
                adj.push(v as u32 - 1);
            }
            if v + 1 < n {
                adj.push(v as u32 + 1);
            }
            xadj.push(adj.len());
        }
        let m = adj.len();
        WGraph { xadj, adj, ewgt: alloc::vec![1; m], vwgt: alloc::vec![1; n] }
    }

    #[test]
    fn contraction_preserves_total_weights() {
        let g = path(50);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let level = coarsen_once(&g, 10, &mut rng);
        let total: u32 = level.graph.vwgt.iter().sum();
        assert_eq!(total, 50);
        assert!(level.graph.n() < 50);
        // Edge weight lost to contraction equals the weight of matched edges.
        let fine: u32 = g.ewgt.iter().sum::<u32>() / 2;
        let coarse: u32 = level.graph.ewgt.iter().sum::<u32>() / 2;
        let internal = (50 - level.graph.n()) as u32;
        assert_eq!(fine, coarse + internal);
    }

    #[test]
    fn respects_vertex_weight_limit() {
        let g = path(64);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let levels = coarsen(&g, 4, 4, &mut rng);
        for l in &levels {
            assert!(l.graph.vwgt.iter().all(|&w| w <= 4));
        }
    }
}
