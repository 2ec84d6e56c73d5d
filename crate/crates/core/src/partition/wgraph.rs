use alloc::vec::Vec;

/// Vertex- and edge-weighted CSR graph used inside the partitioner.
#[derive(Clone, Debug)]
pub(crate) struct WGraph {
    pub xadj: Vec<usize>,
    pub adj: Vec<u32>,
    pub ewgt: Vec<u32>,
    pub vwgt: Vec<u32>,
}

impl WGraph {
    pub fn n(&self) -> usize {
        self.vwgt.len()
    }

    pub fn edges(&self, v: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        let r = self.xadj[v]..self.xadj[v + 1];
        self.adj[r.clone()].iter().zip(&self.ewgt[r]).map(|(&u, &w)| (u as usize, w))
    }

    pub fn cut(&self, part: &[u32]) -> u64 {
        let mut cut = 0u64;
        for v in 0..self.n() {
            for (u, w) in self.edges(v) {
                if u > v && part[u] != part[v] {
                    cut += w as u64;
                }
            }
        }
        cut
    }

    pub fn part_weights(&self, part: &[u32], nparts: usize) -> Vec<u64> {
        let mut pw = alloc::vec![0u64; nparts];
        for (v, &p) in part.iter().enumerate() {
            pw[p as usize] += self.vwgt[v] as u64;
        }
        pw
    }
}
