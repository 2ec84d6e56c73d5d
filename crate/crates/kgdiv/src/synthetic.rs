//! Planted alignment instances: a random graph and a relabelled copy.
//!
//! The target copy uses unrelated labels and a shuffled triple order, so its
//! dense ids are a random permutation of the source ids and no id-based
//! tie-break can recover the alignment by accident.

use std::collections::HashSet;

use kgdiv_core::pipeline::Dataset;
use kgdiv_core::{EntityId, KgBuilder, MappingSet, Provenance, Side};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Planted {
    pub entities: usize,
    pub avg_degree: f64,
    pub seed_fraction: f64,
    /// Fraction of non-tree edges dropped independently from each copy; a
    /// random spanning tree is always kept so every entity has a triple.
    pub edge_noise: f64,
    pub relations: usize,
    pub rng_seed: u64,
}

impl Default for Planted {
    fn default() -> Self {
        Self { entities: 500, avg_degree: 6.0, seed_fraction: 0.2, edge_noise: 0.0, relations: 8, rng_seed: 1 }
    }
}

impl Planted {
    pub fn generate(&self) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        let n = self.entities;
        let m = ((n as f64) * self.avg_degree / 2.0).round() as usize;
        let mut seen = HashSet::with_capacity(m);
        let mut edges = Vec::with_capacity(m);
        // Random spanning tree first keeps the graph connected.
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        for i in 1..n {
            let (a, b) = (order[i], order[rng.gen_range(0..i)]);
            seen.insert((a.min(b), a.max(b)));
            edges.push((a, b, rng.gen_range(0..self.relations.max(1))));
        }
        while edges.len() < m {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if a != b && seen.insert((a.min(b), a.max(b))) {
                edges.push((a, b, rng.gen_range(0..self.relations.max(1))));
            }
        }

        let mut relabel: Vec<usize> = (0..n).collect();
        relabel.shuffle(&mut rng);
        let src_label = |e: usize| format!("src/{e}");
        let tgt_label = |e: usize| format!("tgt/{}", relabel[e]);

        let mut sb = KgBuilder::new(Side::Source);
        let mut tb = KgBuilder::new(Side::Target);
        for e in 0..n {
            sb.add_entity(&src_label(e));
        }
        let mut tgt_entities: Vec<usize> = (0..n).collect();
        tgt_entities.shuffle(&mut rng);
        for &e in &tgt_entities {
            tb.add_entity(&tgt_label(e));
        }
        let tree = n.saturating_sub(1);
        for (i, &(a, b, r)) in edges.iter().enumerate() {
            if i < tree || !rng.gen_bool(self.edge_noise) {
                sb.add_triple(&src_label(a), &format!("rel/{r}"), &src_label(b));
            }
        }
        let mut shuffled: Vec<_> = edges.iter().enumerate().collect();
        shuffled.shuffle(&mut rng);
        for (i, &(a, b, r)) in shuffled {
            if i < tree || !rng.gen_bool(self.edge_noise) {
                tb.add_triple(&tgt_label(a), &format!("link:{r}"), &tgt_label(b));
            }
        }
        let kg_s = sb.build().expect("nonempty");
        let kg_t = tb.build().expect("nonempty");

        let mut pairs: Vec<(EntityId, EntityId)> =
            (0..n).map(|e| (kg_s.entity_id(&src_label(e)).unwrap(), kg_t.entity_id(&tgt_label(e)).unwrap())).collect();
        pairs.shuffle(&mut rng);
        let n_seeds = ((n as f64) * self.seed_fraction).round() as usize;
        let seeds = MappingSet::from_pairs(pairs[..n_seeds].iter().copied(), Provenance::Seed).expect("bijection");
        let mut test = pairs[n_seeds..].to_vec();
        test.sort_unstable();
        Dataset { kg_s, kg_t, seeds, test }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn copies_are_isomorphic_under_the_planted_map() {
        let d = Planted { entities: 60, ..Planted::default() }.generate();
        assert_eq!(d.kg_s.entity_count(), 60);
        assert_eq!(d.seeds.len() + d.test.len(), 60);
        let mut map = vec![0; 60];
        for m in d.seeds.iter() {
            map[m.source as usize] = m.target;
        }
        for &(s, t) in &d.test {
            map[s as usize] = t;
        }
        assert_eq!(d.kg_s.edge_count(), d.kg_t.edge_count());
        for u in d.kg_s.entities() {
            let mut image: Vec<_> = d.kg_s.neighbors(u).iter().map(|&v| map[v as usize]).collect();
            image.sort_unstable();
            assert_eq!(image, d.kg_t.neighbors(map[u as usize]));
        }
        assert!(d.test.iter().filter(|&&(s, t)| s == t).count() < 10, "ids should be scrambled");
    }

    #[test]
    fn generation_is_reproducible() {
        let a = Planted { entities: 80, ..Planted::default() }.generate();
        let b = Planted { entities: 80, ..Planted::default() }.generate();
        assert_eq!(a.test, b.test);
        assert_eq!(a.kg_t.triples(), b.kg_t.triples());
    }
}
