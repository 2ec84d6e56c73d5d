//! Scalar evidence passing over context graphs.
//!
//! Evidence starts as an indicator on the anchors and flows along the
//! self-loop-augmented undirected adjacency of a view: every layer replaces
//! each value by the sum of its own value and its in-view neighbours' values.
//! After `L` layers the values are squashed into `[0, 1)` relative to the
//! values the same process reaches on the whole graph; a second block of `L`
//! layers then carries the squashed values on and is squashed again. The
//! informativeness of a view for a set of unmatched entities is the sum of
//! their final values.
//!
//! Seeded with an indicator, `l` layers of propagation count the length-`l`
//! walks from the seed set on the self-loop-augmented view, so all raw
//! quantities are walk counts. They are kept in `f64`; when a reference layer
//! grows past [`SCALE_THRESHOLD`] that layer and every view evaluated against
//! it are multiplied by the same power of two, which leaves the ratios fed to
//! the squashing function unchanged.

use alloc::vec::Vec;
use core::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EntityId, KnowledgeGraph};

pub const DEFAULT_DEPTH: usize = 2;
pub const DEFAULT_LAMBDA: f64 = 2.0;

/// Reference layers whose maximum exceeds this are rescaled.
const SCALE_THRESHOLD: f64 = 1.0e200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceConfig {
    /// Layers per block (`L`); a full evaluation runs `2L` layers.
    pub depth: usize,
    /// Steepness of the squashing function.
    pub lambda: f64,
}

impl Default for EvidenceConfig {
    fn default() -> Self {
        Self { depth: DEFAULT_DEPTH, lambda: DEFAULT_LAMBDA }
    }
}

/// Additive walk-count value: `f64` in production, exact integers in tests.
pub trait WalkCount: Copy + Add<Output = Self> + PartialEq {
    const ZERO: Self;
    const ONE: Self;
}

impl WalkCount for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
}

impl WalkCount for u64 {
    const ZERO: Self = 0;
    const ONE: Self = 1;
}

impl WalkCount for u128 {
    const ZERO: Self = 0;
    const ONE: Self = 1;
}

/// Induced subgraph of a knowledge graph, described by a membership mask.
#[derive(Clone, Debug)]
pub struct View<'g> {
    graph: &'g KnowledgeGraph,
    present: Vec<bool>,
    len: usize,
}

impl<'g> View<'g> {
    pub fn full(graph: &'g KnowledgeGraph) -> Self {
        let n = graph.entity_count();
        Self { graph, present: alloc::vec![true; n], len: n }
    }

    pub fn from_entities(graph: &'g KnowledgeGraph, entities: impl IntoIterator<Item = EntityId>) -> Self {
        let mut present = alloc::vec![false; graph.entity_count()];
        let mut len = 0;
        for e in entities {
            if !present[e as usize] {
                present[e as usize] = true;
                len += 1;
            }
        }
        Self { graph, present, len }
    }

    pub fn graph(&self) -> &'g KnowledgeGraph {
        self.graph
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, e: EntityId) -> bool {
        self.present[e as usize]
    }

    pub fn mask(&self) -> &[bool] {
        &self.present
    }

    pub fn remove(&mut self, e: EntityId) -> bool {
        let slot = &mut self.present[e as usize];
        if *slot {
            *slot = false;
            self.len -= 1;
            true
        } else {
            false
        }
    }

    pub fn entities(&self) -> impl Iterator<Item = EntityId> + '_ {
        self.present.iter().enumerate().filter(|(_, &p)| p).map(|(e, _)| e as EntityId)
    }

    pub fn without(&self, e: EntityId) -> View<'g> {
        let mut v = self.clone();
        v.remove(e);
        v
    }
}

/// Layer-0 values: one on in-view anchors, zero elsewhere.
pub fn init_evidence<T: WalkCount>(view: &View<'_>, anchors: &[bool]) -> Vec<T> {
    view.mask()
        .iter()
        .zip(anchors)
        .map(|(&present, &anchor)| if present && anchor { T::ONE } else { T::ZERO })
        .collect()
}

/// One layer: `out[e] = values[e] + sum of values[u]` over in-view neighbours `u`.
fn step<T: WalkCount>(values: &[T], view: &View<'_>) -> Vec<T> {
    let g = view.graph();
    let mask = view.mask();
    let mut out = alloc::vec![T::ZERO; values.len()];
    for (e, slot) in out.iter_mut().enumerate() {
        if !mask[e] {
            continue;
        }
        let mut acc = values[e];
        for &u in g.neighbors(e as EntityId) {
            if mask[u as usize] {
                acc = acc + values[u as usize];
            }
        }
        *slot = acc;
    }
    out
}

/// Applies `steps` propagation layers over the view.
///
/// Entries outside the view are zero in the result.
pub fn propagate<T: WalkCount>(values: &[T], view: &View<'_>, steps: usize) -> Vec<T> {
    if steps == 0 {
        return values.to_vec();
    }
    let mut cur = step(values, view);
    for _ in 1..steps {
        cur = step(&cur, view);
    }
    cur
}

/// `2 * sigmoid(x) - 1`, written as `tanh(x / 2)` for accuracy near zero.
fn squash(x: f64) -> f64 {
    libm::tanh(0.5 * x)
}

/// `2 * sigmoid(lambda * value / reference) - 1` per entity; zero where the
/// reference is zero.
pub fn normalize(values: &[f64], reference: &[f64], lambda: f64) -> Vec<f64> {
    values.iter().zip(reference).map(|(&v, &r)| if r > 0.0 { squash(lambda * v / r) } else { 0.0 }).collect()
}

/// Whole-graph reference layers for one anchor set.
#[derive(Clone, Debug)]
pub struct EvidenceRefs {
    config: EvidenceConfig,
    anchors: Vec<bool>,
    /// Reference after the first block (`L` layers).
    pub first: Vec<f64>,
    /// Reference after the second block (`2L` layers).
    pub second: Vec<f64>,
    /// Power-of-two exponent subtracted after each of the `2L` layers.
    shifts: Vec<i32>,
}

impl EvidenceRefs {
    pub fn compute(graph: &KnowledgeGraph, anchors: &[bool], config: EvidenceConfig) -> Self {
        let full = View::full(graph);
        let l = config.depth;
        let mut shifts = Vec::with_capacity(2 * l);

        let mut cur: Vec<f64> = init_evidence(&full, anchors);
        for _ in 0..l {
            cur = step(&cur, &full);
            shifts.push(rescale_to_fit(&mut cur));
        }
        let first = cur;
        let mut cur = normalize(&first, &first, config.lambda);
        for _ in 0..l {
            cur = step(&cur, &full);
            shifts.push(rescale_to_fit(&mut cur));
        }
        Self { config, anchors: anchors.to_vec(), first, second: cur, shifts }
    }

    pub fn config(&self) -> EvidenceConfig {
        self.config
    }

    pub fn anchors(&self) -> &[bool] {
        &self.anchors
    }

    /// Final normalized evidence per entity for a view of the reference graph.
    pub fn evidence(&self, view: &View<'_>) -> Vec<f64> {
        let l = self.config.depth;
        let mut cur: Vec<f64> = init_evidence(view, &self.anchors);
        for i in 0..l {
            cur = step(&cur, view);
            apply_shift(&mut cur, self.shifts[i]);
        }
        let mut cur = normalize(&cur, &self.first, self.config.lambda);
        for i in l..2 * l {
            cur = step(&cur, view);
            apply_shift(&mut cur, self.shifts[i]);
        }
        normalize(&cur, &self.second, self.config.lambda)
    }
}

fn rescale_to_fit(values: &mut [f64]) -> i32 {
    let max = values.iter().copied().fold(0.0f64, f64::max);
    if max <= SCALE_THRESHOLD {
        return 0;
    }
    let (_, exp) = libm::frexp(max);
    apply_shift(values, exp);
    exp
}

fn apply_shift(values: &mut [f64], shift: i32) {
    if shift != 0 {
        for v in values.iter_mut() {
            *v = libm::ldexp(*v, -shift);
        }
    }
}

/// Sum of final evidence over `unmatched` for the view.
///
/// Zero when the view holds no anchor.
pub fn informativeness(view: &View<'_>, unmatched: &[EntityId], refs: &EvidenceRefs) -> f64 {
    let h = refs.evidence(view);
    unmatched.iter().filter(|&&e| view.contains(e)).map(|&e| h[e as usize]).sum()
}

/// Informativeness lost by removing `e` from the view, references held fixed.
pub fn drop_cost_exact(view: &View<'_>, unmatched: &[EntityId], e: EntityId, refs: &EvidenceRefs) -> Result<f64> {
    if unmatched.contains(&e) {
        return Err(Error::NotDroppable(e));
    }
    if !view.contains(e) {
        return Ok(0.0);
    }
    Ok(informativeness(view, unmatched, refs) - informativeness(&view.without(e), unmatched, refs))
}

/// Walk-incidence drop score for every in-view entity.
///
/// `score(e) = sum over l in 0..=walk_len of f_l(e) * b_{walk_len - l}(e)`,
/// where `f` counts walks from the anchors and `b` walks from the unmatched
/// entities (the adjacency is symmetric, so forward and backward counts use the
/// same propagation). This is the number of (walk, position) incidences of `e`
/// on anchor-to-unmatched walks of length `walk_len`, and it is zero exactly
/// when removing `e` leaves the exact drop cost at zero.
pub fn drop_cost_proxy(view: &View<'_>, anchors: &[bool], unmatched: &[bool], walk_len: usize) -> Vec<f64> {
    let mut backward: Vec<Vec<f64>> = Vec::with_capacity(walk_len + 1);
    backward.push(init_evidence(view, unmatched));
    for k in 1..=walk_len {
        let next = step(&backward[k - 1], view);
        backward.push(next);
    }
    let mut forward: Vec<f64> = init_evidence(view, anchors);
    let mut score = alloc::vec![0.0f64; forward.len()];
    for l in 0..=walk_len {
        if l > 0 {
            forward = step(&forward, view);
        }
        let b = &backward[walk_len - l];
        for e in 0..score.len() {
            score[e] += forward[e] * b[e];
        }
    }
    score
}
