//! Size-budgeted context graphs and subtask assembly.
//!
//! A context starts as the whole graph. Entities that are not protected are
//! dropped in rounds, lowest walk-incidence score first, until the budget is
//! met. Each round removes `max(1, ceil(excess / 10))` entities and rescores
//! the shrunken view, since removals interact. Among equal scores the
//! lowest-degree entity goes first and the highest id breaks remaining ties,
//! so zero-score padding keeps well-connected entities.

use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidence::{drop_cost_proxy, EvidenceConfig, View};
use crate::graph::{EntityId, KnowledgeGraph, Side, Triple};
use crate::mapping::MappingSet;
use crate::set::EntitySet;

pub const DEFAULT_DELTA1: f64 = 0.5;
pub const DEFAULT_DELTA2: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeBudget {
    /// Limit on source plus target context entities.
    pub total: usize,
    /// Share of `total` reserved for the source context.
    pub delta1: f64,
    /// Share of the target context given to counterpart candidates.
    pub delta2: f64,
}

impl SizeBudget {
    pub fn validate(&self) -> Result<()> {
        if self.total < 2 {
            return Err(Error::Config(alloc::format!("max size must be at least 2, got {}", self.total)));
        }
        if !(self.delta1 > 0.0 && self.delta1 < 1.0) {
            return Err(Error::Config(alloc::format!("delta1 must lie in (0, 1), got {}", self.delta1)));
        }
        if !(self.delta2 > 0.0 && self.delta2 <= 1.0) {
            return Err(Error::Config(alloc::format!("delta2 must lie in (0, 1], got {}", self.delta2)));
        }
        Ok(())
    }

    pub fn source_budget(&self) -> usize {
        libm::floor(self.delta1 * self.total as f64) as usize
    }

    pub fn target_budget(&self) -> usize {
        self.total - self.source_budget()
    }

    /// `floor(delta2 * (total - source_context_size))`.
    pub fn candidate_quota(&self, source_context_size: usize) -> usize {
        let room = self.total.saturating_sub(source_context_size);
        libm::floor(self.delta2 * room as f64) as usize
    }
}

/// Induced subgraph around a set of unmatched entities.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextGraph {
    pub side: Side,
    pub entities: EntitySet,
    pub anchors: EntitySet,
    pub unmatched: EntitySet,
    pub induced_triples: Vec<Triple>,
}

impl ContextGraph {
    fn from_view(side: Side, view: &View<'_>, anchors: &EntitySet, unmatched: &EntitySet) -> Self {
        let entities: EntitySet = view.entities().collect();
        Self {
            side,
            anchors: anchors.intersection(&entities),
            unmatched: unmatched.clone(),
            induced_triples: view.graph().induced_triples(view.mask()),
            entities,
        }
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// Entities that are neither anchors nor unmatched.
    pub fn connecting(&self) -> EntitySet {
        self.entities.difference(&self.anchors).difference(&self.unmatched)
    }
}

/// Shrinks the whole graph to `budget` entities without touching `protected`.
fn shrink<'g>(
    kg: &'g KnowledgeGraph,
    protected: &[bool],
    anchors: &[bool],
    unmatched: &[bool],
    budget: usize,
    walk_len: usize,
) -> View<'g> {
    let mut view = View::full(kg);
    while view.len() > budget {
        let excess = view.len() - budget;
        let batch = excess.div_ceil(10).max(1);
        let score = drop_cost_proxy(&view, anchors, unmatched, walk_len);
        let mut droppable: Vec<EntityId> = view.entities().filter(|&e| !protected[e as usize]).collect();
        if droppable.is_empty() {
            break;
        }
        let take = batch.min(droppable.len());
        let order = |a: &EntityId, b: &EntityId| {
            score[*a as usize].total_cmp(&score[*b as usize]).then(kg.degree(*a).cmp(&kg.degree(*b))).then(b.cmp(a))
        };
        if take < droppable.len() {
            droppable.select_nth_unstable_by(take - 1, order);
        }
        for &e in &droppable[..take] {
            view.remove(e);
        }
    }
    view
}

/// Source context for one group: every unmatched entity of the group plus the
/// most evidence-productive anchors and connecting entities within `budget`.
pub fn build_source_context(
    kg_s: &KnowledgeGraph,
    group_unmatched: &EntitySet,
    source_anchors: &EntitySet,
    budget: usize,
    config: &EvidenceConfig,
) -> Result<ContextGraph> {
    if group_unmatched.len() > budget {
        return Err(Error::BudgetTooSmall { side: Side::Source, required: group_unmatched.len(), budget });
    }
    let n = kg_s.entity_count();
    let unmatched = group_unmatched.mask(n);
    let anchors = source_anchors.mask(n);
    let view = shrink(kg_s, &unmatched, &anchors, &unmatched, budget, 2 * config.depth);
    Ok(ContextGraph::from_view(Side::Source, &view, source_anchors, group_unmatched))
}

/// Target context: the candidates and the target anchors are kept
/// unconditionally; connecting entities fill the rest of the budget.
pub fn build_target_context(
    kg_t: &KnowledgeGraph,
    candidates: &EntitySet,
    target_anchors: &EntitySet,
    budget: usize,
    config: &EvidenceConfig,
) -> Result<ContextGraph> {
    let protected_set = candidates.union(target_anchors);
    if protected_set.len() > budget {
        return Err(Error::BudgetTooSmall { side: Side::Target, required: protected_set.len(), budget });
    }
    let n = kg_t.entity_count();
    let protected = protected_set.mask(n);
    let anchors = target_anchors.mask(n);
    let unmatched = candidates.mask(n);
    let view = shrink(kg_t, &protected, &anchors, &unmatched, budget, 2 * config.depth);
    Ok(ContextGraph::from_view(Side::Target, &view, target_anchors, candidates))
}

/// One size-bounded alignment problem handed to a matcher.
#[derive(Clone, Debug, PartialEq)]
pub struct Subtask {
    pub group: usize,
    pub iteration: u32,
    /// Built in the first iteration and shared by later ones.
    pub source: Arc<ContextGraph>,
    pub target: ContextGraph,
    /// Source-context entities mapped in the current iteration.
    pub source_anchors: EntitySet,
    /// Local seed pairs: source in the source context, target a target anchor.
    pub seeds: Vec<(EntityId, EntityId)>,
    /// The group's unmatched source entities; one ranking row each.
    pub unmatched: EntitySet,
    pub candidates: EntitySet,
    /// Candidates plus the pseudo-mapped counterparts of the group's own
    /// unmatched entities: the targets every row is ranked over.
    pub ranking_targets: EntitySet,
}

impl Subtask {
    pub fn size(&self) -> usize {
        self.source.len() + self.target.len()
    }
}

pub struct SubtaskParts {
    pub group: usize,
    pub iteration: u32,
    pub source: Arc<ContextGraph>,
    pub source_anchors: EntitySet,
    pub target: ContextGraph,
    pub unmatched: EntitySet,
    pub ranking_targets: EntitySet,
}

/// Checks the size limit and collects the local seed pairs.
pub fn assemble_subtask(parts: SubtaskParts, mappings: &MappingSet, max_size: usize) -> Result<Subtask> {
    if parts.target.unmatched.is_empty() {
        return Err(Error::NoCandidates);
    }
    let size = parts.source.len() + parts.target.len();
    if size > max_size {
        return Err(Error::SizeViolation { size, limit: max_size });
    }
    let seeds = parts
        .source_anchors
        .iter()
        .filter_map(|s| mappings.target_of(s).map(|t| (s, t)))
        .filter(|&(_, t)| parts.target.anchors.contains(t))
        .collect();
    Ok(Subtask {
        group: parts.group,
        iteration: parts.iteration,
        candidates: parts.target.unmatched.clone(),
        source: parts.source,
        target: parts.target,
        source_anchors: parts.source_anchors,
        seeds,
        unmatched: parts.unmatched,
        ranking_targets: parts.ranking_targets,
    })
}
