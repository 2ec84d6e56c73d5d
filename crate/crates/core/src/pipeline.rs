//! The iterative division loop.
//!
//! Each iteration runs one subtask per partition group over shared immutable
//! state: discover candidates, build (or reuse) the source context, build the
//! target context, match, rank. Results meet at a single-threaded barrier that
//! walks the groups in ascending order and merges pseudo mappings, similarity
//! features and predictions, so the outcome does not depend on how subtasks
//! were scheduled.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Reverse;

use serde::{Deserialize, Serialize};

use crate::context::{
    assemble_subtask, build_source_context, build_target_context, ContextGraph, SizeBudget, Subtask, SubtaskParts,
};
use crate::discovery::{
    accumulate_similarity, candidate_scores, generate_pseudo_mappings, group_seed_mappings, locality_weights,
    normalize_similarity, select_candidates, ScoredPair, SimilarityStore, DEFAULT_RADIUS,
};
use crate::error::{Error, Result};
use crate::evidence::{drop_cost_proxy, EvidenceConfig, View};
use crate::graph::{EntityId, KnowledgeGraph, Side};
use crate::mapping::{Mapping, MappingSet, Provenance};
use crate::matcher::{predict, MatchTask, Matcher, Ranking};
use crate::metrics::{evaluate, Metrics, RankingTable};
use crate::partition::{partition_source, Partition};
use crate::set::EntitySet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_subtasks: usize,
    pub max_size: usize,
    pub iterations: u32,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub top_k: usize,
    pub delta1: f64,
    pub delta2: f64,
    pub depth: usize,
    pub balance_slack: f64,
    pub rng_seed: u64,
    pub parallelism: usize,
    /// BFS radius for locality weights.
    pub radius: u32,
    /// Abort on the first matcher failure instead of skipping the subtask.
    pub strict: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_subtasks: 5,
            max_size: 10_000,
            iterations: 5,
            alpha: crate::discovery::DEFAULT_ALPHA,
            beta: crate::discovery::DEFAULT_BETA,
            lambda: crate::evidence::DEFAULT_LAMBDA,
            top_k: crate::discovery::DEFAULT_TOP_K,
            delta1: crate::context::DEFAULT_DELTA1,
            delta2: crate::context::DEFAULT_DELTA2,
            depth: crate::evidence::DEFAULT_DEPTH,
            balance_slack: crate::partition::DEFAULT_BALANCE_SLACK,
            rng_seed: 0,
            parallelism: 1,
            radius: DEFAULT_RADIUS,
            strict: false,
        }
    }
}

impl RunConfig {
    pub fn budget(&self) -> SizeBudget {
        SizeBudget { total: self.max_size, delta1: self.delta1, delta2: self.delta2 }
    }

    pub fn evidence(&self) -> EvidenceConfig {
        EvidenceConfig { depth: self.depth, lambda: self.lambda }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_subtasks == 0 {
            return bad("number of subtasks must be positive".into());
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if self.top_k == 0 || self.depth == 0 || self.parallelism == 0 || self.radius == 0 {
            return bad("top-k, depth, parallelism and radius must be positive".into());
        }
        if self.lambda.is_nan() || self.lambda <= 0.0 || self.beta.is_nan() || self.beta < 0.0 {
            return bad(alloc::format!("lambda must be > 0 and beta >= 0 (got {}, {})", self.lambda, self.beta));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return bad(alloc::format!("alpha must lie in [0, 1), got {}", self.alpha));
        }
        let budget = self.budget();
        budget.validate()?;
        if budget.candidate_quota(budget.source_budget()) == 0 {
            return bad("delta2 * (max size - source budget) leaves no room for candidates".into());
        }
        Ok(())
    }
}

/// Both graphs, the seed mappings and the held-out test pairs.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub kg_s: KnowledgeGraph,
    pub kg_t: KnowledgeGraph,
    pub seeds: MappingSet,
    pub test: Vec<(EntityId, EntityId)>,
}

/// Runs a closure over a slice, possibly in parallel, keeping input order.
pub trait Executor {
    fn map<T: Sync, R: Send>(&self, items: &[T], f: &(dyn Fn(&T) -> R + Sync)) -> Vec<R>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T: Sync, R: Send>(&self, items: &[T], f: &(dyn Fn(&T) -> R + Sync)) -> Vec<R> {
        items.iter().map(f).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "lowercase")]
pub enum SubtaskStatus {
    Ok,
    Skipped(String),
    Failed(String),
}

/// What one group produced in one iteration.
#[derive(Clone, Debug)]
pub struct SubtaskOutcome {
    pub group: usize,
    pub status: SubtaskStatus,
    pub source_context: Option<Arc<ContextGraph>>,
    pub subtask: Option<Subtask>,
    pub rankings: Vec<Ranking>,
    pub pseudo: Vec<ScoredPair>,
    pub similarity_update: BTreeMap<EntityId, f64>,
    /// Locality fell back to the global target anchors.
    pub global_fallback: bool,
}

impl SubtaskOutcome {
    fn empty(group: usize, status: SubtaskStatus) -> Self {
        Self {
            group,
            status,
            source_context: None,
            subtask: None,
            rankings: Vec::new(),
            pseudo: Vec::new(),
            similarity_update: BTreeMap::new(),
            global_fallback: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubtaskSummary {
    pub group: usize,
    pub source_size: usize,
    pub target_size: usize,
    pub candidates: usize,
    pub seeds: usize,
    #[serde(flatten)]
    pub status: SubtaskStatus,
}

impl SubtaskSummary {
    pub fn size(&self) -> usize {
        self.source_size + self.target_size
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u32,
    pub metrics: Metrics,
    /// `|seeds ∪ pseudo|` after the barrier.
    pub mapped: usize,
    pub new_pseudo: usize,
    pub subtasks: Vec<SubtaskSummary>,
}

/// Mutable state carried between iterations.
#[derive(Clone, Debug)]
pub struct RunState {
    pub seeds: MappingSet,
    pub pseudo: MappingSet,
    /// Seeds and pseudo mappings together.
    pub mapped: MappingSet,
    pub predictions: MappingSet,
    pub source_contexts: Vec<Option<Arc<ContextGraph>>>,
    pub stores: Vec<SimilarityStore>,
    pub history: Vec<IterationRecord>,
}

impl RunState {
    pub fn new(seeds: MappingSet, groups: usize) -> Self {
        Self {
            mapped: seeds.clone(),
            seeds,
            pseudo: MappingSet::new(),
            predictions: MappingSet::new(),
            source_contexts: alloc::vec![None; groups],
            stores: alloc::vec![SimilarityStore::new(); groups],
            history: Vec::new(),
        }
    }
}

/// Partitions the source graph and attaches each group's unmatched entities.
pub fn divide(data: &Dataset, config: &RunConfig) -> Result<Vec<Partition>> {
    let parts = partition_source(&data.kg_s, config.n_subtasks, config.balance_slack, config.rng_seed)?;
    Ok(parts.into_iter().map(|p| p.with_seeds(&data.seeds)).collect())
}

/// Read-only inputs shared by all subtasks of a run.
pub struct SubtaskEnv<'a, M: Matcher> {
    pub config: &'a RunConfig,
    pub data: &'a Dataset,
    pub matcher: &'a M,
}

/// One group's subtask for one iteration.
pub fn run_subtask<M: Matcher>(
    env: &SubtaskEnv<'_, M>,
    group: &Partition,
    state: &RunState,
    iteration: u32,
) -> Result<SubtaskOutcome> {
    let (config, data) = (env.config, env.data);
    let g = group.index;
    if group.unmatched.is_empty() {
        return Ok(SubtaskOutcome::empty(g, SubtaskStatus::Skipped("no unmatched entities".into())));
    }
    let budget = config.budget();
    let evidence = config.evidence();
    let mapped = &state.mapped;

    let source_ctx = match &state.source_contexts[g] {
        Some(ctx) => ctx.clone(),
        None => Arc::new(
            build_source_context(
                &data.kg_s,
                &group.unmatched,
                &mapped.anchors(Side::Source),
                budget.source_budget(),
                &evidence,
            )
            .map_err(|e| e.in_group(g))?,
        ),
    };
    let source_anchors: EntitySet = source_ctx.entities.iter().filter(|&s| mapped.contains_source(s)).collect();

    let quota = budget.candidate_quota(source_ctx.len());
    let target_room = config.max_size - source_ctx.len();
    let target_anchors =
        limited_target_anchors(data, &source_ctx, &source_anchors, group, mapped, target_room - quota, &evidence);

    // Locality is measured from the counterparts of the partition's anchors.
    let local = group_seed_mappings(group, mapped);
    let (locality, global_fallback) = match locality_weights(&data.kg_t, &local.anchors(Side::Target), config.radius) {
        Ok(w) => (w, false),
        Err(Error::NoLocalEvidence) => {
            log::warn!("group {g}: no local anchors, falling back to all target anchors");
            (
                locality_weights(&data.kg_t, &mapped.anchors(Side::Target), config.radius)
                    .map_err(|e| e.in_group(g))?,
                true,
            )
        }
        Err(e) => return Err(e.in_group(g)),
    };
    let store = (iteration > 1).then(|| &state.stores[g]);
    let weights = candidate_scores(&locality, store, config.beta);
    let selection = select_candidates(&data.kg_t, &weights, quota, &mapped.anchors(Side::Target));

    let target_ctx = build_target_context(&data.kg_t, &selection.candidates, &target_anchors, target_room, &evidence)
        .map_err(|e| e.in_group(g))?;

    let own_pseudo: EntitySet = group
        .unmatched
        .iter()
        .filter_map(|s| mapped.target_of(s))
        .filter(|&t| target_ctx.anchors.contains(t))
        .collect();
    let ranking_targets = selection.candidates.union(&own_pseudo);

    let parts = SubtaskParts {
        group: g,
        iteration,
        source: source_ctx.clone(),
        source_anchors,
        target: target_ctx,
        unmatched: group.unmatched.clone(),
        ranking_targets,
    };
    let subtask = match assemble_subtask(parts, mapped, config.max_size) {
        Ok(st) => st,
        Err(Error::NoCandidates) => {
            log::warn!("group {g}: no counterpart candidates, subtask skipped");
            let mut out = SubtaskOutcome::empty(g, SubtaskStatus::Skipped("no counterpart candidates".into()));
            out.source_context = Some(source_ctx);
            return Ok(out);
        }
        Err(e) => return Err(e.in_group(g)),
    };

    let task = MatchTask { subtask: &subtask, kg_s: &data.kg_s, kg_t: &data.kg_t, iteration };
    let sim = match env.matcher.match_subtask(&task) {
        Ok(sim) => sim,
        Err(e) if config.strict => return Err(Error::from(e).in_group(g)),
        Err(e) => {
            log::warn!("group {g}: matcher failed, predictions omitted: {e}");
            let mut out = SubtaskOutcome::empty(g, SubtaskStatus::Failed(alloc::format!("{e}")));
            out.source_context = Some(source_ctx);
            out.subtask = Some(subtask);
            out.global_fallback = global_fallback;
            return Ok(out);
        }
    };

    let rankings = predict(&sim, &subtask.unmatched, &subtask.ranking_targets);
    let free_sources: EntitySet = subtask.unmatched.iter().filter(|&s| !mapped.contains_source(s)).collect();
    let pseudo = generate_pseudo_mappings(&sim, &free_sources, &subtask.candidates);
    let raw = accumulate_similarity(&sim, &subtask.unmatched, &subtask.candidates, config.top_k);
    let similarity_update = normalize_similarity(&raw, config.alpha, &subtask.candidates);

    Ok(SubtaskOutcome {
        group: g,
        status: SubtaskStatus::Ok,
        source_context: Some(source_ctx),
        subtask: Some(subtask),
        rankings,
        pseudo,
        similarity_update,
        global_fallback,
    })
}

/// Counterparts of the source-context anchors, cut down to `cap` when the
/// target budget cannot hold them all.
///
/// Counterparts of the group's own pseudo-mapped entities come first, then
/// anchors ranked by their walk-incidence score inside the source context.
fn limited_target_anchors(
    data: &Dataset,
    source_ctx: &ContextGraph,
    source_anchors: &EntitySet,
    group: &Partition,
    mapped: &MappingSet,
    cap: usize,
    evidence: &EvidenceConfig,
) -> EntitySet {
    if source_anchors.len() <= cap {
        return source_anchors.iter().filter_map(|s| mapped.target_of(s)).collect();
    }
    log::debug!("group {}: keeping {cap} of {} target anchors", group.index, source_anchors.len());
    let n = data.kg_s.entity_count();
    let view = View::from_entities(&data.kg_s, source_ctx.entities.iter());
    let score = drop_cost_proxy(&view, &source_anchors.mask(n), &group.unmatched.mask(n), 2 * evidence.depth);
    let mut order: Vec<EntityId> = source_anchors.iter().collect();
    order.sort_by(|&a, &b| {
        let own = |s: EntityId| group.unmatched.contains(s);
        own(b).cmp(&own(a)).then(score[b as usize].total_cmp(&score[a as usize])).then(a.cmp(&b))
    });
    order.into_iter().take(cap).filter_map(|s| mapped.target_of(s)).collect()
}

/// Merges one iteration's outcomes into the run state, in group order.
pub fn merge_iteration(
    state: &mut RunState,
    outcomes: &[SubtaskOutcome],
    iteration: u32,
    test: &[(EntityId, EntityId)],
) -> (IterationRecord, RankingTable) {
    let mut table = RankingTable::new();
    let mut summaries = Vec::new();
    let mut proposals: Vec<ScoredPair> = Vec::new();

    for out in outcomes {
        let g = out.group;
        if state.source_contexts[g].is_none() {
            state.source_contexts[g] = out.source_context.clone();
        }
        if out.status == SubtaskStatus::Ok {
            state.stores[g].update(&out.similarity_update, iteration);
        }
        if let Some(st) = &out.subtask {
            summaries.push(SubtaskSummary {
                group: g,
                source_size: st.source.len(),
                target_size: st.target.len(),
                candidates: st.candidates.len(),
                seeds: st.seeds.len(),
                status: out.status.clone(),
            });
            if out.status == SubtaskStatus::Ok {
                let slot = table.add_subtask(g, st.ranking_targets.clone());
                for r in &out.rankings {
                    table.add_ranking(slot, r.clone());
                }
            }
        } else {
            summaries.push(SubtaskSummary {
                group: g,
                source_size: out.source_context.as_ref().map_or(0, |c| c.len()),
                target_size: 0,
                candidates: 0,
                seeds: 0,
                status: out.status.clone(),
            });
        }
        proposals.extend_from_slice(&out.pseudo);
    }

    // Cross-subtask conflicts: highest score wins, then the lowest source id.
    proposals.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.source.cmp(&b.source)));
    let mut new_pseudo = 0;
    for p in proposals {
        let m = Mapping { source: p.source, target: p.target, provenance: Provenance::Pseudo };
        if state.mapped.try_insert(m) {
            state.pseudo.insert(m).expect("pseudo set mirrors the mapped set");
            new_pseudo += 1;
        }
    }

    let mut predictions = MappingSet::new();
    for (s, t) in table.top1() {
        predictions
            .insert(Mapping { source: s, target: t, provenance: Provenance::Predicted })
            .expect("one ranking per source");
    }
    state.predictions = predictions;

    let record = IterationRecord {
        iteration,
        metrics: evaluate(&table, test),
        mapped: state.mapped.len(),
        new_pseudo,
        subtasks: summaries,
    };
    state.history.push(record.clone());
    (record, table)
}

/// Everything a finished run produced.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub partitions: Vec<Partition>,
    pub state: RunState,
    /// Rankings of the final iteration.
    pub rankings: RankingTable,
    /// Subtasks of the final iteration.
    pub subtasks: Vec<Subtask>,
    pub metrics: Metrics,
}

impl RunOutput {
    pub fn history(&self) -> &[IterationRecord] {
        &self.state.history
    }
}

/// Runs all iterations over prepared partitions.
pub fn run<M: Matcher, E: Executor>(
    config: &RunConfig,
    data: &Dataset,
    partitions: Vec<Partition>,
    matcher: &M,
    executor: &E,
    mut on_iteration: impl FnMut(&IterationRecord),
) -> Result<RunOutput> {
    config.validate()?;
    check_groups(config, &partitions)?;
    let mut state = RunState::new(data.seeds.clone(), partitions.len());
    let env = SubtaskEnv { config, data, matcher };

    let mut last: Option<(RankingTable, Vec<Subtask>)> = None;
    for iteration in 1..=config.iterations {
        let outcomes: Vec<Result<SubtaskOutcome>> =
            executor.map(&partitions, &|p: &Partition| run_subtask(&env, p, &state, iteration));
        let outcomes: Vec<SubtaskOutcome> = outcomes.into_iter().collect::<Result<_>>()?;
        let (record, table) = merge_iteration(&mut state, &outcomes, iteration, &data.test);
        on_iteration(&record);
        let subtasks = outcomes.into_iter().filter_map(|o| o.subtask).collect();
        last = Some((table, subtasks));
    }
    let (rankings, subtasks) = last.expect("at least one iteration");
    let metrics = state.history.last().map(|r| r.metrics).unwrap_or_default();
    Ok(RunOutput { partitions, state, rankings, subtasks, metrics })
}

/// Rejects configurations in which some group cannot fit its source budget.
pub fn check_groups(config: &RunConfig, partitions: &[Partition]) -> Result<()> {
    let budget = config.budget().source_budget();
    if let Some(p) = partitions.iter().max_by_key(|p| (p.unmatched.len(), Reverse(p.index))) {
        if p.unmatched.len() > budget {
            return Err(
                Error::BudgetTooSmall { side: Side::Source, required: p.unmatched.len(), budget }.in_group(p.index)
            );
        }
    }
    Ok(())
}

/// Convenience wrapper: partition, then run.
pub fn run_all<M: Matcher, E: Executor>(
    config: &RunConfig,
    data: &Dataset,
    matcher: &M,
    executor: &E,
) -> Result<RunOutput> {
    config.validate()?;
    let partitions = divide(data, config)?;
    run(config, data, partitions, matcher, executor, |_| {})
}
