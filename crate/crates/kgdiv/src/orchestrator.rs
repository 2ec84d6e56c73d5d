//! End-to-end runs over dataset directories, with persistence.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use kgdiv_core::matcher::{BuiltinMatcher, MatchError, MatchTask, Matcher, SimilarityMatrix};
use kgdiv_core::metrics::{evaluate, Metrics};
use kgdiv_core::partition::{assign, partitions_from_assignment, Partition};
use kgdiv_core::pipeline::{self, Dataset, Executor, IterationRecord, RunConfig, RunOutput};
use kgdiv_core::{KnowledgeGraph, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::external::{ExternalMatcher, DEFAULT_TIMEOUT_SECS};
use crate::io;

/// Runs subtasks on a dedicated rayon pool; results keep input order.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    pub fn new(threads: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .thread_name(|i| format!("subtask-{i}"))
            .build()?;
        Ok(Self { pool })
    }
}

impl Executor for RayonExecutor {
    fn map<T: Sync, R: Send>(&self, items: &[T], f: &(dyn Fn(&T) -> R + Sync)) -> Vec<R> {
        self.pool.install(|| items.par_iter().map(f).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum MatcherSpec {
    Builtin,
    External(String),
}

impl FromStr for MatcherSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "builtin" => Ok(Self::Builtin),
            _ => match s.strip_prefix("external:") {
                Some(cmd) if !cmd.trim().is_empty() => Ok(Self::External(cmd.to_owned())),
                _ => Err(format!("expected `builtin` or `external:CMD`, got {s:?}")),
            },
        }
    }
}

impl fmt::Display for MatcherSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Builtin => f.write_str("builtin"),
            Self::External(cmd) => write!(f, "external:{cmd}"),
        }
    }
}

impl From<MatcherSpec> for String {
    fn from(m: MatcherSpec) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for MatcherSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

pub enum AnyMatcher {
    Builtin(BuiltinMatcher),
    External(ExternalMatcher),
}

impl AnyMatcher {
    pub fn from_spec(spec: &MatcherSpec, timeout: Duration) -> Self {
        match spec {
            MatcherSpec::Builtin => Self::Builtin(BuiltinMatcher::default()),
            MatcherSpec::External(cmd) => {
                let mut m = ExternalMatcher::new(cmd.clone());
                m.timeout = timeout;
                Self::External(m)
            }
        }
    }
}

impl Matcher for AnyMatcher {
    fn match_subtask(&self, task: &MatchTask<'_>) -> Result<SimilarityMatrix, MatchError> {
        match self {
            Self::Builtin(m) => m.match_subtask(task),
            Self::External(m) => m.match_subtask(task),
        }
    }
}

/// Runs the pipeline in memory with a `config.parallelism`-thread pool.
pub fn execute<M: Matcher>(
    config: &RunConfig,
    data: &Dataset,
    assignment: Option<&[u32]>,
    matcher: &M,
    on_iteration: impl FnMut(&IterationRecord),
) -> Result<RunOutput> {
    config.validate()?;
    let partitions = match assignment {
        Some(a) => partitions_from_assignment(&data.kg_s, a, config.n_subtasks)?,
        None => {
            let a = assign(&data.kg_s, config.n_subtasks, config.balance_slack, config.rng_seed)?;
            partitions_from_assignment(&data.kg_s, &a, config.n_subtasks)?
        }
    };
    let partitions: Vec<Partition> = partitions.into_iter().map(|p| p.with_seeds(&data.seeds)).collect();
    let executor = RayonExecutor::new(config.parallelism)?;
    Ok(pipeline::run(config, data, partitions, matcher, &executor, on_iteration)?)
}

/// Everything needed to reproduce a run, persisted as `run.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub data: PathBuf,
    pub out: PathBuf,
    pub matcher: MatcherSpec,
    pub matcher_timeout_secs: u64,
    pub partition_file: Option<PathBuf>,
    pub config: RunConfig,
}

impl RunSpec {
    pub fn new(data: PathBuf, out: PathBuf, config: RunConfig) -> Self {
        Self {
            data,
            out,
            matcher: MatcherSpec::Builtin,
            matcher_timeout_secs: DEFAULT_TIMEOUT_SECS,
            partition_file: None,
            config,
        }
    }
}

/// Loads the dataset, runs every iteration and writes all artifacts.
pub fn run(spec: &RunSpec) -> Result<Metrics> {
    spec.config.validate()?;
    let started = Instant::now();
    let data = io::load_dataset(&spec.data)?;
    log::info!(
        "loaded {} source / {} target entities, {} seeds, {} test pairs",
        data.kg_s.entity_count(),
        data.kg_t.entity_count(),
        data.seeds.len(),
        data.test.len()
    );
    let assignment = match &spec.partition_file {
        Some(path) => Some(io::read_partition_file(path, &data.kg_s)?),
        None => None,
    };
    let matcher = AnyMatcher::from_spec(&spec.matcher, Duration::from_secs(spec.matcher_timeout_secs));

    fs::create_dir_all(&spec.out).with_context(|| format!("creating {}", spec.out.display()))?;
    io::write_json(&spec.out.join(io::RUN_FILE), spec)?;

    let output = execute(&spec.config, &data, assignment.as_deref(), &matcher, |r| {
        log::info!(
            "iteration {}: hits@1 {:.4} hits@5 {:.4} mrr {:.4} coverage {:.4}, {} mapped (+{} pseudo)",
            r.iteration,
            r.metrics.hits1,
            r.metrics.hits5,
            r.metrics.mrr,
            r.metrics.coverage_recall,
            r.mapped,
            r.new_pseudo
        );
    })?;
    persist(&spec.out, &data, &output)?;
    log::info!("run finished in {:.1?}", started.elapsed());
    Ok(output.metrics)
}

pub fn persist(out: &Path, data: &Dataset, output: &RunOutput) -> Result<()> {
    let predictions: Vec<_> = output.state.predictions.iter().map(|m| (m.source, m.target)).collect();
    io::write_predictions(&out.join(io::PREDICTIONS_FILE), &predictions, &data.kg_s, &data.kg_t)?;
    io::write_rankings(&out.join(io::RANKINGS_FILE), &output.rankings, &data.kg_s, &data.kg_t)?;
    let report = io::MetricsReport { metrics: output.metrics, history: output.history().to_vec() };
    io::write_json(&out.join(io::METRICS_FILE), &report)?;
    let assignment = kgdiv_core::partition::assignment_of(&output.partitions, data.kg_s.entity_count());
    let mut w = BufWriter::new(File::create(out.join(io::PARTITION_FILE))?);
    io::write_partition(&mut w, &data.kg_s, &assignment)?;
    w.flush()?;
    io::write_manifests(&out.join(io::MANIFEST_DIR), &output.subtasks, &data.kg_s, &data.kg_t)?;
    Ok(())
}

/// Recomputes metrics from a run directory's rankings file.
pub fn eval(out: &Path, data_override: Option<&Path>) -> Result<Metrics> {
    let data_dir = match data_override {
        Some(d) => d.to_owned(),
        None => {
            let spec: RunSpec = io::read_json(&out.join(io::RUN_FILE))?;
            spec.data
        }
    };
    let kg_s = io::load_kg(&data_dir.join(io::SOURCE_TRIPLES), Side::Source)?;
    let kg_t = io::load_kg(&data_dir.join(io::TARGET_TRIPLES), Side::Target)?;
    let test = io::load_mappings(&data_dir.join(io::TEST_LINKS), &kg_s, &kg_t, kgdiv_core::Provenance::Seed)?;
    let test: Vec<_> = test.iter().map(|m| (m.source, m.target)).collect();
    let table = io::read_rankings(&out.join(io::RANKINGS_FILE), &kg_s, &kg_t)?;
    Ok(evaluate(&table, &test))
}

/// Computes the built-in partition of a dataset's source graph.
pub fn partition(data_dir: &Path, n_parts: usize, balance_slack: f64, seed: u64) -> Result<(KnowledgeGraph, Vec<u32>)> {
    if n_parts == 0 {
        bail!("number of subtasks must be positive");
    }
    let kg_s = io::load_kg(&data_dir.join(io::SOURCE_TRIPLES), Side::Source)?;
    let assignment = assign(&kg_s, n_parts, balance_slack, seed)?;
    Ok((kg_s, assignment))
}
