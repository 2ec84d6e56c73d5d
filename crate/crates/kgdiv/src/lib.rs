//! File formats, external matchers, parallel execution and the command-line
//! front end for the `kgdiv-core` task-division engine.
//!
//! A dataset directory holds `rel_triples_1`, `rel_triples_2`,
//! `ent_links_train` and `ent_links_test`. A run writes predictions,
//! rankings, metrics (with per-iteration history), the partition used and one
//! manifest per subtask into its output directory.

pub mod external;
pub mod io;
pub mod orchestrator;
pub mod synthetic;

pub use kgdiv_core as core;
pub use orchestrator::{eval, execute, run, MatcherSpec, RayonExecutor, RunSpec};
