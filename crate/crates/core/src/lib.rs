//! Division of a large entity-alignment task into size-bounded subtasks.
//!
//! Given a source and a target knowledge graph plus seed mappings, the engine
//! partitions the source graph, discovers counterpart candidates on the target
//! side for each group of unmatched source entities, selects evidence-rich
//! context graphs under a total size budget, and runs a matcher per subtask in
//! an iterative loop that feeds mutual-nearest pseudo mappings back into the
//! anchor set.
//!
//! The crate is `no_std` (with `alloc`). File formats, subprocess matchers and
//! thread pools live in the companion `kgdiv` crate; everything here is pure
//! computation over immutable graphs.
//!
//! Module map:
//!
//! - [`graph`], [`mapping`]: interned graphs, symmetric adjacency, mapping sets.
//! - [`partition`]: multilevel min-cut partitioning of the source graph.
//! - [`discovery`]: locality and similarity weighted counterpart candidates.
//! - [`evidence`]: scalar evidence passing, informativeness and drop costs.
//! - [`context`]: size-budgeted source/target context graphs.
//! - [`matcher`]: similarity matrices, the built-in overlap matcher, rankings.
//! - [`metrics`]: Hits@k, MRR and coverage recall.
//! - [`pipeline`]: the iterative subtask loop and its iteration barrier.
#![no_std]

extern crate alloc;

pub mod context;
pub mod discovery;
pub mod error;
pub mod evidence;
pub mod graph;
pub mod mapping;
pub mod matcher;
pub mod metrics;
pub mod partition;
pub mod pipeline;
pub mod set;

pub use error::Error;
pub use graph::{EntityId, KgBuilder, KnowledgeGraph, RelationId, Side, Triple};
pub use mapping::{Mapping, MappingSet, Provenance};
pub use set::EntitySet;
