use alloc::string::String;

use crate::graph::{EntityId, Side};
use crate::matcher::MatchError;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0} graph has no triples")]
    EmptyGraph(Side),

    #[error("entity {entity} is mapped more than once on the {side} side")]
    NotOneToOne { side: Side, entity: String },

    #[error("entity id {id} is out of range for the {side} graph")]
    InvalidEntity { side: Side, id: EntityId },

    #[error("cannot split {entities} entities into {parts} parts")]
    TooManyParts { parts: usize, entities: usize },

    #[error("number of parts must be at least 1")]
    ZeroParts,

    #[error("assignment covers {got} entities, graph has {expected}")]
    AssignmentLength { got: usize, expected: usize },

    #[error("entity {entity} assigned to part {part}, only {parts} parts exist")]
    PartOutOfRange { entity: EntityId, part: usize, parts: usize },

    #[error("no anchors available for locality weighting")]
    NoLocalEvidence,

    #[error("entity {0} is unmatched and can never be dropped from its context")]
    NotDroppable(EntityId),

    #[error("{side} context budget {budget} cannot hold the {required} protected entities")]
    BudgetTooSmall { side: Side, required: usize, budget: usize },

    #[error("group {group}: {source}")]
    Group { group: usize, source: alloc::boxed::Box<Error> },

    #[error("subtask size {size} exceeds the limit {limit}")]
    SizeViolation { size: usize, limit: usize },

    #[error("subtask has no counterpart candidates")]
    NoCandidates,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Match(#[from] MatchError),
}

impl Error {
    pub(crate) fn in_group(self, group: usize) -> Error {
        Error::Group { group, source: alloc::boxed::Box::new(self) }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
