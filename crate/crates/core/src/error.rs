use thiserror::Error;

use crate::stream::{Edge, Violation};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid stream at seq {seq}: {violation}")]
    InvalidStream { seq: u64, violation: Violation },

    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: u64, n: usize },

    #[error("self-loop on vertex {0}")]
    SelfLoop(u64),

    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("edge {edge} is not incident on vertex {owner}")]
    NotIncident { edge: Edge, owner: u32 },

    #[error("edge {0} conflicts with the matching")]
    NotAMatching(Edge),

    #[error("operation requires {expected} mode")]
    ModeMismatch { expected: &'static str },

    #[error("sketches are not compatible: {0}")]
    SketchMismatch(&'static str),

    #[error("corrupt sketch encoding: {0}")]
    Decode(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
