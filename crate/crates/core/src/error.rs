use std::path::PathBuf;

use crate::graph::Edge;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is not a tree: {0}")]
    NotATree(String),

    #[error("skeleton mask contains a cycle through pixel ({x}, {y})")]
    SkeletonCycle { x: u32, y: u32 },

    #[error("brute-force MST refused for {0} nodes (limit is 8)")]
    TooManyNodes(usize),

    #[error("pair ({}, {}) is both added and removed by the projection", .0.0, .0.1)]
    ConflictingDiff(Edge),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed rule or sequence: {0}")]
    MalformedRule(String),

    #[error("node cap exceeded: {nodes} nodes > cap {cap}")]
    NodeCapExceeded { nodes: usize, cap: usize },

    #[error("gave up after {attempts} attempts for sample seed {seed:#018x}")]
    RetriesExhausted { seed: u64, attempts: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] ::image::ImageError),
}

impl Error {
    pub fn file(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::File { path: path.into(), message: message.to_string() }
    }
}
