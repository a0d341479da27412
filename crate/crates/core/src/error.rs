use std::{io, path::PathBuf};

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),
    #[error("tree has no root node")]
    NoRoot,
    #[error("tree has more than one root: {0:?}")]
    MultipleRoots(Vec<String>),
    #[error("node `{id}` references missing parent `{parent}`")]
    OrphanParent { id: String, parent: String },
    #[error("nodes {0:?} are not reachable from the root (cycle)")]
    CycleDetected(Vec<String>),
    #[error("root `{0}` must not carry a polarity")]
    PolarityOnRoot(String),
    #[error("non-root node `{0}` has no polarity")]
    MissingPolarity(String),
    #[error("tree has no edges")]
    NoEdges,

    #[error("attack references unknown argument `{0}`")]
    UnknownArgument(String),
    #[error("attack graph contains a cycle")]
    NotAcyclic,
    #[error("extension enumeration is limited to {limit} arguments, got {size}")]
    TooLarge { size: usize, limit: usize },
    #[error("state assignment covers {states} nodes but the tree has {nodes}")]
    StateMismatch { states: usize, nodes: usize },

    #[error("{name} = {value} is not a probability in [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("invalid degree model: {0}")]
    InvalidModel(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no tree of depth {depth} after {attempts} attempts")]
    DepthUnreachable { depth: usize, attempts: u32 },

    #[error("missing leaf profile: {0}")]
    MissingLeafProfile(String),
    #[error("not enough levels: {0}")]
    InsufficientLevels(String),
    #[error("ensemble is empty")]
    EmptyEnsemble,

    #[error("need at least {needed} positive in-degree samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("no k_min candidate leaves at least {min_tail} tail samples")]
    InsufficientTail { min_tail: usize },
    #[error("cannot read {}: {source}", path.display())]
    UnreadablePath { path: PathBuf, source: io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DuplicateId(_) => "DuplicateId",
            Error::NoRoot => "NoRoot",
            Error::MultipleRoots(_) => "MultipleRoots",
            Error::OrphanParent { .. } => "OrphanParent",
            Error::CycleDetected(_) => "CycleDetected",
            Error::PolarityOnRoot(_) => "PolarityOnRoot",
            Error::MissingPolarity(_) => "MissingPolarity",
            Error::NoEdges => "NoEdges",
            Error::UnknownArgument(_) => "UnknownArgument",
            Error::NotAcyclic => "NotAcyclic",
            Error::TooLarge { .. } => "TooLarge",
            Error::StateMismatch { .. } => "StateMismatch",
            Error::InvalidProbability { .. } => "InvalidProbability",
            Error::InvalidModel(_) => "InvalidModel",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::DepthUnreachable { .. } => "DepthUnreachable",
            Error::MissingLeafProfile(_) => "MissingLeafProfile",
            Error::InsufficientLevels(_) => "InsufficientLevels",
            Error::EmptyEnsemble => "EmptyEnsemble",
            Error::InsufficientSamples { .. } => "InsufficientSamples",
            Error::InsufficientTail { .. } => "InsufficientTail",
            Error::UnreadablePath { .. } => "UnreadablePath",
            Error::Json(_) => "Json",
            Error::Io(_) => "Io",
        }
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}
