use thiserror::Error;

use crate::locc::Party;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("qubit {index} out of range for a {num_qubits}-qubit register")]
    TargetOutOfRange { index: usize, num_qubits: usize },

    #[error("duplicate target qubit {0}")]
    DuplicateTarget(usize),

    #[error("gate is not unitary (max deviation {deviation:e})")]
    NonUnitaryGate { deviation: f64 },

    #[error("amplitude vector is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("bad index {0}")]
    BadIndex(usize),

    #[error("not a permutation of 1..={n_levels}: {map:?}")]
    BadPermutation { n_levels: usize, map: Vec<usize> },

    #[error("block {block} is rank deficient (min singular value {min_singular:e})")]
    RankDeficientBlock { block: usize, min_singular: f64 },

    #[error("operator is not unitary (max deviation {deviation:e})")]
    NonUnitary { deviation: f64 },

    #[error("invalid restricted operator: {0}")]
    InvalidOperator(String),

    #[error("not a block permutation: {0}")]
    NotBlockPermutation(String),

    #[error("ambiguous block structure: block ({row}, {col}) has max entry {magnitude:e}")]
    AmbiguousStructure { row: usize, col: usize, magnitude: f64 },

    #[error("Bell pair {0} already consumed")]
    EntanglementAlreadyConsumed(usize),

    #[error("qubit {0} used as both source and Bell-pair half")]
    QubitCollision(usize),

    #[error("insufficient entanglement: need {needed} unconsumed pairs, have {available}")]
    InsufficientEntanglement { needed: usize, available: usize },

    #[error("no shared Bell pair on qubits ({0}, {1})")]
    NoSuchPair(usize, usize),

    #[error("stage violation: expected {expected}, found {found}")]
    StageViolation { expected: String, found: String },

    #[error("locality violation: {party:?} acted on qubit {qubit} owned by {owner:?}")]
    LocalityViolation { party: Party, qubit: usize, owner: Party },

    #[error("operation requires unitary mode")]
    NonUnitaryMode,

    #[error("subsystem is entangled with the rest of the register (purity {0})")]
    NotProductState(f64),

    #[error("no branch matches the requested outcome")]
    NoMatchingBranch,

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
