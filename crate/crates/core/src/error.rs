use thiserror::Error;

use crate::model::Verdict;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("label {label} is not valid for a qudit of dimension {dim}")]
    InvalidLabel { label: String, dim: usize },

    #[error("invalid dimension {0}: every qudit needs dimension >= 2")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("qudit index {index} out of range for a system of {len} qudits")]
    QuditOutOfRange { index: usize, len: usize },

    #[error("level index out of range: {0}")]
    LevelOutOfRange(String),

    #[error(
        "operator is not Hermitian: max |M - M^dagger| = {max_asymmetry:e} at entry ({row}, {col})"
    )]
    NotHermitian {
        max_asymmetry: f64,
        row: usize,
        col: usize,
    },

    #[error("operator is not unitary: max |U^dagger U - I| = {0:e}")]
    NotUnitary(f64),

    #[error("operator is not traceless: trace = {0:e}")]
    NotTraceless(f64),

    #[error("reference operator is zero")]
    ZeroOperator,

    #[error("majorization violated at prefix index {index}: deficit {deficit:e}")]
    MajorizationViolated { index: usize, deficit: f64 },

    #[error("no positive-support perfect matching while residual mass {residual:e} remains")]
    NoPerfectMatching { residual: f64 },

    #[error("expansion has no coupling terms")]
    EmptyExpansion,

    #[error("qudit subset is empty")]
    EmptySubset,

    #[error("coupling term has no factors")]
    EmptyTerm,

    #[error("TermNotFound: {0} is not in the expansion")]
    TermNotFound(String),

    #[error("term {term} has |h| = {magnitude:e}, below the zero threshold {threshold:e}")]
    TermBelowThreshold {
        term: String,
        magnitude: f64,
        threshold: f64,
    },

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("source coefficient is zero")]
    ZeroCoefficient,

    #[error("weights must be strictly positive, found {0}")]
    NonPositiveWeight(f64),

    #[error("flat branch count {count} exceeds cap {cap}; verify with the effective Hamiltonian instead")]
    BranchCapExceeded { count: u128, cap: u128 },

    #[error("step count must be positive")]
    InvalidSteps,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("commutator vanishes: {0}")]
    ZeroCommutator(String),

    #[error("no constructive certificate for an all-qubit system (verdict: {0})")]
    NotConstructive(Verdict),

    #[error("Hamiltonian is not entangling: {0}")]
    NotEntangling(Verdict),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
