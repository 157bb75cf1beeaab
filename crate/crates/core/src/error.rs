use std::fmt;

use thiserror::Error;

use crate::parser::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("arity mismatch: expected {expected} variables, found {found}")]
    Arity { expected: usize, found: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("zero polynomial has no roots")]
    ZeroPolynomial,

    #[error("size guard: {0}")]
    SizeGuard(String),

    #[error("singular matrix: zero pivot at index {index}")]
    Singular { index: usize },

    #[error(
        "eigenvalue {value} repeated at indices {first} and {second} with non-vanishing coupling; \
         not diagonalizable under the distinctness condition (Jordan fallback out of scope)"
    )]
    RepeatedEigenvalue { value: String, first: usize, second: usize },

    #[error("matrix is not upper triangular: entry ({row}, {col}) is nonzero")]
    NotTriangular { row: usize, col: usize },

    #[error("shift not found in exact mode; supply --shift or use --mode float")]
    ShiftNotFound,

    #[error("exact triangularization unavailable: {0}; supply --matrix-a or use --mode float")]
    TriangularizationUnavailable(String),

    #[error("system not shifted: constant term of equation {equation} is nonzero")]
    NotShifted { equation: usize },

    #[error("supplied shift is not a fixed point: {0}")]
    InvalidShift(String),

    #[error("non-finite coefficient: {0}")]
    NonFinite(String),

    #[error("depth-one system required, found depth {0}")]
    DepthMismatch(usize),

    #[error("json: {0}")]
    Json(String),

    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Pipeline stage that produced a [`SolveError`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    DepthReduction,
    Shift,
    Admissibility,
    Triangularization,
    Transform,
    Transition,
    Diagonalization,
    Assembly,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::DepthReduction => "depth-reduction",
            Stage::Shift => "shift",
            Stage::Admissibility => "admissibility",
            Stage::Triangularization => "triangularization",
            Stage::Transform => "transform",
            Stage::Transition => "transition",
            Stage::Diagonalization => "diagonalization",
            Stage::Assembly => "assembly",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An [`Error`] annotated with the pipeline stage it came from.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{stage}: {source}")]
pub struct SolveError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl SolveError {
    pub fn new(stage: Stage, source: Error) -> Self {
        Self { stage, source }
    }
}

pub(crate) trait StageExt<T> {
    fn at(self, stage: Stage) -> Result<T, SolveError>;
}

impl<T> StageExt<T> for Result<T> {
    fn at(self, stage: Stage) -> Result<T, SolveError> {
        self.map_err(|e| SolveError::new(stage, e))
    }
}
