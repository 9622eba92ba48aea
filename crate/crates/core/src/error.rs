use thiserror::Error;

use crate::linalg::LinalgError;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid algebra specification: {0}")]
    InvalidSpec(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("Kraus family is not unital (defect {defect:e})")]
    NotUnital { defect: f64 },
    #[error("Kraus operator {index} is not in the algebra (distance {distance:e})")]
    NotInner { index: usize, distance: f64 },
    #[error("state is not faithful (minimal eigenvalue {min_eigenvalue:e})")]
    NotFaithful { min_eigenvalue: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("state density is not an element of the algebra (distance {distance:e})")]
    StateNotInAlgebra { distance: f64 },
    #[error("channel does not preserve the state (defect {defect:e})")]
    NotPhiPreserving { defect: f64 },
    #[error("channel does not map the algebra into itself (distance {distance:e})")]
    NotAlgebraPreserving { distance: f64 },
    #[error("map is not completely positive (minimal Choi eigenvalue {min_eigenvalue:e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },
    #[error("numerically indeterminate: {0}")]
    Indeterminate(String),
    #[error("domination fails: c*tau - eta is not completely positive (minimal eigenvalue {min_eigenvalue:e})")]
    DominationFails { min_eigenvalue: f64 },
    #[error("linear system is rank deficient ({rank} of {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },
    #[error("the two Kraus families represent different maps (distance {distance:e})")]
    ChannelsDiffer { distance: f64 },
    #[error("no unitary intertwiner exists (unitarity defect {defect:e})")]
    NoUnitarySolution { defect: f64 },
    #[error("coefficient array is not a kernel element (residual {residual:e})")]
    NotInKernel { residual: f64 },
    #[error("coefficient array is invalid: {0}")]
    InvalidCoefficients(String),
    #[error("operation requires a multiplicity-free algebra")]
    NotMultiplicityFree,
    #[error("operation requires a single block of multiplicity one")]
    NotFullMatrixAlgebra,
    #[error("coupling marginal defect {defect:e}")]
    MarginalDefect { defect: f64 },
    #[error("map is not reproduced by the solved coefficients (residual {residual:e})")]
    ReconstructionFailed { residual: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True when the failure is a refused rank or sign decision rather than bad input.
    pub fn is_indeterminate(&self) -> bool {
        matches!(
            self,
            Error::Indeterminate(_) | Error::Linalg(LinalgError::Indeterminate { .. })
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
