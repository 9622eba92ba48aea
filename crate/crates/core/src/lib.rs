//! Extremality certificates for unital completely positive maps on
//! finite-dimensional von Neumann algebras.

pub mod algebra;
pub mod channel;
pub mod coupling;
pub mod error;
pub mod extremal;
pub mod io;
pub mod linalg;
pub mod modular;
pub mod random;

pub use algebra::{AlgebraModel, AlgebraSpec, Block, Membership, Which};
pub use channel::{DensityState, KrausChannel};
pub use error::{Error, Result};
pub use extremal::{Certificate, CoefficientArray, Verdict};
pub use linalg::{ComplexMatrix, ToleranceConfig, C64};
