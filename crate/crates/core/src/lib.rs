//! Closed-form solutions of polynomial recurrence systems.
//!
//! The pipeline parses a recurrence system, reduces it to depth one, moves a
//! fixed point to the origin, triangularizes the linear part, builds the
//! truncated Carleman transition matrix over the non-redundant monomial
//! basis, diagonalizes it by back substitution and assembles one exponential
//! sum in the iteration index per initial-condition monomial.

pub mod carleman;
pub mod error;
pub mod parser;
pub mod recurrence;
pub mod scalar;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result, SolveError, Stage};
pub use scalar::{Matrix, Mode, Monomial, Poly, Scalar};
