//! Dense small-matrix kernel.

mod lu;
mod matrix;

use thiserror::Error;

pub use lu::{invert, lu_factor, solve, LuFactorization, SINGULAR_PIVOT_RTOL};
pub use matrix::{dot, negative_part, norm_inf, positive_part, Matrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix must have at least one row")]
    Empty,
    #[error("shape mismatch: expected {expected} entries, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is singular")]
    Singular,
}
