//! Potential matrices, inverse M-matrices, and the inner-product certificates
//! that characterize them.
//!
//! The crate is organized bottom-up:
//!
//! * [`linalg`]: dense matrices and LU with partial pivoting.
//! * [`lp`]: a small dense simplex used by the definitional principle checks.
//! * [`classify`]: membership tests for the matrix classes.
//! * [`scaling`]: the reciprocal row/column-sum scalings.
//! * [`certificates`]: evaluation, witness search and decision of the certificates.
//! * [`principles`]: complete maximum principle and domination principle.
//! * [`generators`]: seeded random matrices for each class.
//! * [`io`]: the plain-text matrix file format.

use serde::{Deserialize, Serialize};

pub mod certificates;
pub mod classify;
pub mod generators;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod principles;
pub mod scaling;

pub use certificates::{
    decide, eval, falsify, structural_witness, CertificateError, CertificateOutcome, CertificateStatus,
    Condition, Witness,
};
pub use classify::{classify, ClassificationReport, DEFAULT_TOL};
pub use generators::{generate, GenClass, GenError, GenSpec};
pub use io::{parse_matrix, read_matrix_file, write_matrix, ParseError, ReadError};
pub use linalg::{invert, LinalgError, LuFactorization, Matrix};
pub use principles::{cmp_dp_bridge, satisfies_cmp, satisfies_dp, PrincipleStatus, PrincipleVerdict};
pub use scaling::{normalize_column, normalize_double, DiagonalScaling, ScalingError};

/// Knobs shared by the decision procedures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    /// Classification tolerance.
    pub tol: f64,
    /// Functional evaluations allowed to a witness search.
    pub budget: u64,
    pub seed: u64,
    /// Largest dimension for the exhaustive support sweeps.
    pub nmax: usize,
    /// Box bound for the principle LPs.
    pub box_bound: f64,
    /// Use the support sweep even when the inverse is available.
    pub definitional: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            budget: 100_000,
            seed: 0,
            nmax: 12,
            box_bound: 1e3,
            definitional: false,
        }
    }
}
