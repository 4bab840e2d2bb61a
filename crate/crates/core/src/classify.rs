//! Structural verdicts: sign patterns, diagonal dominance, M-matrix and
//! potential status.
//!
//! Tolerances are one-sided and absolute: an entry counts as nonnegative
//! when it is `>= -tol`, and a dominance inequality holds when its slack is
//! `>= -tol`.

use serde::{Deserialize, Serialize};

use crate::linalg::{LuFactorization, Matrix};

pub const DEFAULT_TOL: f64 = 1e-9;

pub fn is_nonnegative(a: &Matrix, tol: f64) -> bool {
    a.as_slice().iter().all(|&v| v >= -tol)
}

/// All off-diagonal entries are `<= tol`.
pub fn is_z_matrix(m: &Matrix, tol: f64) -> bool {
    let n = m.n();
    (0..n).all(|i| (0..n).all(|j| i == j || m.get(i, j) <= tol))
}

pub fn has_nonnegative_diagonal(m: &Matrix, tol: f64) -> bool {
    (0..m.n()).all(|i| m.get(i, i) >= -tol)
}

pub fn is_symmetric(a: &Matrix, tol: f64) -> bool {
    let n = a.n();
    (0..n).all(|i| (i + 1..n).all(|j| (a.get(i, j) - a.get(j, i)).abs() <= tol))
}

/// `|M_ii| - sum_{j != i} |M_ij|` for every row.
pub fn row_dominance_slack(m: &Matrix) -> Vec<f64> {
    m.rows()
        .enumerate()
        .map(|(i, row)| {
            let off: f64 = row
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, v)| v.abs())
                .sum();
            row[i].abs() - off
        })
        .collect()
}

/// `|M_ii| >= sum_{j != i} |M_ij| - tol` for every row. On a Z-matrix with
/// nonnegative diagonal this is `M 1 >= -tol`.
pub fn is_row_diag_dominant(m: &Matrix, tol: f64) -> bool {
    row_dominance_slack(m).iter().all(|&s| s >= -tol)
}

pub fn is_col_diag_dominant(m: &Matrix, tol: f64) -> bool {
    is_row_diag_dominant(&m.transpose(), tol)
}

/// Z-matrix, nonsingular, with entrywise nonnegative inverse.
pub fn is_m_matrix(m: &Matrix, tol: f64) -> bool {
    if !is_z_matrix(m, tol) {
        return false;
    }
    match LuFactorization::new(m).inverse() {
        Ok(inv) => is_nonnegative(&inv, tol),
        Err(_) => false,
    }
}

/// Everything [`classify`] learns about a matrix `U`.
///
/// `nonnegative`, `symmetric`, `nonsingular` and `m_matrix` describe `U`
/// itself. `z_matrix`, `nonneg_diagonal`, `row_diag_dominant` and
/// `col_diag_dominant` describe the inverse `M = U^-1` and are `false` when
/// `U` is singular.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub n: usize,
    pub tol: f64,
    pub nonnegative: bool,
    pub symmetric: bool,
    pub nonsingular: bool,
    pub m_matrix: bool,
    pub z_matrix: bool,
    pub nonneg_diagonal: bool,
    pub row_diag_dominant: bool,
    pub col_diag_dominant: bool,
    pub inverse_m_matrix: bool,
    pub potential: bool,
    pub double_potential: bool,
    pub rcond: f64,
    pub inverse: Option<Matrix>,
    /// `mu = M 1`, the equilibrium vector of `U`.
    pub mu: Option<Vec<f64>>,
    /// `nu = M^t 1`, the equilibrium vector of `U^t`.
    pub nu: Option<Vec<f64>>,
    pub singular_reason: Option<String>,
}

pub fn classify(u: &Matrix, tol: f64) -> ClassificationReport {
    let n = u.n();
    let nonnegative = is_nonnegative(u, tol);
    let symmetric = is_symmetric(u, tol);
    let lu = LuFactorization::new(u);
    let rcond = lu.rcond();

    let mut report = ClassificationReport {
        n,
        tol,
        nonnegative,
        symmetric,
        nonsingular: false,
        m_matrix: false,
        z_matrix: false,
        nonneg_diagonal: false,
        row_diag_dominant: false,
        col_diag_dominant: false,
        inverse_m_matrix: false,
        potential: false,
        double_potential: false,
        rcond,
        inverse: None,
        mu: None,
        nu: None,
        singular_reason: None,
    };

    let inverse = match lu.inverse() {
        Ok(inv) => inv,
        Err(_) => {
            report.singular_reason = Some(format!(
                "pivot below {:e} x max|U_ij| during LU factorization",
                crate::linalg::SINGULAR_PIVOT_RTOL
            ));
            return report;
        }
    };

    report.nonsingular = true;
    report.m_matrix = is_z_matrix(u, tol) && is_nonnegative(&inverse, tol);
    report.z_matrix = is_z_matrix(&inverse, tol);
    report.nonneg_diagonal = has_nonnegative_diagonal(&inverse, tol);
    report.row_diag_dominant = is_row_diag_dominant(&inverse, tol);
    report.col_diag_dominant = is_col_diag_dominant(&inverse, tol);
    // (U^-1)^-1 = U, so the M-matrix test on the inverse needs no second solve.
    report.inverse_m_matrix = nonnegative && report.z_matrix;
    report.potential = report.inverse_m_matrix && report.row_diag_dominant;
    // U^t has inverse M^t: same M-matrix status, row dominance becomes column dominance.
    report.double_potential = report.potential && report.col_diag_dominant;
    report.mu = Some(inverse.row_sums());
    report.nu = Some(inverse.col_sums());
    report.inverse = Some(inverse);
    report
}
