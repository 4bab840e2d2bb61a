//! Inner-product certificates for conditions (4), (5), (6) and (M).
//!
//! * (4): `<(U x - 1)^+, x> >= 0`. Implies `U` is a potential; holds for every double potential.
//! * (5): `<(U x - D^-1 1)^+, D E^-1 x> >= 0`. Equivalent to `U` being an inverse M-matrix.
//! * (6): `<(U x - 1)^+, E^-1 x> >= 0`. Equivalent to `U` being a potential.
//! * (M): `<(x - 1)^+, M x> >= 0`. Implies the Z/row-dominance structure of `M`;
//!   holds when `M` is a row and column dominant Z-matrix.
//!
//! Deciding (4) and (M) exactly is open in the gap between the two
//! implications, so [`CertificateOutcome`] is three-valued.

mod functional;
mod search;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{
    classify, has_nonnegative_diagonal, is_col_diag_dominant, is_nonnegative, is_row_diag_dominant,
    is_z_matrix,
};
use crate::linalg::{dot, positive_part, LuFactorization, Matrix};
use crate::principles::{satisfies_cmp, PrincipleStatus, Violation};
use crate::scaling::{col_scaling, normalize_column, normalize_double, row_scaling, ScalingError};
use crate::Settings;

pub use functional::FAILS_RTOL;
pub use search::DEFAULT_RESTARTS;

use functional::Functional;
use search::{normalize, random_search, Candidate};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    C4,
    C5,
    C6,
    CM,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::C4 => "4",
            Condition::C5 => "5",
            Condition::C6 => "6",
            Condition::CM => "M",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertificateError {
    #[error("dimension mismatch: matrix is {n}x{n}, vector has {len} entries")]
    Dimension { n: usize, len: usize },
    #[error(transparent)]
    Scaling(#[from] ScalingError),
    #[error("matrix has a negative entry; the certificate assumes a nonnegative matrix")]
    NotNonnegative,
    #[error("perturbation parameter must be positive, got {0}")]
    NonPositiveTheta(f64),
}

/// A point where a certificate functional is negative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub condition: Condition,
    pub x: Vec<f64>,
    pub value: f64,
}

impl Witness {
    /// Re-evaluates the functional on `a` and checks it reproduces a negative value.
    pub fn verify(&self, a: &Matrix) -> bool {
        match eval(self.condition, a, &self.x) {
            Ok(v) => v < 0.0 && (v - self.value).abs() <= 1e-9 * (1.0 + self.value.abs()),
            Err(_) => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateStatus {
    Holds,
    Fails,
    Unknown,
}

impl fmt::Display for CertificateStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Which argument produced a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    /// Double potentials satisfy (4).
    DoublePotential,
    /// `U` and `U^t` both satisfy the complete maximum principle, so (4) holds.
    BilateralCmp,
    /// (5) is equivalent to being an inverse M-matrix.
    InverseMMatrix,
    /// (6) is equivalent to being a potential.
    Potential,
    /// Row and column dominant Z-matrices with nonnegative diagonal satisfy (M).
    DominantZMatrix,
    /// `U` is not a potential (resp. not an inverse M-matrix), so a witness must exist.
    NotPotential,
    NotInverseMMatrix,
    /// `M` violates the Z / nonnegative-diagonal / row-dominance structure.
    StructuralViolation,
    /// A complete-maximum-principle violation of `U` doubles as a (4) witness.
    CmpViolation,
    /// Neither implication applies; verdict comes from search alone.
    Search,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateOutcome {
    pub condition: Condition,
    pub status: CertificateStatus,
    pub basis: Basis,
    pub witness: Option<Witness>,
    pub evaluations: u64,
    pub diagnostic: Option<String>,
}

impl CertificateOutcome {
    fn holds(condition: Condition, basis: Basis) -> Self {
        Self {
            condition,
            status: CertificateStatus::Holds,
            basis,
            witness: None,
            evaluations: 0,
            diagnostic: None,
        }
    }

    fn from_search(condition: Condition, basis: Basis, found: Found, budget: u64) -> Self {
        match found.witness {
            Some(w) => Self {
                condition,
                status: CertificateStatus::Fails,
                basis,
                witness: Some(w),
                evaluations: found.evaluations,
                diagnostic: None,
            },
            None => Self {
                condition,
                status: CertificateStatus::Unknown,
                basis,
                witness: None,
                evaluations: found.evaluations,
                diagnostic: Some(format!(
                    "no witness below the {FAILS_RTOL:e} relative threshold after {} of {budget} evaluations",
                    found.evaluations
                )),
            },
        }
    }
}

fn check_dim(a: &Matrix, x: &[f64]) -> Result<(), CertificateError> {
    if x.len() != a.n() {
        return Err(CertificateError::Dimension {
            n: a.n(),
            len: x.len(),
        });
    }
    Ok(())
}

/// `<(U x - 1)^+, x>`.
pub fn eval_cond4(u: &Matrix, x: &[f64]) -> Result<f64, CertificateError> {
    check_dim(u, x)?;
    let shifted: Vec<f64> = u.mul_vec(x).iter().map(|v| v - 1.0).collect();
    Ok(dot(&positive_part(&shifted), x))
}

/// `<(U x - D^-1 1)^+, D E^-1 x>`.
pub fn eval_cond5(u: &Matrix, x: &[f64]) -> Result<f64, CertificateError> {
    check_dim(u, x)?;
    let d = row_scaling(u)?;
    let e = col_scaling(u)?;
    let shifted: Vec<f64> = u
        .mul_vec(x)
        .iter()
        .zip(d.inverse_diag())
        .map(|(v, r)| v - r)
        .collect();
    let weighted = d.apply(&e.apply_inverse(x));
    Ok(dot(&positive_part(&shifted), &weighted))
}

/// `<(U x - 1)^+, E^-1 x>`.
pub fn eval_cond6(u: &Matrix, x: &[f64]) -> Result<f64, CertificateError> {
    check_dim(u, x)?;
    let e = col_scaling(u)?;
    let shifted: Vec<f64> = u.mul_vec(x).iter().map(|v| v - 1.0).collect();
    Ok(dot(&positive_part(&shifted), &e.apply_inverse(x)))
}

/// `<(x - 1)^+, M x>`.
pub fn eval_cond_m(m: &Matrix, x: &[f64]) -> Result<f64, CertificateError> {
    check_dim(m, x)?;
    let shifted: Vec<f64> = x.iter().map(|v| v - 1.0).collect();
    Ok(dot(&positive_part(&shifted), &m.mul_vec(x)))
}

pub fn eval(condition: Condition, a: &Matrix, x: &[f64]) -> Result<f64, CertificateError> {
    match condition {
        Condition::C4 => eval_cond4(a, x),
        Condition::C5 => eval_cond5(a, x),
        Condition::C6 => eval_cond6(a, x),
        Condition::CM => eval_cond_m(a, x),
    }
}

/// The first structural property of `M` that fails, in the order: negative
/// diagonal, positive off-diagonal, negative row sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum StructuralViolation {
    NegativeDiagonal { i: usize },
    PositiveOffDiagonal { i: usize, j: usize },
    NegativeRowSum { i: usize },
}

/// Finds the first violated structural property; entries within `tol` of
/// satisfying it are ignored.
pub fn structural_violation(m: &Matrix, tol: f64) -> Option<StructuralViolation> {
    structural_violations(m, tol).into_iter().next()
}

/// Every violated structural property, in priority order.
pub fn structural_violations(m: &Matrix, tol: f64) -> Vec<StructuralViolation> {
    let n = m.n();
    let mut out: Vec<StructuralViolation> = (0..n)
        .filter(|&i| m.get(i, i) < -tol)
        .map(|i| StructuralViolation::NegativeDiagonal { i })
        .collect();
    for i in 0..n {
        out.extend(
            (0..n)
                .filter(|&j| j != i && m.get(i, j) > tol)
                .map(|j| StructuralViolation::PositiveOffDiagonal { i, j }),
        );
    }
    out.extend(
        m.row_sums()
            .iter()
            .enumerate()
            .filter(|(_, s)| **s < -tol)
            .map(|(i, _)| StructuralViolation::NegativeRowSum { i }),
    );
    out
}

/// The explicit test vector for a structural violation.
pub fn structural_vector(m: &Matrix, violation: StructuralViolation) -> Vec<f64> {
    let n = m.n();
    let mut x = vec![0.0; n];
    match violation {
        StructuralViolation::NegativeDiagonal { i } => x[i] = 2.0,
        StructuralViolation::PositiveOffDiagonal { i, j } => {
            x[i] = 2.0;
            x[j] = -(2.0 * m.get(i, i) + 1.0) / m.get(i, j);
        }
        StructuralViolation::NegativeRowSum { i } => {
            let mii = m.get(i, i);
            let s: f64 = m.row(i).iter().sum();
            x.iter_mut().for_each(|v| *v = 1.0);
            x[i] = if mii <= 0.0 {
                2.0
            } else {
                1.0 + (-s / (2.0 * mii)).min(1.0)
            };
        }
    }
    x
}

/// A condition (M) witness built from the first structural violation of
/// `M`, or `None` when `M` is a Z-matrix with nonnegative diagonal and
/// nonnegative row sums.
pub fn structural_witness(m: &Matrix) -> Option<Witness> {
    let violation = structural_violation(m, 0.0)?;
    let x = structural_vector(m, violation);
    let value = eval_cond_m(m, &x).expect("dimension matches by construction");
    Some(Witness {
        condition: Condition::CM,
        x,
        value,
    })
}

/// `x = M y`. When `M = U^-1`, `eval_cond4(U, M y) = eval_cond_m(M, y)`.
pub fn witness_transfer(m: &Matrix, y: &[f64]) -> Result<Vec<f64>, CertificateError> {
    check_dim(m, y)?;
    Ok(m.mul_vec(y))
}

/// `theta I + M`.
pub fn perturb_m(m: &Matrix, theta: f64) -> Result<Matrix, CertificateError> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(CertificateError::NonPositiveTheta(theta));
    }
    Ok(m.add_identity(theta))
}

/// Rescales a complete-maximum-principle violation `x` of `U` into a
/// condition (4) witness: after scaling, `(U x)_i <= 1` wherever `x_i >= 0`
/// while some coordinate with `x_j < 0` has `(U x)_j > 1`.
pub fn cmp_violation_to_cond4(u: &Matrix, x: &[f64]) -> Option<Vec<f64>> {
    let ux = u.mul_vec(x);
    let top = ux.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let on_nonneg = ux
        .iter()
        .zip(x)
        .filter(|(_, xi)| **xi >= 0.0)
        .map(|(v, _)| *v)
        .fold(0.0f64, f64::max);
    if !(top > on_nonneg) || top <= 0.0 {
        return None;
    }
    let factor = if on_nonneg > 0.0 {
        2.0 / (on_nonneg + top)
    } else {
        2.0 / top
    };
    Some(x.iter().map(|v| v * factor).collect())
}

struct Found {
    witness: Option<Witness>,
    evaluations: u64,
}

fn to_witness(f: &Functional, cand: Candidate) -> Witness {
    let cand = normalize(f, cand);
    Witness {
        condition: f.condition,
        x: cand.x,
        value: cand.value,
    }
}

/// Candidates read off the explicit structural constructions, already
/// expressed in the coordinates of `condition`.
fn structural_candidates(condition: Condition, a: &Matrix, tol: f64) -> Vec<Vec<f64>> {
    // y -> M y for every structural violation of M = W^-1.
    let via_inverse = |w: &Matrix| -> Vec<Vec<f64>> {
        let Ok(inv) = LuFactorization::new(w).inverse() else {
            return Vec::new();
        };
        structural_violations(&inv, tol)
            .into_iter()
            .map(|v| inv.mul_vec(&structural_vector(&inv, v)))
            .collect()
    };
    let mut out = Vec::new();
    match condition {
        Condition::CM => {
            out.extend(
                structural_violations(a, tol)
                    .into_iter()
                    .map(|v| structural_vector(a, v)),
            );
        }
        Condition::C4 => out.extend(via_inverse(a)),
        // cond5(U, E y) = cond4(D U E, y) and cond6(U, E y) = cond4(U E, y).
        Condition::C5 | Condition::C6 => {
            let w = if condition == Condition::C5 {
                normalize_double(a)
            } else {
                normalize_column(a)
            };
            if let (Ok(w), Ok(e)) = (w, col_scaling(a)) {
                out.extend(via_inverse(&w).iter().map(|y| e.apply(y)));
            }
        }
    }
    out
}

fn search(condition: Condition, a: &Matrix, budget: u64, seed: u64, tol: f64) -> Result<Found, CertificateError> {
    let f = Functional::new(condition, a)?;
    let mut evaluations = 0;
    let mut best: Option<Candidate> = None;
    for x in structural_candidates(condition, a, tol) {
        if evaluations >= budget {
            break;
        }
        evaluations += 1;
        let value = f.eval(&x);
        if f.is_witness_value(&x, value) && best.as_ref().map_or(true, |b| value < b.value) {
            best = Some(Candidate { x, value });
        }
    }
    if best.is_none() && evaluations < budget {
        let outcome = random_search(&f, budget - evaluations, seed, DEFAULT_RESTARTS);
        evaluations += outcome.evaluations;
        best = outcome.best;
    }
    Ok(Found {
        witness: best.map(|c| to_witness(&f, c)),
        evaluations,
    })
}

/// Searches for a negative value of the functional of `condition` on `a`.
///
/// Deterministic for a given `(a, budget, seed)`, whatever the thread count.
/// Returns `None` when nothing below the `1e-7 (1 + |A| |x|^2)` threshold
/// was found within `budget` evaluations.
pub fn falsify(condition: Condition, a: &Matrix, budget: u64, seed: u64) -> Option<Witness> {
    assert!(budget >= 1, "search budget must be at least one evaluation");
    search(condition, a, budget, seed, 0.0).ok().and_then(|f| f.witness)
}

fn require_nonnegative(u: &Matrix) -> Result<(), CertificateError> {
    if is_nonnegative(u, 0.0) {
        Ok(())
    } else {
        Err(CertificateError::NotNonnegative)
    }
}

/// A condition (4) witness from a CMP violation of `U`, when one exists.
fn cmp_route(u: &Matrix, settings: &Settings) -> Result<Option<CertificateOutcome>, CertificateError> {
    let c = Condition::C4;
    let Ok(verdict) = satisfies_cmp(u, settings) else {
        return Ok(None);
    };
    let Some(Violation::Cmp { x }) = &verdict.violation else {
        return Ok(None);
    };
    let Some(w) = cmp_violation_to_cond4(u, x) else {
        return Ok(None);
    };
    let f = Functional::new(c, u)?;
    let value = f.eval(&w);
    if !f.is_witness_value(&w, value) {
        return Ok(None);
    }
    Ok(Some(CertificateOutcome {
        condition: c,
        status: CertificateStatus::Fails,
        basis: Basis::CmpViolation,
        witness: Some(to_witness(&f, Candidate { x: w, value })),
        evaluations: 1,
        diagnostic: None,
    }))
}

/// Decides condition (4) for a nonnegative `U`.
pub fn decide_cond4(u: &Matrix, settings: &Settings) -> Result<CertificateOutcome, CertificateError> {
    require_nonnegative(u)?;
    let c = Condition::C4;
    let report = classify(u, settings.tol);
    let budget = settings.budget;

    if report.nonsingular {
        if report.double_potential {
            return Ok(CertificateOutcome::holds(c, Basis::DoublePotential));
        }
        if !report.potential {
            // Nonsingular and not a potential: the CMP fails, and a rescaled
            // violation is a witness.
            if let Some(out) = cmp_route(u, settings)? {
                return Ok(out);
            }
        }
        let basis = if report.potential {
            Basis::Search
        } else {
            Basis::NotPotential
        };
        let found = search(c, u, budget, settings.seed, 0.0)?;
        return Ok(CertificateOutcome::from_search(c, basis, found, budget));
    }

    // Singular U: (4) implies the CMP, and CMP of U and U^t implies (4).
    if let Some(out) = cmp_route(u, settings)? {
        return Ok(out);
    }
    if let Ok(v) = satisfies_cmp(u, settings) {
        if v.status == PrincipleStatus::Holds && v.is_exact() {
            if let Ok(t) = satisfies_cmp(&u.transpose(), settings) {
                if t.status == PrincipleStatus::Holds && t.is_exact() {
                    return Ok(CertificateOutcome::holds(c, Basis::BilateralCmp));
                }
            }
        }
    }
    let found = search(c, u, budget, settings.seed, 0.0)?;
    Ok(CertificateOutcome::from_search(c, Basis::Search, found, budget))
}

/// Decides condition (5); exact for nonsingular `U`.
pub fn decide_cond5(u: &Matrix, settings: &Settings) -> Result<CertificateOutcome, CertificateError> {
    require_nonnegative(u)?;
    row_scaling(u)?;
    col_scaling(u)?;
    let c = Condition::C5;
    let report = classify(u, settings.tol);
    if report.nonsingular && report.inverse_m_matrix {
        return Ok(CertificateOutcome::holds(c, Basis::InverseMMatrix));
    }
    let basis = if report.nonsingular {
        Basis::NotInverseMMatrix
    } else {
        Basis::Search
    };
    let found = search(c, u, settings.budget, settings.seed, 0.0)?;
    Ok(CertificateOutcome::from_search(c, basis, found, settings.budget))
}

/// Decides condition (6); exact for nonsingular `U`.
pub fn decide_cond6(u: &Matrix, settings: &Settings) -> Result<CertificateOutcome, CertificateError> {
    require_nonnegative(u)?;
    col_scaling(u)?;
    let c = Condition::C6;
    let report = classify(u, settings.tol);
    if report.nonsingular && report.potential {
        return Ok(CertificateOutcome::holds(c, Basis::Potential));
    }
    let basis = if report.nonsingular {
        Basis::NotPotential
    } else {
        Basis::Search
    };
    let found = search(c, u, settings.budget, settings.seed, 0.0)?;
    Ok(CertificateOutcome::from_search(c, basis, found, settings.budget))
}

/// Decides condition (M) for an arbitrary square `M`.
pub fn decide_cond_m(m: &Matrix, settings: &Settings) -> Result<CertificateOutcome, CertificateError> {
    let c = Condition::CM;
    let f = Functional::new(c, m)?;
    if let Some(v) = structural_violation(m, 0.0) {
        let x = structural_vector(m, v);
        let value = f.eval(&x);
        if f.is_witness_value(&x, value) {
            return Ok(CertificateOutcome {
                condition: c,
                status: CertificateStatus::Fails,
                basis: Basis::StructuralViolation,
                witness: Some(to_witness(&f, Candidate { x, value })),
                evaluations: 1,
                diagnostic: None,
            });
        }
    }
    let tol = settings.tol;
    if is_z_matrix(m, tol)
        && has_nonnegative_diagonal(m, tol)
        && is_row_diag_dominant(m, tol)
        && is_col_diag_dominant(m, tol)
    {
        return Ok(CertificateOutcome::holds(c, Basis::DominantZMatrix));
    }
    let found = search(c, m, settings.budget, settings.seed, 0.0)?;
    Ok(CertificateOutcome::from_search(c, Basis::Search, found, settings.budget))
}

pub fn decide(condition: Condition, a: &Matrix, settings: &Settings) -> Result<CertificateOutcome, CertificateError> {
    match condition {
        Condition::C4 => decide_cond4(a, settings),
        Condition::C5 => decide_cond5(a, settings),
        Condition::C6 => decide_cond6(a, settings),
        Condition::CM => decide_cond_m(a, settings),
    }
}
