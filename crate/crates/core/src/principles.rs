//! Complete Maximum Principle (CMP) and Domination Principle (DP).
//!
//! For nonsingular `U` both principles reduce to properties of the inverse:
//! CMP holds iff `U` is a potential, DP holds iff `U` is an inverse
//! M-matrix. For singular `U` (or on request) the definitions are checked
//! directly by sweeping sign supports and solving one small LP per support
//! and target coordinate.
//!
//! Every `Fails` verdict carries a concrete violation that has been
//! re-checked against the definition.

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certificates::{structural_vector, structural_violations};
use crate::classify::{classify, is_nonnegative};
use crate::linalg::{dot, LinalgError, LuFactorization, Matrix};
use crate::lp::{lp_maximize, Constraint};
use crate::Settings;

/// Slack allowed on the premise side of a violation check.
pub const PREMISE_TOL: f64 = 1e-9;
/// Minimum excess for a DP violation, and for an LP optimum to count as one.
pub const VIOLATION_TOL: f64 = 1e-7;
/// Nonnegativity tolerance for equilibrium potentials.
pub const EQUILIBRIUM_TOL: f64 = 1e-9;
pub const PERTURBATION_GRID: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Principle {
    Cmp,
    Dp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrincipleStatus {
    Holds,
    Fails,
    Unknown,
}

impl fmt::Display for PrincipleStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    InverseCharacterization,
    DefinitionalLp,
    PerturbationHeuristic,
    RandomFalsifier,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    /// `max_i (Ux)_i` exceeds the maximum over coordinates where `x_i >= 0`.
    Cmp { x: Vec<f64> },
    /// `x, y >= 0`, `Ux <= Uy` on the support of `x`, but not everywhere.
    Dp { x: Vec<f64>, y: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrincipleVerdict {
    pub principle: Principle,
    pub status: PrincipleStatus,
    pub method: Method,
    pub violation: Option<Violation>,
    /// Amount by which the violation exceeds the definition.
    pub margin: Option<f64>,
    pub note: Option<String>,
}

impl PrincipleVerdict {
    fn holds(principle: Principle, method: Method) -> Self {
        Self {
            principle,
            status: PrincipleStatus::Holds,
            method,
            violation: None,
            margin: None,
            note: None,
        }
    }

    fn fails(principle: Principle, method: Method, violation: Violation, margin: f64) -> Self {
        Self {
            principle,
            status: PrincipleStatus::Fails,
            method,
            violation: Some(violation),
            margin: Some(margin),
            note: None,
        }
    }

    fn unknown(principle: Principle, method: Method, note: String) -> Self {
        Self {
            principle,
            status: PrincipleStatus::Unknown,
            method,
            violation: None,
            margin: None,
            note: Some(note),
        }
    }

    /// `true` unless the verdict rests on the perturbation heuristic.
    pub fn is_exact(&self) -> bool {
        match self.status {
            PrincipleStatus::Fails => true,
            PrincipleStatus::Holds => matches!(
                self.method,
                Method::InverseCharacterization | Method::DefinitionalLp
            ),
            PrincipleStatus::Unknown => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrincipleError {
    #[error("matrix has a negative entry; the principles are defined for nonnegative matrices")]
    NotNonnegative,
    #[error("diagonal entry {index} is {value}; a strictly positive diagonal is required")]
    NonPositiveDiagonal { index: usize, value: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn require_nonnegative(u: &Matrix) -> Result<(), PrincipleError> {
    if is_nonnegative(u, 0.0) {
        Ok(())
    } else {
        Err(PrincipleError::NotNonnegative)
    }
}

/// Margin by which `x` violates the CMP for `U`, if it exceeds `PREMISE_TOL`.
///
/// The supremum over an empty set of coordinates is taken to be `0`.
pub fn cmp_violation_margin(u: &Matrix, x: &[f64]) -> Option<f64> {
    let ux = u.mul_vec(x);
    let top = ux.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut on_nonneg = ux
        .iter()
        .zip(x)
        .filter(|(_, xi)| **xi >= 0.0)
        .map(|(v, _)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    if on_nonneg == f64::NEG_INFINITY {
        on_nonneg = 0.0;
    }
    let margin = top - on_nonneg;
    (margin > PREMISE_TOL).then_some(margin)
}

/// Margin by which `(x, y)` violates the DP for `U`, if the premise holds
/// within `PREMISE_TOL` and the conclusion fails by more than `VIOLATION_TOL`.
pub fn dp_violation_margin(u: &Matrix, x: &[f64], y: &[f64]) -> Option<f64> {
    if x.iter().chain(y).any(|v| *v < 0.0) {
        return None;
    }
    let ux = u.mul_vec(x);
    let uy = u.mul_vec(y);
    let premise = (0..x.len())
        .filter(|&i| x[i] > 0.0)
        .all(|i| ux[i] <= uy[i] + PREMISE_TOL);
    if !premise {
        return None;
    }
    let margin = ux
        .iter()
        .zip(&uy)
        .map(|(a, b)| a - b)
        .fold(f64::NEG_INFINITY, f64::max);
    (margin > VIOLATION_TOL).then_some(margin)
}

/// Result of solving `U mu = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    /// `U^-1 1` with rounding dust above `-1e-9` clamped to zero, when nonnegative.
    pub measure: Option<Vec<f64>>,
    /// The raw solution.
    pub signed: Vec<f64>,
}

pub fn equilibrium_potential(u: &Matrix) -> Result<Equilibrium, PrincipleError> {
    let signed = LuFactorization::new(u).solve(&vec![1.0; u.n()])?;
    let measure = signed
        .iter()
        .all(|v| *v >= -EQUILIBRIUM_TOL)
        .then(|| signed.iter().map(|v| v.max(0.0)).collect());
    Ok(Equilibrium { measure, signed })
}

/// A nonnegative solution of `U mu = 1` found by LP, for singular `U`.
pub fn nonnegative_equilibrium_lp(u: &Matrix, box_bound: f64) -> Option<Vec<f64>> {
    let n = u.n();
    let mut cons = Vec::with_capacity(3 * n);
    for i in 0..n {
        cons.push(Constraint::le(u.row(i).to_vec(), 1.0));
        cons.push(Constraint::ge(u.row(i).to_vec(), 1.0));
        cons.push(Constraint::var_ge(n, i, 0.0));
    }
    let res = lp_maximize(&vec![0.0; n], &cons, box_bound);
    if !res.is_feasible() {
        return None;
    }
    let mu: Vec<f64> = res.x.iter().map(|v| v.max(0.0)).collect();
    let ok = u
        .mul_vec(&mu)
        .iter()
        .all(|v| (v - 1.0).abs() <= 1e-8 * (1.0 + u.norm_inf() * box_bound));
    ok.then_some(mu)
}

/// `a I + U`.
pub fn perturb(u: &Matrix, a: f64) -> Matrix {
    assert!(a >= 0.0 && a.is_finite(), "perturbation must be nonnegative");
    u.add_identity(a)
}

/// Indices `(i, j)`, `i < j`, of the first pair of proportional columns:
/// both zero, or with cosine distance `1 - |cos| <= tol`.
pub fn proportional_columns(u: &Matrix, tol: f64) -> Option<(usize, usize)> {
    let cols: Vec<Vec<f64>> = (0..u.n()).map(|j| u.column(j)).collect();
    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    for i in 0..cols.len() {
        for j in i + 1..cols.len() {
            let (ni, nj) = (norms[i], norms[j]);
            if ni == 0.0 && nj == 0.0 {
                return Some((i, j));
            }
            if ni == 0.0 || nj == 0.0 {
                continue;
            }
            let cos = dot(&cols[i], &cols[j]) / (ni * nj);
            if 1.0 - cos.abs() <= tol {
                return Some((i, j));
            }
        }
    }
    None
}

/// Complete Maximum Principle check.
pub fn satisfies_cmp(u: &Matrix, settings: &Settings) -> Result<PrincipleVerdict, PrincipleError> {
    require_nonnegative(u)?;
    let p = Principle::Cmp;
    let n = u.n();
    let report = classify(u, settings.tol);

    if report.nonsingular && !(settings.definitional && n <= settings.nmax) {
        if report.potential {
            return Ok(PrincipleVerdict::holds(p, Method::InverseCharacterization));
        }
        let inverse = report.inverse.as_ref().expect("nonsingular report has an inverse");
        if let Some((x, margin)) = constructive_cmp_violation(u, inverse) {
            return Ok(PrincipleVerdict::fails(
                p,
                Method::InverseCharacterization,
                Violation::Cmp { x },
                margin,
            ));
        }
        if n > settings.nmax {
            return Ok(PrincipleVerdict::unknown(
                p,
                Method::InverseCharacterization,
                "not a potential, but no violation could be reconstructed".into(),
            ));
        }
    }
    if n <= settings.nmax {
        return Ok(definitional_cmp(u, settings.box_bound));
    }
    Ok(perturbation_cmp(u, settings))
}

/// Domination Principle check.
pub fn satisfies_dp(u: &Matrix, settings: &Settings) -> Result<PrincipleVerdict, PrincipleError> {
    require_nonnegative(u)?;
    let p = Principle::Dp;
    let n = u.n();
    let report = classify(u, settings.tol);

    if report.nonsingular && !(settings.definitional && n <= settings.nmax) {
        if report.inverse_m_matrix {
            return Ok(PrincipleVerdict::holds(p, Method::InverseCharacterization));
        }
        let inverse = report.inverse.as_ref().expect("nonsingular report has an inverse");
        if let Some((x, y, margin)) = constructive_dp_violation(u, inverse) {
            return Ok(PrincipleVerdict::fails(
                p,
                Method::InverseCharacterization,
                Violation::Dp { x, y },
                margin,
            ));
        }
        if n > settings.nmax {
            return Ok(PrincipleVerdict::unknown(
                p,
                Method::InverseCharacterization,
                "not an inverse M-matrix, but no violation could be reconstructed".into(),
            ));
        }
    }
    if n <= settings.nmax {
        return Ok(definitional_dp(u, settings.box_bound));
    }
    if let Some((x, y, margin)) = random_dp_violation(u, settings.budget, settings.seed) {
        return Ok(PrincipleVerdict::fails(
            p,
            Method::RandomFalsifier,
            Violation::Dp { x, y },
            margin,
        ));
    }
    Ok(PrincipleVerdict::unknown(
        p,
        Method::RandomFalsifier,
        format!(
            "singular with n = {n} > nmax = {}; no violation in {} random pairs",
            settings.nmax, settings.budget
        ),
    ))
}

/// `x = M y` for the structural test vectors of `M = U^-1`; each one puts
/// `(Ux)_i > 1` at a coordinate with `x_i < 0` and keeps `Ux <= 1` elsewhere.
fn constructive_cmp_violation(u: &Matrix, inverse: &Matrix) -> Option<(Vec<f64>, f64)> {
    structural_violations(inverse, 0.0).into_iter().find_map(|v| {
        let x = inverse.mul_vec(&structural_vector(inverse, v));
        cmp_violation_margin(u, &x).map(|m| (x, m))
    })
}

/// For `M_ij > 0` (`i != j`), `z = e_i - e_j / eps` with `eps` small enough
/// that `(M z)_i <= 0`; then `x = (Mz)^+`, `y = (Mz)^-` satisfy
/// `U x - U y = z`, which is `<= 0` on the support of `x` but `1` at `i`.
fn constructive_dp_violation(u: &Matrix, inverse: &Matrix) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let n = inverse.n();
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && inverse.get(i, j) > 0.0)
        .collect();
    pairs.sort_by(|a, b| {
        inverse
            .get(b.0, b.1)
            .partial_cmp(&inverse.get(a.0, a.1))
            .unwrap()
    });
    pairs.into_iter().find_map(|(i, j)| {
        let mii = inverse.get(i, i);
        let mij = inverse.get(i, j);
        let eps = if mii > 0.0 {
            (mij / (2.0 * mii)).min(1.0)
        } else {
            1.0
        };
        let mut z = vec![0.0; n];
        z[i] = 1.0;
        z[j] = -1.0 / eps;
        let w = inverse.mul_vec(&z);
        let x: Vec<f64> = w.iter().map(|v| v.max(0.0)).collect();
        let y: Vec<f64> = w.iter().map(|v| (-v).max(0.0)).collect();
        dp_violation_margin(u, &x, &y).map(|m| (x, y, m))
    })
}

fn nonempty_supports(n: usize) -> impl IndexedParallelIterator<Item = u32> {
    (1u32..(1u32 << n)).into_par_iter()
}

/// Sweeps every nonempty sign support `S` and target `j` outside it:
/// `max (Ux)_j` s.t. `x >= 0` on `S`, `x <= 0` off `S`, `(Ux)_i <= 1` on `S`.
/// An optimum above `1 + 1e-7` is a violation.
fn definitional_cmp(u: &Matrix, box_bound: f64) -> PrincipleVerdict {
    let n = u.n();
    let p = Principle::Cmp;
    let unverified = AtomicBool::new(false);

    let found = nonempty_supports(n).find_map_first(|mask| {
        let in_s = |i: usize| mask & (1 << i) != 0;
        let mut cons = Vec::with_capacity(2 * n);
        for i in 0..n {
            if in_s(i) {
                cons.push(Constraint::var_ge(n, i, 0.0));
                cons.push(Constraint::le(u.row(i).to_vec(), 1.0));
            } else {
                cons.push(Constraint::var_le(n, i, 0.0));
            }
        }
        (0..n).filter(|&j| !in_s(j)).find_map(|j| {
            let res = lp_maximize(u.row(j), &cons, box_bound);
            if !res.is_feasible() || res.value <= 1.0 + VIOLATION_TOL {
                return None;
            }
            let x = repair_cmp_point(u, res.x, mask, j);
            let found = cmp_violation_margin(u, &x).map(|m| (x, m));
            if found.is_none() {
                unverified.store(true, Ordering::Relaxed);
            }
            found
        })
    });

    match found {
        Some((x, margin)) => PrincipleVerdict::fails(p, Method::DefinitionalLp, Violation::Cmp { x }, margin),
        None if unverified.load(Ordering::Relaxed) => PrincipleVerdict::unknown(
            p,
            Method::DefinitionalLp,
            "an orthant LP exceeded 1 but its optimizer did not re-verify".into(),
        ),
        None => PrincipleVerdict::holds(p, Method::DefinitionalLp),
    }
}

/// Pushes zero coordinates outside the support strictly negative so that
/// only the support counts as "x_i >= 0" in the definition.
fn repair_cmp_point(u: &Matrix, mut x: Vec<f64>, mask: u32, j: usize) -> Vec<f64> {
    let n = x.len();
    let in_s = |i: usize| mask & (1 << i) != 0;
    for (i, v) in x.iter_mut().enumerate() {
        if in_s(i) {
            *v = v.max(0.0);
        } else {
            *v = v.min(0.0);
        }
    }
    let excess = u.mul_vec(&x)[j] - 1.0;
    let touching: Vec<usize> = (0..n).filter(|&i| !in_s(i) && x[i] == 0.0).collect();
    if !touching.is_empty() && excess > 0.0 {
        let weight: f64 = touching.iter().map(|&i| u.get(j, i)).sum();
        let eta = excess / (2.0 * (1.0 + weight));
        for i in touching {
            x[i] = -eta;
        }
    }
    x
}

/// For each nonempty support `S`: `x >= 1` on `S` (zero elsewhere), `y >= 0`,
/// `(U(x - y))_i <= 0` on `S`, maximize `(U(x - y))_j` for `j` off `S`.
/// Positive homogeneity of the definition makes `x >= 1` a normalization.
fn definitional_dp(u: &Matrix, box_bound: f64) -> PrincipleVerdict {
    let n = u.n();
    let p = Principle::Dp;
    let unverified = AtomicBool::new(false);

    let found = nonempty_supports(n).find_map_first(|mask| {
        let support: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let k = support.len();
        let dim = k + n;
        // Row `r` of U(x - y) as a linear form over [x_S, y].
        let form = |r: usize| -> Vec<f64> {
            support
                .iter()
                .map(|&c| u.get(r, c))
                .chain((0..n).map(|c| -u.get(r, c)))
                .collect()
        };
        let mut cons = Vec::with_capacity(2 * k + n);
        for a in 0..k {
            cons.push(Constraint::var_ge(dim, a, 1.0));
        }
        for b in 0..n {
            cons.push(Constraint::var_ge(dim, k + b, 0.0));
        }
        for &i in &support {
            cons.push(Constraint::le(form(i), 0.0));
        }
        (0..n).filter(|j| !support.contains(j)).find_map(|j| {
            let res = lp_maximize(&form(j), &cons, box_bound);
            if !res.is_feasible() || res.value <= VIOLATION_TOL {
                return None;
            }
            let mut x = vec![0.0; n];
            for (a, &c) in support.iter().enumerate() {
                x[c] = res.x[a].max(1.0);
            }
            let y: Vec<f64> = res.x[k..].iter().map(|v| v.max(0.0)).collect();
            let found = dp_violation_margin(u, &x, &y).map(|m| (x, y, m));
            if found.is_none() {
                unverified.store(true, Ordering::Relaxed);
            }
            found
        })
    });

    match found {
        Some((x, y, margin)) => {
            PrincipleVerdict::fails(p, Method::DefinitionalLp, Violation::Dp { x, y }, margin)
        }
        None if unverified.load(Ordering::Relaxed) => PrincipleVerdict::unknown(
            p,
            Method::DefinitionalLp,
            "a support LP exceeded the threshold but its optimizer did not re-verify".into(),
        ),
        None => PrincipleVerdict::holds(p, Method::DefinitionalLp),
    }
}

/// Large singular `U`: CMP of `U` forces every `aI + U` (`a > 0`) to be a
/// potential, so a failing grid point rules CMP out; a fully passing grid
/// is reported as a heuristic `Holds`.
fn perturbation_cmp(u: &Matrix, settings: &Settings) -> PrincipleVerdict {
    let p = Principle::Cmp;
    let mut failing = None;
    for &a in &PERTURBATION_GRID {
        let ua = perturb(u, a);
        let report = classify(&ua, settings.tol);
        if !report.potential {
            if let Some(inv) = report.inverse.as_ref() {
                if let Some((x, margin)) = constructive_cmp_violation(u, inv) {
                    return PrincipleVerdict::fails(
                        p,
                        Method::PerturbationHeuristic,
                        Violation::Cmp { x },
                        margin,
                    );
                }
            }
            failing = Some(a);
            break;
        }
    }
    let Some(a) = failing else {
        let mut v = PrincipleVerdict::holds(p, Method::PerturbationHeuristic);
        v.note = Some(format!(
            "aI + U is a potential for every a in {PERTURBATION_GRID:?}"
        ));
        return v;
    };
    if let Some((x, margin)) = random_cmp_violation(u, settings.budget, settings.seed) {
        return PrincipleVerdict::fails(p, Method::RandomFalsifier, Violation::Cmp { x }, margin);
    }
    PrincipleVerdict::unknown(
        p,
        Method::PerturbationHeuristic,
        format!("aI + U is not a potential at a = {a:e}, so the CMP fails, but no finite violation was recovered"),
    )
}

fn random_cmp_violation(u: &Matrix, budget: u64, seed: u64) -> Option<(Vec<f64>, f64)> {
    let n = u.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..budget).find_map(|_| {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        cmp_violation_margin(u, &x).map(|m| (x, m))
    })
}

/// Random nonnegative `x` (sparse) and `y`, with `y` rescaled so the premise
/// holds with equality somewhere on the support of `x`.
fn random_dp_violation(u: &Matrix, budget: u64, seed: u64) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let n = u.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..budget).find_map(|_| {
        let x: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(0.4) {
                    rng.random_range(0.0..1.0)
                } else {
                    0.0
                }
            })
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let ux = u.mul_vec(&x);
        let uy = u.mul_vec(&y);
        let lambda = (0..n)
            .filter(|&i| x[i] > 0.0)
            .map(|i| if uy[i] > 0.0 { ux[i] / uy[i] } else { f64::INFINITY })
            .fold(0.0f64, f64::max);
        if !lambda.is_finite() || lambda == 0.0 {
            return None;
        }
        let y: Vec<f64> = y.iter().map(|v| v * lambda).collect();
        dp_violation_margin(u, &x, &y).map(|m| (x, y, m))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Agreement {
    Consistent,
    Inconsistent,
    /// At least one verdict is `Unknown`.
    Undetermined,
}

/// CMP versus (DP and a nonnegative equilibrium potential), for `U` with a
/// strictly positive diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgeReport {
    pub cmp: PrincipleVerdict,
    pub dp: PrincipleVerdict,
    pub equilibrium: Option<Vec<f64>>,
    pub agreement: Agreement,
}

pub fn cmp_dp_bridge(u: &Matrix, settings: &Settings) -> Result<BridgeReport, PrincipleError> {
    require_nonnegative(u)?;
    if let Some((index, value)) = u.diag().into_iter().enumerate().find(|(_, d)| !(*d > 0.0)) {
        return Err(PrincipleError::NonPositiveDiagonal { index, value });
    }
    let cmp = satisfies_cmp(u, settings)?;
    let dp = satisfies_dp(u, settings)?;
    let equilibrium = match equilibrium_potential(u) {
        Ok(e) => e.measure,
        Err(PrincipleError::Linalg(LinalgError::Singular)) => {
            nonnegative_equilibrium_lp(u, settings.box_bound)
        }
        Err(e) => return Err(e),
    };
    let agreement = if cmp.status == PrincipleStatus::Unknown || dp.status == PrincipleStatus::Unknown {
        Agreement::Undetermined
    } else {
        let lhs = cmp.status == PrincipleStatus::Holds;
        let rhs = dp.status == PrincipleStatus::Holds && equilibrium.is_some();
        if lhs == rhs {
            Agreement::Consistent
        } else {
            Agreement::Inconsistent
        }
    };
    Ok(BridgeReport {
        cmp,
        dp,
        equilibrium,
        agreement,
    })
}
