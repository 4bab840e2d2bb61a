//! Seeded random matrices in each class.
//!
//! Everything is built from a substochastic `P`: `M = k (I - P)` is a
//! strictly diagonally dominant M-matrix, and its inverse is the generated
//! potential. Identical [`GenSpec`]s give bit-identical output.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{invert, Matrix};

/// Row and column sums of generated substochastic matrices stay below `1 - SLACK`.
pub const SLACK: f64 = 0.05;
const MAX_SWEEPS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenClass {
    Nonnegative,
    ZRowDominant,
    MMatrix,
    Potential,
    DoublePotential,
    SymmetricPotential,
    InverseMMatrix,
    SingularCmp,
}

impl GenClass {
    pub const ALL: [GenClass; 8] = [
        GenClass::Nonnegative,
        GenClass::ZRowDominant,
        GenClass::MMatrix,
        GenClass::Potential,
        GenClass::DoublePotential,
        GenClass::SymmetricPotential,
        GenClass::InverseMMatrix,
        GenClass::SingularCmp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GenClass::Nonnegative => "nonnegative",
            GenClass::ZRowDominant => "z_row_dominant",
            GenClass::MMatrix => "m_matrix",
            GenClass::Potential => "potential",
            GenClass::DoublePotential => "double_potential",
            GenClass::SymmetricPotential => "symmetric_potential",
            GenClass::InverseMMatrix => "inverse_m_matrix",
            GenClass::SingularCmp => "singular_cmp",
        }
    }
}

impl fmt::Display for GenClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GenClass {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        GenClass::ALL
            .into_iter()
            .find(|c| c.name() == key)
            .ok_or_else(|| GenError::UnknownClass(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("density must lie in [0, 1], got {0}")]
    Density(f64),
    #[error("scale k must be positive and finite, got {0}")]
    Scale(f64),
    #[error("unknown matrix class '{0}'")]
    UnknownClass(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n: usize,
    pub class: GenClass,
    /// Scale of `M = k (I - P)`.
    pub k: f64,
    /// Fill probability of `P`.
    pub density: f64,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(class: GenClass, n: usize, seed: u64) -> Self {
        Self {
            n,
            class,
            k: 1.0,
            density: 0.5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.n == 0 {
            return Err(GenError::ZeroDimension);
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err(GenError::Density(self.density));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(GenError::Scale(self.k));
        }
        Ok(())
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Generates one matrix of `spec.class`.
pub fn generate(spec: &GenSpec) -> Result<Matrix, GenError> {
    spec.validate()?;
    let mut rng = spec.rng();
    let (n, k, density) = (spec.n, spec.k, spec.density);
    Ok(match spec.class {
        GenClass::Nonnegative => random_nonnegative(n, density, k, &mut rng),
        GenClass::ZRowDominant => potential_inverse(n, density, k, &mut rng),
        GenClass::MMatrix => column_scaled(potential_inverse(n, density, k, &mut rng), &mut rng),
        GenClass::Potential => inverse_of(&potential_inverse(n, density, k, &mut rng)),
        GenClass::DoublePotential => {
            let p = substochastic(n, density, true, &mut rng);
            inverse_of(&identity_minus(&p, k))
        }
        GenClass::SymmetricPotential => {
            let p = symmetric_substochastic(n, density, &mut rng);
            inverse_of(&identity_minus(&p, k))
        }
        GenClass::InverseMMatrix => {
            let m = column_scaled(potential_inverse(n, density, k, &mut rng), &mut rng);
            inverse_of(&m)
        }
        GenClass::SingularCmp => singular_cmp(n, density, k, &mut rng).matrix,
    })
}

/// Nonnegative `P` with row sums `<= 1 - SLACK`, and column sums too when
/// `double` is set. Each entry is nonzero with probability `density`.
pub fn gen_substochastic(n: usize, density: f64, double: bool, seed: u64) -> Result<Matrix, GenError> {
    GenSpec {
        n,
        class: GenClass::DoublePotential,
        k: 1.0,
        density,
        seed,
    }
    .validate()?;
    Ok(substochastic(n, density, double, &mut ChaCha8Rng::seed_from_u64(seed)))
}

/// `U = (k (I - P))^-1` with `P` doubly substochastic.
pub fn gen_double_potential(spec: &GenSpec) -> Result<Matrix, GenError> {
    generate(&GenSpec {
        class: GenClass::DoublePotential,
        ..spec.clone()
    })
}

/// `U = (k (I - P))^-1` with `P` row substochastic only. Half of the draws
/// load one column of `P` heavily so that the column sums of `M` go negative.
pub fn gen_potential(spec: &GenSpec) -> Result<Matrix, GenError> {
    generate(&GenSpec {
        class: GenClass::Potential,
        ..spec.clone()
    })
}

/// `U = (M F)^-1` where `M` is a row dominant M-matrix and `F` a random
/// positive diagonal: still an inverse M-matrix, usually not a potential.
pub fn gen_inverse_m_matrix(spec: &GenSpec) -> Result<Matrix, GenError> {
    generate(&GenSpec {
        class: GenClass::InverseMMatrix,
        ..spec.clone()
    })
}

pub fn gen_symmetric_potential(spec: &GenSpec) -> Result<Matrix, GenError> {
    generate(&GenSpec {
        class: GenClass::SymmetricPotential,
        ..spec.clone()
    })
}

/// A random symmetric nonnegative matrix with entries in `[0, k]`; almost
/// never a potential.
pub fn gen_symmetric_nonnegative(spec: &GenSpec) -> Result<Matrix, GenError> {
    spec.validate()?;
    let mut rng = spec.rng();
    let a = random_nonnegative(spec.n, spec.density, spec.k, &mut rng);
    Ok(Matrix::from_fn(spec.n, |i, j| if i <= j { a.get(i, j) } else { a.get(j, i) }))
}

/// A singular matrix satisfying the complete maximum principle, with the
/// nonsingular potential it was grown from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularCmp {
    pub matrix: Matrix,
    /// The `(n-1) x (n-1)` potential before duplication; `None` for `n = 1`.
    pub progenitor: Option<Matrix>,
    /// Columns of `matrix` that are proportional, `i < j`.
    pub pair: Option<(usize, usize)>,
}

/// Duplicates one state of an `(n-1)`-dimensional potential `U0`: the new
/// row copies row `p` and the new column is `c` times column `p`, `c > 0`.
/// The result inherits the maximum principle and has proportional columns.
/// Rows and columns are then permuted together.
pub fn gen_singular_cmp(spec: &GenSpec) -> Result<SingularCmp, GenError> {
    spec.validate()?;
    Ok(singular_cmp(spec.n, spec.density, spec.k, &mut spec.rng()))
}

/// `c 1 v^t` with `v >= 0`: every row equal, so the CMP holds trivially.
pub fn gen_rank_one_cmp(spec: &GenSpec) -> Result<Matrix, GenError> {
    spec.validate()?;
    let mut rng = spec.rng();
    let v: Vec<f64> = (0..spec.n).map(|_| rng.random_range(0.1..1.0)).collect();
    Ok(Matrix::outer(&vec![spec.k; spec.n], &v))
}

fn entry(rng: &mut ChaCha8Rng, density: f64) -> f64 {
    if density > 0.0 && rng.random_bool(density) {
        rng.random_range(0.0..1.0)
    } else {
        0.0
    }
}

fn random_nonnegative(n: usize, density: f64, k: f64, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(n, |_, _| k * entry(rng, density))
}

fn shrink_rows(p: &mut [Vec<f64>], cap: f64) {
    for row in p.iter_mut() {
        let s: f64 = row.iter().sum();
        if s > cap {
            let f = cap / s;
            row.iter_mut().for_each(|v| *v *= f);
        }
    }
}

fn shrink_cols(p: &mut [Vec<f64>], cap: f64) {
    let n = p.len();
    for j in 0..n {
        let s: f64 = p.iter().map(|r| r[j]).sum();
        if s > cap {
            let f = cap / s;
            p.iter_mut().for_each(|r| r[j] *= f);
        }
    }
}

fn max_sum(p: &[Vec<f64>], cols: bool) -> f64 {
    let n = p.len();
    (0..n)
        .map(|i| {
            if cols {
                p.iter().map(|r| r[i]).sum::<f64>()
            } else {
                p[i].iter().sum()
            }
        })
        .fold(0.0, f64::max)
}

fn substochastic(n: usize, density: f64, double: bool, rng: &mut ChaCha8Rng) -> Matrix {
    let mut p: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| entry(rng, density)).collect()).collect();
    shrink_to_cap(&mut p, double);
    Matrix::from_rows(&p).expect("finite square rows")
}

fn shrink_to_cap(p: &mut [Vec<f64>], double: bool) {
    let cap = 1.0 - SLACK;
    for _ in 0..MAX_SWEEPS {
        shrink_rows(p, cap);
        if !double {
            return;
        }
        shrink_cols(p, cap);
        if max_sum(p, false) <= cap && max_sum(p, true) <= cap {
            return;
        }
    }
}

fn symmetric_substochastic(n: usize, density: f64, rng: &mut ChaCha8Rng) -> Matrix {
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = entry(rng, density);
            a[i][j] = v;
            a[j][i] = v;
        }
    }
    // A uniform factor keeps the matrix symmetric.
    let top = max_sum(&a, false);
    let cap = 1.0 - SLACK;
    if top > cap {
        let f = cap / top;
        a.iter_mut().flatten().for_each(|v| *v *= f);
    }
    Matrix::from_rows(&a).expect("finite square rows")
}

fn identity_minus(p: &Matrix, k: f64) -> Matrix {
    Matrix::identity(p.n()).sub(p).scale(k)
}

/// Inverse of an M-matrix. The exact inverse is nonnegative, so negative
/// rounding dust is cleared.
fn inverse_of(m: &Matrix) -> Matrix {
    let inv = invert(m).expect("generated M-matrices are nonsingular");
    let dust = 1e-12 * inv.max_abs();
    Matrix::from_fn(inv.n(), |i, j| {
        let v = inv.get(i, j);
        if v < 0.0 && v >= -dust {
            0.0
        } else {
            v
        }
    })
}

/// `M = k (I - P)` with row substochastic `P`; with probability one half
/// one column of `P` is loaded before the row caps are applied.
fn potential_inverse(n: usize, density: f64, k: f64, rng: &mut ChaCha8Rng) -> Matrix {
    let mut p: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| entry(rng, density)).collect()).collect();
    if n > 1 && rng.random_bool(0.5) {
        let c = rng.random_range(0..n);
        for (i, row) in p.iter_mut().enumerate() {
            if i != c {
                row[c] = rng.random_range(0.5..1.0);
            }
        }
    }
    shrink_to_cap(&mut p, false);
    identity_minus(&Matrix::from_rows(&p).expect("finite square rows"), k)
}

/// `M F` for a random positive diagonal `F`.
fn column_scaled(m: Matrix, rng: &mut ChaCha8Rng) -> Matrix {
    let f: Vec<f64> = (0..m.n()).map(|_| 10f64.powf(rng.random_range(-0.7..0.7))).collect();
    m.scale_rows_cols(&vec![1.0; m.n()], &f)
}

fn singular_cmp(n: usize, density: f64, k: f64, rng: &mut ChaCha8Rng) -> SingularCmp {
    if n == 1 {
        return SingularCmp {
            matrix: Matrix::zeros(1),
            progenitor: None,
            pair: None,
        };
    }
    let u0 = inverse_of(&potential_inverse(n - 1, density, k, rng));
    let p = rng.random_range(0..n - 1);
    let c = rng.random_range(0.2..2.0);
    let q = n - 1;
    // Index map from the grown matrix back to U0: state q is a copy of p.
    let src = |i: usize| if i == q { p } else { i };
    let grown = Matrix::from_fn(n, |i, j| {
        let v = u0.get(src(i), src(j));
        if j == q {
            c * v
        } else {
            v
        }
    });
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let matrix = Matrix::from_fn(n, |i, j| grown.get(perm[i], perm[j]));
    let (a, b) = (
        perm.iter().position(|&v| v == p).expect("p is a permuted index"),
        perm.iter().position(|&v| v == q).expect("q is a permuted index"),
    );
    SingularCmp {
        matrix,
        progenitor: Some(u0),
        pair: Some((a.min(b), a.max(b))),
    }
}
