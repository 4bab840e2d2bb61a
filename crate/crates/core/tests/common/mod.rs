//! Corpus builders shared by the integration and acceptance tests.

#![allow(dead_code)]

use potkit::classify::classify;
use potkit::generators::{generate, gen_symmetric_nonnegative, GenClass, GenSpec};
use potkit::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const TOL: f64 = 1e-9;

pub fn example_u() -> Matrix {
    Matrix::from_rows(&[[2.0, 100.0], [1.0, 100.0]]).unwrap()
}

pub fn example_m() -> Matrix {
    Matrix::from_rows(&[[1.0, -1.0], [-0.01, 0.02]]).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `count` instances of `class`, cycling `n` through `dims`.
pub fn corpus(class: GenClass, count: usize, dims: std::ops::RangeInclusive<usize>, seed0: u64) -> Vec<Matrix> {
    let dims: Vec<usize> = dims.collect();
    (0..count)
        .map(|i| generate(&GenSpec::new(class, dims[i % dims.len()], seed0 + i as u64)).unwrap())
        .collect()
}

/// Random nonnegative nonsingular matrices that are not potentials.
pub fn non_potentials(count: usize, dims: std::ops::RangeInclusive<usize>, seed0: u64) -> Vec<Matrix> {
    let dims: Vec<usize> = dims.collect();
    let mut out = Vec::with_capacity(count);
    let mut seed = seed0;
    while out.len() < count {
        let n = dims[out.len() % dims.len()];
        let spec = GenSpec {
            density: 0.7,
            ..GenSpec::new(GenClass::Nonnegative, n, seed)
        };
        seed += 1;
        let u = generate(&spec).unwrap();
        let r = classify(&u, TOL);
        if r.nonsingular && r.rcond > 1e-8 && !r.potential {
            out.push(u);
        }
    }
    out
}

/// Nonnegative nonsingular matrices with positive row and column sums
/// that are not inverse M-matrices.
pub fn non_inverse_m(count: usize, dims: std::ops::RangeInclusive<usize>, seed0: u64) -> Vec<Matrix> {
    let dims: Vec<usize> = dims.collect();
    let mut out = Vec::with_capacity(count);
    let mut seed = seed0;
    while out.len() < count {
        let n = dims[out.len() % dims.len()];
        let spec = GenSpec {
            density: 0.8,
            ..GenSpec::new(GenClass::Nonnegative, n, seed)
        };
        seed += 1;
        let u = generate(&spec).unwrap();
        let positive_sums = u.row_sums().iter().chain(&u.col_sums()).all(|s| *s > 0.0);
        let r = classify(&u, TOL);
        if positive_sums && r.nonsingular && r.rcond > 1e-8 && !r.inverse_m_matrix {
            out.push(u);
        }
    }
    out
}

/// Symmetric nonnegative nonsingular matrices; half generated potentials,
/// half random symmetric matrices that are not potentials.
pub fn symmetric_mix(count: usize, dims: std::ops::RangeInclusive<usize>, seed0: u64) -> Vec<Matrix> {
    let dims: Vec<usize> = dims.collect();
    let mut out = corpus(GenClass::SymmetricPotential, count / 2, dims[0]..=dims[dims.len() - 1], seed0);
    let mut seed = seed0;
    while out.len() < count {
        let n = dims[out.len() % dims.len()];
        let spec = GenSpec {
            density: 0.7,
            ..GenSpec::new(GenClass::Nonnegative, n, seed)
        };
        seed += 1;
        let u = gen_symmetric_nonnegative(&spec).unwrap();
        let r = classify(&u, TOL);
        if r.nonsingular && r.rcond > 1e-8 && !r.potential {
            out.push(u);
        }
    }
    out
}

/// Mixed nonsingular nonnegative corpus: random matrices plus generated
/// potentials, double potentials and inverse M-matrices.
pub fn mixed_nonsingular(count: usize, dims: std::ops::RangeInclusive<usize>, seed0: u64) -> Vec<Matrix> {
    let q = count / 4;
    let mut out = non_potentials(count - 3 * q, dims.clone(), seed0);
    out.extend(corpus(GenClass::Potential, q, dims.clone(), seed0));
    out.extend(corpus(GenClass::DoublePotential, q, dims.clone(), seed0));
    out.extend(corpus(GenClass::InverseMMatrix, q, dims, seed0));
    out
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Gaussian vector at a log-uniform scale around `1 / |U|`.
pub fn probe(rng: &mut ChaCha8Rng, u: &Matrix) -> Vec<f64> {
    let scale = 10f64.powf(rng.random_range(-1.0..2.0)) / u.norm_inf().max(1e-300);
    gaussian_vec(rng, u.n(), scale)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    Matrix::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}
