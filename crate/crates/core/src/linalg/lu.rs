use super::{LinalgError, Matrix};

/// Relative pivot threshold below which a factorization is flagged singular.
pub const SINGULAR_PIVOT_RTOL: f64 = 1e-12;

/// Partial-pivoting LU factorization `P A = L U`.
///
/// `L` (unit lower) and `U` share one row-major buffer. When a pivot falls
/// under `1e-12 * max|A_ij|` the factorization is still completed, but it is
/// flagged singular and [`LuFactorization::solve`] refuses to use it.
#[derive(Clone, Debug)]
pub struct LuFactorization {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    swaps: usize,
    singular: bool,
    rcond: f64,
}

impl LuFactorization {
    pub fn new(a: &Matrix) -> Self {
        let n = a.n();
        let mut lu = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        let threshold = SINGULAR_PIVOT_RTOL * a.max_abs();
        let mut singular = false;

        for k in 0..n {
            let (p, pivot_abs) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                swaps += 1;
            }
            if pivot_abs == 0.0 || pivot_abs < threshold {
                singular = true;
                if pivot_abs == 0.0 {
                    continue;
                }
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let factor = lu[i * n + k] / pivot;
                lu[i * n + k] = factor;
                if factor != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= factor * lu[k * n + j];
                    }
                }
            }
        }

        let mut f = Self {
            n,
            lu,
            perm,
            swaps,
            singular,
            rcond: 0.0,
        };
        if !f.singular {
            let inv_norm = f.inverse_unchecked().norm_one();
            let rcond = 1.0 / (a.norm_one() * inv_norm);
            f.rcond = if rcond.is_finite() { rcond } else { 0.0 };
        }
        f
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    /// Reciprocal 1-norm condition number, `0` for singular input.
    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    /// Row permutation: row `i` of `P A` is row `perm()[i]` of `A`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn determinant(&self) -> f64 {
        let prod: f64 = (0..self.n).map(|i| self.lu[i * self.n + i]).product();
        if self.swaps % 2 == 0 {
            prod
        } else {
            -prod
        }
    }

    pub fn lower(&self) -> Matrix {
        Matrix::from_fn(self.n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => self.lu[i * self.n + j],
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Less => 0.0,
        })
    }

    pub fn upper(&self) -> Matrix {
        Matrix::from_fn(self.n, |i, j| {
            if i <= j {
                self.lu[i * self.n + j]
            } else {
                0.0
            }
        })
    }

    /// `P A` for the original `A`.
    pub fn permute_rows(&self, a: &Matrix) -> Matrix {
        Matrix::from_fn(self.n, |i, j| a.get(self.perm[i], j))
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::Shape {
                expected: self.n,
                found: b.len(),
            });
        }
        if self.singular {
            return Err(LinalgError::Singular);
        }
        Ok(self.solve_unchecked(b))
    }

    pub fn inverse(&self) -> Result<Matrix, LinalgError> {
        if self.singular {
            return Err(LinalgError::Singular);
        }
        Ok(self.inverse_unchecked())
    }

    fn solve_unchecked(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: f64 = row.iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }

    fn inverse_unchecked(&self) -> Matrix {
        let n = self.n;
        let mut cols = Vec::with_capacity(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            cols.push(self.solve_unchecked(&e));
        }
        Matrix::from_fn(n, |i, j| cols[j][i])
    }
}

pub fn lu_factor(a: &Matrix) -> LuFactorization {
    LuFactorization::new(a)
}

pub fn solve(f: &LuFactorization, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    f.solve(b)
}

pub fn invert(a: &Matrix) -> Result<Matrix, LinalgError> {
    LuFactorization::new(a).inverse()
}
