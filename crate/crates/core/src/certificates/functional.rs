use crate::linalg::{dot, norm_inf, Matrix};
use crate::scaling::{col_scaling, row_scaling, ScalingError};

use super::Condition;

/// Relative negativity threshold for reporting a witness.
pub const FAILS_RTOL: f64 = 1e-7;

#[derive(Clone, Debug)]
pub(crate) enum Weight {
    Identity,
    Diagonal(Vec<f64>),
    Full(Matrix),
}

impl Weight {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Weight::Identity => x.to_vec(),
            Weight::Diagonal(d) => d.iter().zip(x).map(|(a, b)| a * b).collect(),
            Weight::Full(m) => m.mul_vec(x),
        }
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        match self {
            Weight::Identity => f64::from(u8::from(i == j)),
            Weight::Diagonal(d) => {
                if i == j {
                    d[i]
                } else {
                    0.0
                }
            }
            Weight::Full(m) => m.get(i, j),
        }
    }

    fn norm_inf(&self) -> f64 {
        match self {
            Weight::Identity => 1.0,
            Weight::Diagonal(d) => norm_inf(d),
            Weight::Full(m) => m.norm_inf(),
        }
    }
}

/// `f(x) = <(A x - b)^+, B x>`; `A = None` stands for the identity.
///
/// Conditions (4), (5), (6) and (M) are all of this shape:
///
/// | cond | A | b            | B              |
/// |------|---|--------------|----------------|
/// | 4    | U | 1            | I              |
/// | 5    | U | row sums r   | diag(c / r)    |
/// | 6    | U | 1            | diag(c)        |
/// | M    | I | 1            | M              |
///
/// with `c` the column sums of `U`.
#[derive(Clone, Debug)]
pub(crate) struct Functional {
    pub condition: Condition,
    lhs: Option<Matrix>,
    offset: Vec<f64>,
    weight: Weight,
    scale: f64,
}

impl Functional {
    pub fn new(condition: Condition, a: &Matrix) -> Result<Self, ScalingError> {
        let n = a.n();
        let (lhs, offset, weight) = match condition {
            Condition::C4 => (Some(a.clone()), vec![1.0; n], Weight::Identity),
            Condition::C5 => {
                let d = row_scaling(a)?;
                let e = col_scaling(a)?;
                let w = e
                    .inverse_diag()
                    .iter()
                    .zip(d.inverse_diag())
                    .map(|(c, r)| c / r)
                    .collect();
                (Some(a.clone()), d.inverse_diag().to_vec(), Weight::Diagonal(w))
            }
            Condition::C6 => {
                let e = col_scaling(a)?;
                (
                    Some(a.clone()),
                    vec![1.0; n],
                    Weight::Diagonal(e.inverse_diag().to_vec()),
                )
            }
            Condition::CM => (None, vec![1.0; n], Weight::Full(a.clone())),
        };
        let lhs_norm = lhs.as_ref().map_or(1.0, Matrix::norm_inf);
        let scale = lhs_norm * weight.norm_inf();
        Ok(Self {
            condition,
            lhs,
            offset,
            weight,
            scale,
        })
    }

    pub fn n(&self) -> usize {
        self.offset.len()
    }

    /// Magnitude of `x` at which `A x - b` starts to change sign.
    pub fn natural_scale(&self) -> f64 {
        let lhs_norm = self.lhs.as_ref().map_or(1.0, Matrix::norm_inf);
        if lhs_norm > 0.0 {
            1.0 / lhs_norm
        } else {
            1.0
        }
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let ax = match &self.lhs {
            Some(a) => a.mul_vec(x),
            None => x.to_vec(),
        };
        ax.iter().zip(&self.offset).map(|(v, b)| v - b).collect()
    }

    fn lhs_entry(&self, i: usize, j: usize) -> f64 {
        match &self.lhs {
            Some(a) => a.get(i, j),
            None => f64::from(u8::from(i == j)),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r = self.residual(x);
        let w = self.weight.apply(x);
        r.iter()
            .zip(&w)
            .filter(|(ri, _)| **ri > 0.0)
            .map(|(ri, wi)| ri * wi)
            .sum()
    }

    /// Below this value a point counts as a witness.
    pub fn threshold(&self, x: &[f64]) -> f64 {
        let xn = norm_inf(x);
        -FAILS_RTOL * (1.0 + self.scale * xn * xn)
    }

    pub fn is_witness_value(&self, x: &[f64], value: f64) -> bool {
        value < self.threshold(x)
    }

    /// Active set, gradient and Hessian of the quadratic piece containing `x`.
    pub fn local_model(&self, x: &[f64]) -> LocalModel {
        let n = self.n();
        let r = self.residual(x);
        let w = self.weight.apply(x);
        let active: Vec<bool> = r.iter().map(|v| *v > 0.0).collect();

        // grad = A_S^t w_S + B_S^t r_S
        let mut grad = vec![0.0; n];
        for i in (0..n).filter(|&i| active[i]) {
            for (k, g) in grad.iter_mut().enumerate() {
                *g += self.lhs_entry(i, k) * w[i] + self.weight.entry(i, k) * r[i];
            }
        }
        // H = A_S^t B_S + B_S^t A_S
        let mut hess = vec![0.0; n * n];
        for i in (0..n).filter(|&i| active[i]) {
            for k in 0..n {
                let a_ik = self.lhs_entry(i, k);
                let b_ik = self.weight.entry(i, k);
                if a_ik == 0.0 && b_ik == 0.0 {
                    continue;
                }
                for l in 0..n {
                    hess[k * n + l] += a_ik * self.weight.entry(i, l) + b_ik * self.lhs_entry(i, l);
                }
            }
        }
        LocalModel { active, grad, hess }
    }
}

pub(crate) struct LocalModel {
    pub active: Vec<bool>,
    pub grad: Vec<f64>,
    /// Row-major `n x n`.
    pub hess: Vec<f64>,
}

impl LocalModel {
    pub fn directional_derivative(&self, d: &[f64]) -> f64 {
        dot(&self.grad, d)
    }
}
