//! Reciprocal row/column-sum scalings `D`, `E` and the transforms `D U E`, `U E`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalingKind {
    /// `D_ii = 1 / sum_j U_ij`.
    RowReciprocal,
    /// `E_ii = 1 / sum_j U_ji`.
    ColumnReciprocal,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScalingError {
    #[error("row {index} has nonpositive sum {sum}")]
    NonPositiveRowSum { index: usize, sum: f64 },
    #[error("column {index} has nonpositive sum {sum}")]
    NonPositiveColumnSum { index: usize, sum: f64 },
    #[error("entry ({row}, {col}) = {value} is negative")]
    NegativeEntry { row: usize, col: usize, value: f64 },
}

/// A positive diagonal, stored both as the diagonal and as the raw sums it
/// was built from (`D^-1 1` or `E^-1 1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalScaling {
    pub kind: ScalingKind,
    diag: Vec<f64>,
    sums: Vec<f64>,
}

impl DiagonalScaling {
    fn from_sums(kind: ScalingKind, sums: Vec<f64>) -> Result<Self, ScalingError> {
        if let Some((index, &sum)) = sums.iter().enumerate().find(|(_, s)| !(**s > 0.0)) {
            return Err(match kind {
                ScalingKind::RowReciprocal => ScalingError::NonPositiveRowSum { index, sum },
                ScalingKind::ColumnReciprocal => ScalingError::NonPositiveColumnSum { index, sum },
            });
        }
        Ok(Self {
            kind,
            diag: sums.iter().map(|s| 1.0 / s).collect(),
            sums,
        })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Diagonal entries of the scaling matrix.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Reciprocals of [`Self::diag`], i.e. the row or column sums of `U`.
    pub fn inverse_diag(&self) -> &[f64] {
        &self.sums
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::diagonal(&self.diag)
    }

    /// `S x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.diag.iter().zip(x).map(|(d, v)| d * v).collect()
    }

    /// `S^-1 x`.
    pub fn apply_inverse(&self, x: &[f64]) -> Vec<f64> {
        self.sums.iter().zip(x).map(|(s, v)| s * v).collect()
    }
}

fn check_nonnegative(u: &Matrix) -> Result<(), ScalingError> {
    for (row, r) in u.rows().enumerate() {
        if let Some((col, &value)) = r.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(ScalingError::NegativeEntry { row, col, value });
        }
    }
    Ok(())
}

pub fn row_scaling(u: &Matrix) -> Result<DiagonalScaling, ScalingError> {
    check_nonnegative(u)?;
    DiagonalScaling::from_sums(ScalingKind::RowReciprocal, u.row_sums())
}

pub fn col_scaling(u: &Matrix) -> Result<DiagonalScaling, ScalingError> {
    check_nonnegative(u)?;
    DiagonalScaling::from_sums(ScalingKind::ColumnReciprocal, u.col_sums())
}

/// `W = D U E`. Satisfies `W (E^-1 1) = 1` and `(D^-1 1)^t W = 1^t`.
pub fn normalize_double(u: &Matrix) -> Result<Matrix, ScalingError> {
    let d = row_scaling(u)?;
    let e = col_scaling(u)?;
    let w = u.scale_rows_cols(d.diag(), e.diag());
    debug_assert!(max_rel_dev_from_ones(&w.mul_vec(e.inverse_diag())) <= 1e-10);
    debug_assert!(max_rel_dev_from_ones(&w.vec_mul(d.inverse_diag())) <= 1e-10);
    Ok(w)
}

/// `W = U E`, whose column sums are all one.
pub fn normalize_column(u: &Matrix) -> Result<Matrix, ScalingError> {
    let e = col_scaling(u)?;
    Ok(u.scale_rows_cols(&vec![1.0; u.n()], e.diag()))
}

fn max_rel_dev_from_ones(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max((x - 1.0).abs()))
}
