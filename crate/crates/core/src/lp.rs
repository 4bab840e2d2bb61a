//! Small dense linear programs over a box.
//!
//! Every problem is `max c.x` subject to `a_k . x <= b_k` and
//! `-B <= x_i <= B`. The box keeps every problem bounded; when the box is
//! what stops the objective from growing the result is tagged
//! [`LpStatus::BoxBounded`] so callers can read it as "unbounded in a
//! violation direction".
//!
//! The solver is a two-phase tableau simplex (Dantzig pricing, Bland's rule
//! after a run of degenerate pivots). Once a basis is optimal the primal
//! point is recomputed from the original data through an LU solve so the
//! reported optimizer does not carry accumulated tableau round-off.

use serde::{Deserialize, Serialize};

use crate::linalg::{dot, LuFactorization, Matrix};

const PIVOT_EPS: f64 = 1e-11;
const DEGENERATE_STREAK_FOR_BLAND: usize = 50;
const MAX_PIVOTS: usize = 50_000;

/// One linear inequality `coeffs . x <= rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl Constraint {
    pub fn le(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self { coeffs, rhs }
    }

    /// `coeffs . x >= rhs`, stored negated.
    pub fn ge(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self {
            coeffs: coeffs.into_iter().map(|a| -a).collect(),
            rhs: -rhs,
        }
    }

    /// Single-variable bound `x_i <= rhs` in dimension `n`.
    pub fn var_le(n: usize, i: usize, rhs: f64) -> Self {
        let mut coeffs = vec![0.0; n];
        coeffs[i] = 1.0;
        Self { coeffs, rhs }
    }

    /// Single-variable bound `x_i >= rhs` in dimension `n`.
    pub fn var_ge(n: usize, i: usize, rhs: f64) -> Self {
        let mut coeffs = vec![0.0; n];
        coeffs[i] = -1.0;
        Self { coeffs, rhs: -rhs }
    }

    /// Signed slack `rhs - coeffs . x`; negative means violated.
    pub fn slack(&self, x: &[f64]) -> f64 {
        self.rhs - dot(&self.coeffs, x)
    }

    fn scale(&self, x: &[f64]) -> f64 {
        1.0 + self.rhs.abs()
            + self
                .coeffs
                .iter()
                .zip(x)
                .map(|(a, v)| (a * v).abs())
                .sum::<f64>()
    }

    /// Violation relative to the magnitude of the terms involved.
    pub fn relative_violation(&self, x: &[f64]) -> f64 {
        (-self.slack(x)).max(0.0) / self.scale(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    /// Optimal for the boxed problem, but the artificial box is binding.
    BoxBounded,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    pub value: f64,
    pub x: Vec<f64>,
}

impl LpResult {
    pub fn is_feasible(&self) -> bool {
        self.status != LpStatus::Infeasible
    }
}

/// Maximizes `objective . x` over the constraints intersected with `[-bound, bound]^n`.
pub fn lp_maximize(objective: &[f64], constraints: &[Constraint], bound: f64) -> LpResult {
    assert!(bound > 0.0 && bound.is_finite(), "box bound must be positive");
    let n = objective.len();
    for c in constraints {
        assert_eq!(c.coeffs.len(), n, "constraint dimension mismatch");
    }
    Tableau::build(objective, constraints, bound).solve()
}

/// Column roles in the tableau.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Col {
    Var(usize),
    Slack(usize),
    Artificial,
}

struct Tableau {
    n: usize,
    bound: f64,
    /// Shifted problem `z = x + B`, rows `A z (<=|=) b` with `b >= 0` after sign flips.
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    /// Original (pre-elimination) copy of `rows`, used to recompute the primal point.
    orig_rows: Vec<Vec<f64>>,
    orig_rhs: Vec<f64>,
    cols: Vec<Col>,
    basis: Vec<usize>,
    /// Row index where each user/box row ended up; box rows follow user rows.
    n_user: usize,
    objective: Vec<f64>,
}

impl Tableau {
    fn build(objective: &[f64], constraints: &[Constraint], bound: f64) -> Self {
        let n = objective.len();
        let n_user = constraints.len();
        let m = n_user + n;
        let n_art = constraints
            .iter()
            .filter(|c| c.rhs + bound * c.coeffs.iter().sum::<f64>() < 0.0)
            .count();
        let width = n + m + n_art;

        let mut cols: Vec<Col> = (0..n).map(Col::Var).collect();
        cols.extend((0..m).map(Col::Slack));
        cols.extend((0..n_art).map(|_| Col::Artificial));

        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut next_art = n + m;

        let shifted = constraints
            .iter()
            .map(|c| (c.coeffs.clone(), c.rhs + bound * c.coeffs.iter().sum::<f64>()))
            .chain((0..n).map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                (e, 2.0 * bound)
            }));

        for (r, (coeffs, b)) in shifted.enumerate() {
            let mut row = vec![0.0; width];
            if b < 0.0 {
                for (dst, a) in row.iter_mut().zip(&coeffs) {
                    *dst = -a;
                }
                row[n + r] = -1.0;
                row[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
                rhs.push(-b);
            } else {
                row[..n].copy_from_slice(&coeffs);
                row[n + r] = 1.0;
                basis.push(n + r);
                rhs.push(b);
            }
            rows.push(row);
        }

        Self {
            n,
            bound,
            orig_rows: rows.clone(),
            orig_rhs: rhs.clone(),
            rows,
            rhs,
            cols,
            basis,
            n_user,
            objective: objective.to_vec(),
        }
    }

    fn width(&self) -> usize {
        self.cols.len()
    }

    /// Reduced costs `c_j - c_B B^-1 A_j` and the current objective value.
    fn price(&self, cost: &[f64]) -> (Vec<f64>, f64) {
        let mut d = cost.to_vec();
        let mut value = 0.0;
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb == 0.0 {
                continue;
            }
            value += cb * self.rhs[r];
            for (dj, a) in d.iter_mut().zip(&self.rows[r]) {
                *dj -= cb * a;
            }
        }
        (d, value)
    }

    fn pivot(&mut self, r: usize, col: usize, d: &mut [f64]) {
        let p = self.rows[r][col];
        for a in self.rows[r].iter_mut() {
            *a /= p;
        }
        self.rhs[r] /= p;
        self.rows[r][col] = 1.0;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][col];
            if f == 0.0 {
                continue;
            }
            for (a, pr) in self.rows[i].iter_mut().zip(&pivot_row) {
                *a -= f * pr;
            }
            self.rows[i][col] = 0.0;
            self.rhs[i] = (self.rhs[i] - f * pivot_rhs).max(0.0);
        }
        let f = d[col];
        if f != 0.0 {
            for (dj, pr) in d.iter_mut().zip(&pivot_row) {
                *dj -= f * pr;
            }
            d[col] = 0.0;
        }
        self.basis[r] = col;
    }

    /// Runs simplex iterations on `d` (reduced costs for a max problem).
    fn iterate(&mut self, d: &mut [f64], allowed: impl Fn(Col) -> bool, opt_tol: f64) {
        let mut degenerate_streak = 0;
        for _ in 0..MAX_PIVOTS {
            let use_bland = degenerate_streak >= DEGENERATE_STREAK_FOR_BLAND;
            let mut entering = None;
            let mut best = opt_tol;
            for j in 0..self.width() {
                if !allowed(self.cols[j]) || d[j] <= opt_tol {
                    continue;
                }
                if use_bland {
                    entering = Some(j);
                    break;
                }
                if d[j] > best {
                    best = d[j];
                    entering = Some(j);
                }
            }
            let Some(col) = entering else {
                return;
            };

            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][col];
                if a <= PIVOT_EPS {
                    continue;
                }
                let ratio = self.rhs[r] / a;
                leaving = match leaving {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - 1e-12 * (1.0 + lratio.abs())
                            || (ratio <= lratio + 1e-12 * (1.0 + lratio.abs())
                                && self.basis[r] < self.basis[lr])
                        {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((r, ratio)) = leaving else {
                // Cannot happen with the box rows present; stop rather than loop.
                d[col] = 0.0;
                continue;
            };
            if ratio <= 1e-12 {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }
            self.pivot(r, col, d);
        }
    }

    fn solve(mut self) -> LpResult {
        let n = self.n;
        let width = self.width();
        let has_artificial = self.cols.iter().any(|c| *c == Col::Artificial);

        if has_artificial {
            let cost: Vec<f64> = self
                .cols
                .iter()
                .map(|c| if *c == Col::Artificial { -1.0 } else { 0.0 })
                .collect();
            let (mut d, _) = self.price(&cost);
            self.iterate(&mut d, |_| true, 1e-12);
            let infeasibility: f64 = self
                .basis
                .iter()
                .zip(&self.rhs)
                .filter(|(b, _)| self.cols[**b] == Col::Artificial)
                .map(|(_, v)| *v)
                .sum();
            let scale = 1.0 + self.orig_rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if infeasibility > 1e-9 * scale {
                return LpResult {
                    status: LpStatus::Infeasible,
                    value: f64::NEG_INFINITY,
                    x: vec![0.0; n],
                };
            }
            // Drive zero-level artificials out of the basis.
            for r in 0..self.rows.len() {
                if self.cols[self.basis[r]] != Col::Artificial {
                    continue;
                }
                let replacement = (0..width)
                    .filter(|&j| self.cols[j] != Col::Artificial)
                    .max_by(|&a, &b| {
                        self.rows[r][a]
                            .abs()
                            .partial_cmp(&self.rows[r][b].abs())
                            .unwrap()
                    })
                    .filter(|&j| self.rows[r][j].abs() > 1e-9);
                if let Some(j) = replacement {
                    let mut scratch = vec![0.0; width];
                    self.pivot(r, j, &mut scratch);
                } else {
                    // Redundant row; zero it so it never constrains a ratio test.
                    self.rows[r].iter_mut().for_each(|a| *a = 0.0);
                    self.rhs[r] = 0.0;
                }
            }
        }

        let mut cost = vec![0.0; width];
        cost[..n].copy_from_slice(&self.objective);
        let scale = 1.0 + self.objective.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let (mut d, _) = self.price(&cost);
        self.iterate(&mut d, |c| c != Col::Artificial, 1e-11 * scale);

        let z = self.recompute_primal();
        let x: Vec<f64> = z
            .iter()
            .map(|v| (v - self.bound).clamp(-self.bound, self.bound))
            .collect();
        let value = dot(&self.objective, &x);

        let dual_tol = 1e-9 * scale;
        let lower_binding = (0..n).any(|j| !self.basis.contains(&j) && -d[j] > dual_tol);
        let upper_binding = (0..n).any(|i| {
            let slack_col = n + self.n_user + i;
            !self.basis.contains(&slack_col) && -d[slack_col] > dual_tol
        });
        let status = if lower_binding || upper_binding {
            LpStatus::BoxBounded
        } else {
            LpStatus::Optimal
        };
        LpResult { status, value, x }
    }

    /// Solves `B z_B = b` on the original rows for the final basis.
    fn recompute_primal(&self) -> Vec<f64> {
        let n = self.n;
        let m = self.rows.len();
        let tableau_z = || {
            let mut z = vec![0.0; n];
            for (r, &b) in self.basis.iter().enumerate() {
                if let Col::Var(j) = self.cols[b] {
                    z[j] = self.rhs[r];
                }
            }
            z
        };
        let Ok(bmat) = Matrix::from_row_major(
            m,
            (0..m)
                .flat_map(|r| self.basis.iter().map(move |&b| self.orig_rows[r][b]))
                .collect(),
        ) else {
            return tableau_z();
        };
        let lu = LuFactorization::new(&bmat);
        match lu.solve(&self.orig_rhs) {
            Ok(values) => {
                let mut z = vec![0.0; n];
                for (k, &b) in self.basis.iter().enumerate() {
                    if let Col::Var(j) = self.cols[b] {
                        z[j] = values[k];
                    }
                }
                z
            }
            Err(_) => tableau_z(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_upper_bound_is_optimal() {
        let res = lp_maximize(&[1.0], &[Constraint::var_le(1, 0, 1.0)], 10.0);
        assert_eq!(res.status, LpStatus::Optimal);
        assert!((res.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unconstrained_hits_the_box() {
        let res = lp_maximize(&[1.0], &[], 10.0);
        assert_eq!(res.status, LpStatus::BoxBounded);
        assert!((res.value - 10.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_system_is_reported() {
        let cons = [Constraint::var_le(2, 0, -1.0), Constraint::var_ge(2, 0, 1.0)];
        let res = lp_maximize(&[0.0, 1.0], &cons, 10.0);
        assert_eq!(res.status, LpStatus::Infeasible);
    }

    #[test]
    fn negative_rhs_requires_phase_one() {
        // max -x - y  s.t. x + y >= 3, x <= 2
        let cons = [
            Constraint::ge(vec![1.0, 1.0], 3.0),
            Constraint::var_le(2, 0, 2.0),
        ];
        let res = lp_maximize(&[-1.0, -1.0], &cons, 100.0);
        assert_eq!(res.status, LpStatus::Optimal);
        assert!((res.value + 3.0).abs() < 1e-9);
        assert!(cons.iter().all(|c| c.slack(&res.x) >= -1e-9));
    }

    #[test]
    fn orthant_problem_for_a_potential_stays_below_one() {
        // max (Ux)_2 s.t. x1 >= 0, x2 <= 0, (Ux)_1 <= 1
        let u = Matrix::from_rows(&[[2.0, 100.0], [1.0, 100.0]]).unwrap();
        let cons = [
            Constraint::var_ge(2, 0, 0.0),
            Constraint::var_le(2, 1, 0.0),
            Constraint::le(u.row(0).to_vec(), 1.0),
        ];
        let res = lp_maximize(u.row(1), &cons, 100.0);
        assert!(res.is_feasible());
        assert!(res.value <= 1.0 + 1e-9, "value {}", res.value);
        assert!(cons.iter().all(|c| c.slack(&res.x) >= -1e-9));
    }

    #[test]
    fn equality_pair_is_feasible() {
        // x + y = 1, x - y = 0 -> (0.5, 0.5)
        let cons = [
            Constraint::le(vec![1.0, 1.0], 1.0),
            Constraint::ge(vec![1.0, 1.0], 1.0),
            Constraint::le(vec![1.0, -1.0], 0.0),
            Constraint::ge(vec![1.0, -1.0], 0.0),
        ];
        let res = lp_maximize(&[0.0, 0.0], &cons, 10.0);
        assert_eq!(res.status, LpStatus::Optimal);
        assert!((res.x[0] - 0.5).abs() < 1e-12 && (res.x[1] - 0.5).abs() < 1e-12);
    }
}
