//! Randomized search for negative values of a certificate functional.
//!
//! Restarts are independent: each owns a ChaCha stream derived from
//! `(seed, restart index)` and a fixed share of the evaluation budget, and
//! results are merged by value with ties going to the lower index. The
//! outcome therefore does not depend on how rayon schedules restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::linalg::{norm_inf, LuFactorization, Matrix};

use super::functional::Functional;

pub const DEFAULT_RESTARTS: usize = 32;

#[derive(Clone, Debug)]
pub(crate) struct Candidate {
    pub x: Vec<f64>,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct SearchOutcome {
    pub best: Option<Candidate>,
    pub evaluations: u64,
}

/// Tracks evaluations against a per-restart budget.
struct Counter<'a> {
    f: &'a Functional,
    used: u64,
    limit: u64,
}

impl Counter<'_> {
    fn exhausted(&self) -> bool {
        self.used >= self.limit
    }

    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.exhausted() {
            return None;
        }
        self.used += 1;
        Some(self.f.eval(x))
    }
}

pub(crate) fn random_search(f: &Functional, budget: u64, seed: u64, restarts: usize) -> SearchOutcome {
    let restarts = restarts.clamp(1, budget.max(1) as usize);
    let per = budget / restarts as u64;
    let extra = budget % restarts as u64;

    let results: Vec<(Option<Candidate>, u64)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let limit = per + u64::from((r as u64) < extra);
            let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(seed, r as u64));
            let mut counter = Counter { f, used: 0, limit };
            let best = run_restart(&mut counter, &mut rng);
            (best, counter.used)
        })
        .collect();

    let evaluations = results.iter().map(|(_, u)| u).sum();
    let best = results
        .into_iter()
        .filter_map(|(c, _)| c)
        .filter(|c| f.is_witness_value(&c.x, c.value))
        .fold(None::<Candidate>, |acc, c| match acc {
            Some(a) if a.value <= c.value => Some(a),
            _ => Some(c),
        });
    SearchOutcome { best, evaluations }
}

fn restart_seed(seed: u64, r: u64) -> u64 {
    // splitmix64 finalizer over (seed, r)
    let mut z = seed ^ r.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sample(rng: &mut ChaCha8Rng, n: usize, base_scale: f64) -> Vec<f64> {
    let scale = base_scale * 10f64.powf(rng.random_range(-1.0..3.0));
    match rng.random_range(0..3u8) {
        0 => (0..n)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect(),
        1 => {
            let k = rng.random_range(1..=n.min(3));
            let mut x = vec![0.0; n];
            for _ in 0..k {
                let i = rng.random_range(0..n);
                x[i] = scale * rng.sample::<f64, _>(StandardNormal);
            }
            x
        }
        _ => (0..n)
            .map(|_| {
                let mag: f64 = rng.random_range(0.0..1.0);
                if rng.random_bool(0.5) {
                    scale * mag
                } else {
                    -scale * mag
                }
            })
            .collect(),
    }
}

fn run_restart(counter: &mut Counter<'_>, rng: &mut ChaCha8Rng) -> Option<Candidate> {
    let n = counter.f.n();
    let base_scale = counter.f.natural_scale();
    let n_samples = (counter.limit / 4).max(1);

    let mut best: Option<Candidate> = None;
    for _ in 0..n_samples {
        let x = sample(rng, n, base_scale);
        let Some(value) = counter.eval(&x) else { break };
        if best.as_ref().map_or(true, |b| value < b.value) {
            best = Some(Candidate { x, value });
        }
    }
    let start = best?;
    Some(descend(counter, start))
}

const LINE_STEPS: [f64; 14] = [
    1.0, 2.0, 4.0, 8.0, 16.0, 64.0, 256.0, 0.5, 0.25, 0.125, 0.0625, 1.0 / 64.0, 1.0 / 256.0,
    1.0 / 1024.0,
];

/// Pattern-wise descent: minimize the quadratic piece (Newton step when the
/// piece is convex, steepest descent otherwise), line-search on the true
/// functional, and stop after `2n` activity-pattern changes.
fn descend(counter: &mut Counter<'_>, mut cur: Candidate) -> Candidate {
    let n = counter.f.n();
    let max_flips = 2 * n;
    let mut flips = 0;
    let mut pattern = counter.f.local_model(&cur.x).active;

    for _ in 0..(4 * n + 8) {
        if counter.exhausted() {
            break;
        }
        let model = counter.f.local_model(&cur.x);
        let mut directions: Vec<Vec<f64>> = Vec::with_capacity(2);
        if let Some(d) = newton_direction(&model.hess, &model.grad, n) {
            if model.directional_derivative(&d) < 0.0 {
                directions.push(d);
            }
        }
        let steepest: Vec<f64> = model.grad.iter().map(|g| -g).collect();
        if norm_inf(&steepest) > 0.0 {
            directions.push(steepest);
        } else {
            // Stationary on this piece: nudge along the largest coordinate.
            let xn = norm_inf(&cur.x).max(1e-12);
            directions.push(cur.x.iter().map(|v| v / xn).collect());
        }

        let mut improved: Option<Candidate> = None;
        'dirs: for d in &directions {
            for &t in &LINE_STEPS {
                let x: Vec<f64> = cur.x.iter().zip(d).map(|(a, b)| a + t * b).collect();
                if !x.iter().all(|v| v.is_finite()) {
                    continue;
                }
                let Some(value) = counter.eval(&x) else { break 'dirs };
                let bar = improved.as_ref().map_or(cur.value, |c| c.value);
                if value < bar - 1e-15 * (1.0 + bar.abs()) {
                    improved = Some(Candidate { x, value });
                } else if t < 1.0 && improved.is_some() {
                    break;
                }
            }
        }
        let Some(next) = improved else { break };
        cur = next;
        let new_pattern = counter.f.local_model(&cur.x).active;
        if new_pattern != pattern {
            flips += 1;
            pattern = new_pattern;
            if flips >= max_flips {
                break;
            }
        }
    }
    cur
}

fn newton_direction(hess: &[f64], grad: &[f64], n: usize) -> Option<Vec<f64>> {
    let h = Matrix::from_row_major(n, hess.to_vec()).ok()?;
    let lu = LuFactorization::new(&h);
    let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
    lu.solve(&neg).ok()
}

/// Shrinks a witness while it stays below the reporting threshold: first
/// zero coordinates one at a time, then halve the whole vector.
pub(crate) fn normalize(f: &Functional, mut cand: Candidate) -> Candidate {
    for i in 0..cand.x.len() {
        if cand.x[i] == 0.0 {
            continue;
        }
        let mut x = cand.x.clone();
        x[i] = 0.0;
        let value = f.eval(&x);
        if f.is_witness_value(&x, value) {
            cand = Candidate { x, value };
        }
    }
    // Search iterates can drift to huge scales; allow halving across the
    // whole exponent range.
    for _ in 0..2100 {
        let x: Vec<f64> = cand.x.iter().map(|v| v * 0.5).collect();
        let value = f.eval(&x);
        if !f.is_witness_value(&x, value) {
            break;
        }
        cand = Candidate { x, value };
    }
    cand
}
