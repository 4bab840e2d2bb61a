//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each; exits nonzero if any criterion fails.

mod common;

use std::time::Instant;

use common::*;
use potkit::certificates::{
    decide_cond4, eval_cond4, eval_cond_m, falsify, structural_violation, structural_witness,
    CertificateStatus, Condition, StructuralViolation,
};
use potkit::classify::classify;
use potkit::generators::{gen_singular_cmp, GenClass, GenSpec};
use potkit::linalg::invert;
use potkit::principles::{cmp_dp_bridge, proportional_columns, satisfies_cmp, satisfies_dp, Agreement, Method, PrincipleStatus};
use potkit::scaling::{normalize_column, normalize_double};
use potkit::{Matrix, Settings};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn ac1_example() -> Outcome {
    let u = example_u();
    let m = invert(&u).unwrap();
    let expected = example_m();
    let inv_err = m.max_abs_diff(&expected);
    let v = eval_cond4(&u, &[-0.5, 0.2]).unwrap();
    let r = classify(&u, TOL);
    let pass = inv_err <= 1e-12 && (v + 5.3).abs() <= 1e-12 && r.potential && !r.double_potential;
    outcome(
        pass,
        format!(
            "inverse err {inv_err:.1e}, cond4 = {v}, potential = {}, double_potential = {}",
            r.potential, r.double_potential
        ),
    )
}

fn ac2_double_potentials() -> Outcome {
    let us = corpus(GenClass::DoublePotential, 500, 2..=8, 2_000);
    let mut witnesses = 0;
    let mut worst = f64::INFINITY;
    for (i, u) in us.iter().enumerate() {
        if falsify(Condition::C4, u, 10_000, i as u64).is_some() {
            witnesses += 1;
        }
        let mut rng = rng(90_000 + i as u64);
        for _ in 0..10_000 {
            let x = probe(&mut rng, u);
            worst = worst.min(eval_cond4(u, &x).unwrap());
        }
    }
    outcome(
        witnesses == 0 && worst >= -1e-9,
        format!("500 instances: {witnesses} witnesses, min sampled value {worst:.3e}"),
    )
}

fn ac3_non_potentials() -> Outcome {
    let us = non_potentials(200, 2..=8, 3_000);
    let settings = Settings::default();
    let mut verified = 0;
    let mut unknown = Vec::new();
    for (i, u) in us.iter().enumerate() {
        let out = decide_cond4(u, &Settings { seed: i as u64, ..settings.clone() }).unwrap();
        match out.status {
            CertificateStatus::Fails if out.witness.as_ref().is_some_and(|w| w.verify(u)) => verified += 1,
            CertificateStatus::Unknown => unknown.push(format!(
                "#{i} n={} {}",
                u.n(),
                out.diagnostic.unwrap_or_default()
            )),
            _ => {}
        }
    }
    for line in &unknown {
        println!("      unknown: {line}");
    }
    outcome(verified >= 195, format!("{verified}/200 verified witnesses, {} unknown", unknown.len()))
}

fn ac4_scalings() -> Outcome {
    let inv_m = corpus(GenClass::InverseMMatrix, 200, 2..=8, 4_000);
    let a = inv_m
        .iter()
        .filter(|u| classify(&normalize_double(u).unwrap(), TOL).double_potential)
        .count();
    let pots = corpus(GenClass::Potential, 200, 2..=8, 4_500);
    let b = pots
        .iter()
        .filter(|u| classify(&normalize_column(u).unwrap(), TOL).double_potential)
        .count();
    let others = non_inverse_m(100, 2..=8, 4_800);
    let c = others
        .iter()
        .filter(|u| !classify(&normalize_double(u).unwrap(), TOL).double_potential)
        .count();
    outcome(
        a == 200 && b == 200 && c == 100,
        format!("DUE double potential {a}/200; UE double potential {b}/200; non-inverse-M rejected {c}/100"),
    )
}

fn expected_structural_value(m: &Matrix, v: StructuralViolation) -> f64 {
    match v {
        StructuralViolation::NegativeDiagonal { i } => 2.0 * m.get(i, i),
        StructuralViolation::PositiveOffDiagonal { .. } => -1.0,
        StructuralViolation::NegativeRowSum { i } => {
            let mii = m.get(i, i);
            let s: f64 = m.row(i).iter().sum();
            if mii <= 0.0 {
                s + mii
            } else {
                let t = (-s / (2.0 * mii)).min(1.0);
                t * (s + t * mii)
            }
        }
    }
}

/// A row and column dominant Z-matrix with positive diagonal.
fn dominant_z(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> Matrix {
    let off = Matrix::from_fn(n, |i, j| if i == j { 0.0 } else { -rng.random_range(0.0..1.0) });
    let rows = off.row_sums();
    let cols = off.col_sums();
    Matrix::from_fn(n, |i, j| {
        if i == j {
            -rows[i].min(cols[i]) + rng.random_range(0.05..1.0)
        } else {
            off.get(i, j)
        }
    })
}

fn ac5_structural() -> Outcome {
    let mut rng = rng(5_000);
    let mut ok = 0;
    let mut kind_mismatch = 0;
    let mut worst = 0.0f64;
    for case in 0..300 {
        let n = 2 + case % 5;
        let base = dominant_z(&mut rng, n);
        let i = rng.random_range(0..n);
        let (m, want_kind) = match case % 3 {
            // Negative diagonal.
            0 => (base.with_entry(i, i, -rng.random_range(0.1..2.0)), 0),
            // One positive off-diagonal entry, small enough to keep row sums nonnegative.
            1 => {
                let j = (i + 1 + rng.random_range(0..n - 1)) % n;
                let row_sum: f64 = base.row(i).iter().sum::<f64>() - base.get(i, j);
                let v = rng.random_range(0.01..1.0);
                let m = base.with_entry(i, j, v);
                let m = if row_sum + v < 0.0 {
                    m.with_entry(i, i, base.get(i, i) - row_sum - v + 0.1)
                } else {
                    m
                };
                (m, 1)
            }
            // Negative row sum with Z pattern and nonnegative diagonal.
            _ => {
                let s: f64 = base.row(i).iter().sum();
                let new_diag = if case % 2 == 0 {
                    0.0
                } else {
                    (base.get(i, i) - s - rng.random_range(0.05..1.0)).max(0.0)
                };
                let m = base.with_entry(i, i, new_diag);
                let m = if m.row(i).iter().sum::<f64>() >= 0.0 {
                    let j = (i + 1) % n;
                    m.with_entry(i, j, m.get(i, j) - m.row(i).iter().sum::<f64>() - 0.5)
                } else {
                    m
                };
                (m, 2)
            }
        };
        let Some(v) = structural_violation(&m, 0.0) else { continue };
        let kind = match v {
            StructuralViolation::NegativeDiagonal { .. } => 0,
            StructuralViolation::PositiveOffDiagonal { .. } => 1,
            StructuralViolation::NegativeRowSum { .. } => 2,
        };
        if kind != want_kind {
            kind_mismatch += 1;
            continue;
        }
        let Some(w) = structural_witness(&m) else { continue };
        let value = eval_cond_m(&m, &w.x).unwrap();
        let err = (value - expected_structural_value(&m, v)).abs();
        worst = worst.max(err);
        if value < 0.0 && err <= 1e-10 {
            ok += 1;
        }
    }
    outcome(
        ok == 300,
        format!("{ok}/300 negative and matching the closed form (max err {worst:.1e}, {kind_mismatch} mis-constructed)"),
    )
}

fn definitional() -> Settings {
    Settings {
        definitional: true,
        ..Settings::default()
    }
}

fn ac6_oracle_agreement() -> Outcome {
    let us = mixed_nonsingular(200, 2..=6, 6_000);
    let s = definitional();
    let mut cmp_dis = 0;
    let mut dp_dis = 0;
    let mut not_lp = 0;
    for u in &us {
        let r = classify(u, TOL);
        let cmp = satisfies_cmp(u, &s).unwrap();
        let dp = satisfies_dp(u, &s).unwrap();
        if cmp.method != Method::DefinitionalLp || dp.method != Method::DefinitionalLp {
            not_lp += 1;
        }
        if (cmp.status == PrincipleStatus::Holds) != r.potential || cmp.status == PrincipleStatus::Unknown {
            cmp_dis += 1;
        }
        if (dp.status == PrincipleStatus::Holds) != r.inverse_m_matrix || dp.status == PrincipleStatus::Unknown {
            dp_dis += 1;
        }
    }
    let potentials = us.iter().filter(|u| classify(u, TOL).potential).count();
    outcome(
        cmp_dis == 0 && dp_dis == 0 && not_lp == 0,
        format!("{} matrices ({potentials} potentials): CMP disagreements {cmp_dis}, DP disagreements {dp_dis}", us.len()),
    )
}

fn ac7_bridge() -> Outcome {
    let us: Vec<Matrix> = mixed_nonsingular(200, 2..=6, 6_000)
        .into_iter()
        .filter(|u| u.diag().iter().all(|d| *d > 0.0))
        .collect();
    let s = definitional();
    let bad = us
        .iter()
        .filter(|u| cmp_dp_bridge(u, &s).unwrap().agreement != Agreement::Consistent)
        .count();
    outcome(bad == 0, format!("{} positive-diagonal matrices, {bad} violations", us.len()))
}

fn ac8_proportional_columns() -> Outcome {
    let mut found = 0;
    let mut progenitor_clear = 0;
    for i in 0..100u64 {
        let n = 2 + (i as usize) % 7;
        let s = gen_singular_cmp(&GenSpec::new(GenClass::SingularCmp, n, 8_000 + i)).unwrap();
        if proportional_columns(&s.matrix, 1e-9).is_some() {
            found += 1;
        }
        if proportional_columns(s.progenitor.as_ref().unwrap(), 1e-9).is_none() {
            progenitor_clear += 1;
        }
    }
    outcome(
        found == 100 && progenitor_clear == 100,
        format!("pair found {found}/100, progenitors clear {progenitor_clear}/100"),
    )
}

fn ac9_symmetric() -> Outcome {
    let us = symmetric_mix(200, 2..=6, 9_000);
    let s = Settings::default();
    let mut mismatch = 0;
    let mut unknown = 0;
    for u in &us {
        let r = classify(u, TOL);
        let out = decide_cond4(u, &s).unwrap();
        match out.status {
            CertificateStatus::Unknown => unknown += 1,
            st => {
                if (st == CertificateStatus::Holds) != r.potential {
                    mismatch += 1;
                }
            }
        }
    }
    let potentials = us.iter().filter(|u| classify(u, TOL).potential).count();
    outcome(
        mismatch == 0 && unknown == 0,
        format!("{} symmetric ({potentials} potentials): {mismatch} mismatches, {unknown} unknown", us.len()),
    )
}

fn ac10_change_of_variables() -> Outcome {
    let mut rng = rng(10_000);
    let mut worst = 0.0f64;
    let mut bad = 0;
    let mut done = 0;
    while done < 1000 {
        let n = rng.random_range(1..=8);
        let m = gaussian_matrix(&mut rng, n);
        let Ok(u) = invert(&m) else { continue };
        let y = gaussian_vec(&mut rng, n, 2.0);
        let a = eval_cond_m(&m, &y).unwrap();
        let b = eval_cond4(&u, &m.mul_vec(&y)).unwrap();
        let rel = (a - b).abs() / (1.0 + a.abs());
        worst = worst.max(rel);
        if rel > 1e-9 {
            bad += 1;
        }
        done += 1;
    }
    outcome(bad == 0, format!("1000 pairs, {bad} above tolerance, max scaled gap {worst:.1e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1  example reproduction", ac1_example),
        ("2  double potentials satisfy (4)", ac2_double_potentials),
        ("3  non-potentials fail (4) with witnesses", ac3_non_potentials),
        ("4  DUE / UE scaling equivalences", ac4_scalings),
        ("5  structural witnesses for (M)", ac5_structural),
        ("6  definitional LP vs inverse characterization", ac6_oracle_agreement),
        ("7  CMP iff DP and equilibrium", ac7_bridge),
        ("8  proportional columns of singular CMP", ac8_proportional_columns),
        ("9  symmetric: (4) iff potential", ac9_symmetric),
        ("10 change of variables identity", ac10_change_of_variables),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {name}: {} ({:.2}s)", o.detail, start.elapsed().as_secs_f64());
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
