//! `potkit`: classify nonnegative matrices, decide the inner-product
//! certificates, check the maximum and domination principles, and generate
//! test matrices.
//!
//! Exit codes: 0 holds (or success), 1 fails, 2 input or precondition error,
//! 3 undetermined.

mod report;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use potkit::certificates::{decide, falsify, CertificateError, CertificateStatus, Condition};
use potkit::classify::classify;
use potkit::generators::{generate, GenClass, GenError, GenSpec};
use potkit::io::{read_matrix_file, write_matrix, ReadError};
use potkit::principles::{
    cmp_dp_bridge, satisfies_cmp, satisfies_dp, Agreement, PrincipleError, PrincipleStatus, PrincipleVerdict,
    Violation,
};
use potkit::scaling::{col_scaling, normalize_column, normalize_double, row_scaling, ScalingError};
use potkit::Settings;
use thiserror::Error;

use report::{Body, Report};

const EXIT_HOLDS: i32 = 0;
const EXIT_FAILS: i32 = 1;
const EXIT_ERROR: i32 = 2;
const EXIT_UNKNOWN: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "potkit", version, about = "Potential and inverse M-matrix toolkit")]
struct Cli {
    /// Print the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Classification tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Functional evaluations allowed to a witness search.
    #[arg(long, global = true, default_value_t = 100_000)]
    budget: u64,
    /// Largest dimension for the exhaustive support sweeps.
    #[arg(long, global = true, default_value_t = 12)]
    nmax: usize,
    /// Box bound for the principle LPs.
    #[arg(long = "box", global = true, default_value_t = 1e3)]
    box_bound: f64,
    #[arg(long, global = true, env = "PK_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Check the principles from their definitions even when the inverse exists.
    #[arg(long, global = true)]
    definitional: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Report sign pattern, dominance, M-matrix and potential status.
    Classify { path: PathBuf },
    /// Decide one of the certificates (4), (5), (6) or (M).
    Certify {
        path: PathBuf,
        #[arg(long, value_enum)]
        cond: CondArg,
    },
    /// Search for a witness without using any class test.
    Falsify {
        path: PathBuf,
        #[arg(long, value_enum)]
        cond: CondArg,
    },
    /// Check the complete maximum principle, the domination principle, or both.
    Principles {
        path: PathBuf,
        #[arg(long, value_enum)]
        principle: PrincipleArg,
    },
    /// Write D U E or U E with the scaling diagonals.
    Scale {
        path: PathBuf,
        #[arg(long, value_enum)]
        mode: ScaleMode,
        /// Write the matrix here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate random matrices of a class.
    Generate {
        #[arg(long, value_parser = parse_class)]
        class: GenClass,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        /// Directory for the files; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CondArg {
    #[value(name = "4")]
    C4,
    #[value(name = "5")]
    C5,
    #[value(name = "6")]
    C6,
    #[value(name = "M", alias = "m")]
    CM,
}

impl From<CondArg> for Condition {
    fn from(c: CondArg) -> Self {
        match c {
            CondArg::C4 => Condition::C4,
            CondArg::C5 => Condition::C5,
            CondArg::C6 => Condition::C6,
            CondArg::CM => Condition::CM,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PrincipleArg {
    Cmp,
    Dp,
    Bridge,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScaleMode {
    Due,
    Ue,
}

fn parse_class(s: &str) -> Result<GenClass, String> {
    s.parse::<GenClass>().map_err(|e| {
        let names: Vec<&str> = GenClass::ALL.iter().map(|c| c.name()).collect();
        format!("{e}; expected one of {}", names.join(", "))
    })
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Read(#[from] ReadError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
    #[error(transparent)]
    Principle(#[from] PrincipleError),
    #[error(transparent)]
    Scaling(#[from] ScalingError),
    #[error(transparent)]
    Generate(#[from] GenError),
    #[error("{0}")]
    Invalid(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn status_code(s: CertificateStatus) -> i32 {
    match s {
        CertificateStatus::Holds => EXIT_HOLDS,
        CertificateStatus::Fails => EXIT_FAILS,
        CertificateStatus::Unknown => EXIT_UNKNOWN,
    }
}

fn principle_code(s: PrincipleStatus) -> i32 {
    match s {
        PrincipleStatus::Holds => EXIT_HOLDS,
        PrincipleStatus::Fails => EXIT_FAILS,
        PrincipleStatus::Unknown => EXIT_UNKNOWN,
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// Runs the command and returns its body, exit code and any matrix text
/// destined for stdout.
fn execute(cli: &Cli, settings: &Settings) -> Result<(Body, i32, Option<String>), CliError> {
    Ok(match &cli.command {
        Command::Classify { path } => {
            let u = read_matrix_file(path)?;
            (Body::Classification(classify(&u, settings.tol)), EXIT_HOLDS, None)
        }
        Command::Certify { path, cond } => {
            let a = read_matrix_file(path)?;
            let out = decide((*cond).into(), &a, settings)?;
            let code = status_code(out.status);
            (Body::Certificate(out), code, None)
        }
        Command::Falsify { path, cond } => {
            let a = read_matrix_file(path)?;
            if settings.budget == 0 {
                return Err(CliError::Invalid("--budget must be at least 1".into()));
            }
            let condition: Condition = (*cond).into();
            // Surface scaling preconditions as errors instead of an empty search.
            if matches!(condition, Condition::C4 | Condition::C5 | Condition::C6)
                && !potkit::classify::is_nonnegative(&a, 0.0)
            {
                return Err(CertificateError::NotNonnegative.into());
            }
            if condition == Condition::C5 {
                row_scaling(&a)?;
            }
            if matches!(condition, Condition::C5 | Condition::C6) {
                col_scaling(&a)?;
            }
            let witness = falsify(condition, &a, settings.budget, settings.seed);
            let code = if witness.is_some() { EXIT_FAILS } else { EXIT_UNKNOWN };
            (
                Body::Falsify {
                    condition,
                    budget: settings.budget,
                    witness,
                },
                code,
                None,
            )
        }
        Command::Principles { path, principle } => {
            let u = read_matrix_file(path)?;
            match principle {
                PrincipleArg::Cmp => {
                    let v = satisfies_cmp(&u, settings)?;
                    let code = principle_code(v.status);
                    (Body::Principle(v), code, None)
                }
                PrincipleArg::Dp => {
                    let v = satisfies_dp(&u, settings)?;
                    let code = principle_code(v.status);
                    (Body::Principle(v), code, None)
                }
                PrincipleArg::Bridge => {
                    let b = cmp_dp_bridge(&u, settings)?;
                    let code = match b.agreement {
                        Agreement::Consistent => EXIT_HOLDS,
                        Agreement::Inconsistent => EXIT_FAILS,
                        Agreement::Undetermined => EXIT_UNKNOWN,
                    };
                    (Body::Bridge(b), code, None)
                }
            }
        }
        Command::Scale { path, mode, out } => {
            let u = read_matrix_file(path)?;
            let e = col_scaling(&u)?;
            let (name, matrix, d) = match mode {
                ScaleMode::Due => {
                    let d = row_scaling(&u)?;
                    ("due", normalize_double(&u)?, Some(d.diag().to_vec()))
                }
                ScaleMode::Ue => ("ue", normalize_column(&u)?, None),
            };
            let mut text = String::new();
            if let Some(d) = &d {
                writeln!(text, "# D = {}", join(d)).unwrap();
            }
            writeln!(text, "# E = {}", join(e.diag())).unwrap();
            text.push_str(&write_matrix(&matrix));
            let stdout_text = match out {
                Some(p) => {
                    write_file(p, &text)?;
                    None
                }
                None => Some(text),
            };
            (
                Body::Scale {
                    mode: name.into(),
                    matrix,
                    d,
                    e: e.diag().to_vec(),
                },
                EXIT_HOLDS,
                stdout_text,
            )
        }
        Command::Generate {
            class,
            n,
            count,
            k,
            density,
            out,
        } => {
            let specs: Vec<GenSpec> = (0..*count as u64)
                .map(|i| GenSpec {
                    n: *n,
                    class: *class,
                    k: *k,
                    density: *density,
                    seed: settings.seed.wrapping_add(i),
                })
                .collect();
            let matrices = specs.iter().map(generate).collect::<Result<Vec<_>, _>>()?;
            let mut files = Vec::new();
            let mut text = String::new();
            if let Some(dir) = out {
                std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
                    path: dir.display().to_string(),
                    source,
                })?;
                for (spec, m) in specs.iter().zip(&matrices) {
                    let path = dir.join(format!("{}_n{}_seed{}.txt", spec.class, spec.n, spec.seed));
                    write_file(&path, &format!("{}{}", spec_comment(spec), write_matrix(m)))?;
                    files.push(path.display().to_string());
                }
            } else {
                for (spec, m) in specs.iter().zip(&matrices) {
                    text.push_str(&spec_comment(spec));
                    text.push_str(&write_matrix(m));
                }
            }
            let stdout_text = out.is_none().then_some(text);
            (
                Body::Generate {
                    specs,
                    files,
                    matrices,
                },
                EXIT_HOLDS,
                stdout_text,
            )
        }
    })
}

fn spec_comment(spec: &GenSpec) -> String {
    format!(
        "# class={} n={} k={} density={} seed={}\n",
        spec.class, spec.n, spec.k, spec.density, spec.seed
    )
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ")
}

fn flag(name: &str, v: bool) -> String {
    format!("  {name:<20} {v}\n")
}

fn render_verdict(out: &mut String, v: &PrincipleVerdict) {
    writeln!(out, "{:?}: {} ({:?})", v.principle, v.status, v.method).unwrap();
    match &v.violation {
        Some(Violation::Cmp { x }) => writeln!(out, "  violation x = [{}]", join(x)).unwrap(),
        Some(Violation::Dp { x, y }) => {
            writeln!(out, "  violation x = [{}]", join(x)).unwrap();
            writeln!(out, "            y = [{}]", join(y)).unwrap();
        }
        None => {}
    }
    if let Some(m) = v.margin {
        writeln!(out, "  margin {m:e}").unwrap();
    }
    if let Some(note) = &v.note {
        writeln!(out, "  note: {note}").unwrap();
    }
}

fn render(body: &Body) -> String {
    let mut out = String::new();
    match body {
        Body::Classification(r) => {
            writeln!(out, "n = {}, tol = {:e}, rcond = {:.3e}", r.n, r.tol, r.rcond).unwrap();
            out.push_str(&flag("nonnegative", r.nonnegative));
            out.push_str(&flag("symmetric", r.symmetric));
            out.push_str(&flag("nonsingular", r.nonsingular));
            out.push_str(&flag("m_matrix", r.m_matrix));
            out.push_str(&flag("inverse_m_matrix", r.inverse_m_matrix));
            out.push_str(&flag("potential", r.potential));
            out.push_str(&flag("double_potential", r.double_potential));
            writeln!(out, "inverse:").unwrap();
            out.push_str(&flag("z_matrix", r.z_matrix));
            out.push_str(&flag("nonneg_diagonal", r.nonneg_diagonal));
            out.push_str(&flag("row_diag_dominant", r.row_diag_dominant));
            out.push_str(&flag("col_diag_dominant", r.col_diag_dominant));
            if let Some(reason) = &r.singular_reason {
                writeln!(out, "singular: {reason}").unwrap();
            }
        }
        Body::Certificate(o) => {
            writeln!(out, "condition ({}): {} [{:?}]", o.condition, o.status, o.basis).unwrap();
            if let Some(w) = &o.witness {
                writeln!(out, "  witness x = [{}]", join(&w.x)).unwrap();
                writeln!(out, "  value {}", w.value).unwrap();
            }
            writeln!(out, "  evaluations {}", o.evaluations).unwrap();
            if let Some(d) = &o.diagnostic {
                writeln!(out, "  {d}").unwrap();
            }
        }
        Body::Falsify {
            condition,
            budget,
            witness,
        } => match witness {
            Some(w) => {
                writeln!(out, "condition ({condition}): witness found").unwrap();
                writeln!(out, "  x = [{}]", join(&w.x)).unwrap();
                writeln!(out, "  value {}", w.value).unwrap();
            }
            None => writeln!(out, "condition ({condition}): no witness within {budget} evaluations").unwrap(),
        },
        Body::Principle(v) => render_verdict(&mut out, v),
        Body::Bridge(b) => {
            render_verdict(&mut out, &b.cmp);
            render_verdict(&mut out, &b.dp);
            match &b.equilibrium {
                Some(mu) => writeln!(out, "equilibrium potential [{}]", join(mu)).unwrap(),
                None => writeln!(out, "no nonnegative equilibrium potential").unwrap(),
            }
            writeln!(out, "CMP vs DP + equilibrium: {:?}", b.agreement).unwrap();
        }
        // Matrix text is printed separately.
        Body::Scale { .. } => {}
        Body::Generate { files, .. } => {
            for f in files {
                writeln!(out, "{f}").unwrap();
            }
        }
    }
    out
}

fn run(cli: Cli) -> i32 {
    let settings = Settings {
        tol: cli.tol,
        budget: cli.budget,
        seed: cli.seed,
        nmax: cli.nmax,
        box_bound: cli.box_bound,
        definitional: cli.definitional,
    };
    if !(settings.tol >= 0.0 && settings.tol.is_finite()) || !(settings.box_bound > 0.0 && settings.box_bound.is_finite()) {
        eprintln!("error: --tol must be nonnegative and --box positive");
        return EXIT_ERROR;
    }
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot configure {t} threads: {e}");
            return EXIT_ERROR;
        }
    }
    let command = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    let start = Instant::now();
    let (body, code, text) = match execute(&cli, &settings) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let report = Report {
        tool: "potkit".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
        seed: settings.seed,
        settings,
        wall_clock_ms: start.elapsed().as_secs_f64() * 1e3,
        exit_code: code,
        body,
    };
    if cli.json {
        println!("{}", report.to_json());
    } else {
        if let Some(t) = text {
            print!("{t}");
        }
        print!("{}", render(&report.body));
    }
    code
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_HOLDS };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = std::panic::catch_unwind(|| run(cli)).unwrap_or(EXIT_ERROR);
    ExitCode::from(code as u8)
}
