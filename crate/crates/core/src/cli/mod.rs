//! Command-line front end.
//!
//! Exit codes: 0 when a classification is produced (an inadmissible `x0` or
//! an absent dichotomy included), 2 when the hypotheses of the main result
//! fail for `solve`, 1 on I/O, parse or validation errors.

pub mod output;
pub mod report;
pub mod spec;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use log::error;
use nalgebra::DVector;

use crate::coefficients::ValidationTolerances;
use crate::dichotomy;
use crate::error::{LqError, Result};
use crate::lq_solver::{self, SolveReport};
use crate::rotation;

use report::{DichotomyFile, RotationFile, SolveFile};
use spec::ProblemSpecFile;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INAPPLICABLE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "lqhorizon", version, about = "Infinite-horizon linear-quadratic minimization via stable Lagrange planes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify x0, compute the minimum and a minimizing pair.
    Solve(SolveArgs),
    /// Detect an exponential dichotomy and report the Lagrange planes.
    Dichotomy(DichotomyArgs),
    /// Estimate the rotation number.
    Rotation(RotationArgs),
    /// Check a problem file without solving.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Problem file (JSON).
    pub spec: PathBuf,
    /// Initial state, comma separated; overrides the file.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x0: Option<Vec<f64>>,
    /// Run the regularized cross-check.
    #[arg(long)]
    pub eps_check: bool,
    /// Trajectory horizon.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Write the full JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the sampled pair as CSV (t, x_i, y_i, u_i).
    #[arg(long)]
    pub trajectory_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DichotomyArgs {
    /// Problem file (JSON).
    pub spec: PathBuf,
    /// Initial time; defaults to the file's t0 or 0.
    #[arg(long)]
    pub t0: Option<f64>,
    /// Horizon of the general method.
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Treat an undetermined verdict as present (recorded in the report).
    #[arg(long)]
    pub assume_dichotomy: bool,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RotationArgs {
    /// Problem file (JSON).
    pub spec: PathBuf,
    /// Fixed horizon; without it the horizon is doubled until the estimate settles.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Initial time.
    #[arg(long)]
    pub t0: Option<f64>,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the (t, unwrapped argument) samples as CSV.
    #[arg(long)]
    pub samples_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Problem file (JSON).
    pub spec: PathBuf,
}

pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Dichotomy(a) => cmd_dichotomy(&a),
        Command::Rotation(a) => cmd_rotation(&a),
        Command::Validate(a) => cmd_validate(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            if let LqError::InvalidProblem(vs) = &e {
                for v in vs {
                    eprintln!("  {v}");
                }
            }
            EXIT_ERROR
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.10}"))
}

fn print_solve_summary(r: &SolveReport) {
    println!("x0: {:?}", r.x0.as_slice());
    for h in &r.hypotheses {
        println!("check {:<24} {:?}  {}", h.name, h.status, h.detail);
    }
    println!("applicable: {}", r.applicable);
    match r.admissible {
        Some(true) => {
            println!("admissible: true (residual {:.3e})", r.residual.unwrap_or(0.0));
            println!("minimum: {}", fmt_opt(r.min_value));
            if let Some(label) = &r.pair_label {
                println!("pair: {label}, horizon {}", fmt_opt(r.horizon));
            }
        }
        Some(false) => println!("admissible: false; every admissible pair has infinite cost"),
        None => println!("admissible: not decided"),
    }
    if let Some(k) = &r.kratz_case {
        println!("regularized limit: {k:?}");
    }
    for n in &r.notes {
        println!("note: {n}");
    }
}

pub fn cmd_solve(a: &SolveArgs) -> Result<i32> {
    let spec = ProblemSpecFile::load(&a.spec)?;
    let p = spec
        .problem()?
        .ok_or_else(|| LqError::InvalidArgument("coefficients: required by solve".into()))?;
    let x0 = a
        .x0
        .clone()
        .or_else(|| spec.x0.clone())
        .ok_or_else(|| LqError::InvalidArgument("x0: give it in the file or with --x0".into()))?;
    let mut opts = spec.options.to_solve_options();
    if a.eps_check {
        opts.eps_check = true;
    }
    if a.horizon.is_some() {
        opts.horizon = a.horizon;
    }
    let report = lq_solver::solve(&p, &DVector::from_vec(x0), &opts)?;
    print_solve_summary(&report);
    if let Some(path) = &a.out {
        output::write_file(path, &output::to_json(&SolveFile::from(&report))?)?;
    }
    if let (Some(path), Some(tr)) = (&a.trajectory_csv, &report.trajectory) {
        let (n, m) = (p.n(), p.m());
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        header.extend((1..=n).map(|i| format!("y_{i}")));
        header.extend((1..=m).map(|i| format!("u_{i}")));
        let ys = tr.y.as_ref().expect("minimizing pairs carry the costate");
        let rows = (0..tr.len()).map(|k| {
            let mut row = vec![tr.times[k]];
            row.extend(tr.x[k].iter());
            row.extend(ys[k].iter());
            row.extend(tr.u[k].iter());
            row
        });
        output::write_csv(path, &header, rows)?;
    }
    Ok(if report.applicable { EXIT_OK } else { EXIT_INAPPLICABLE })
}

pub fn cmd_dichotomy(a: &DichotomyArgs) -> Result<i32> {
    let spec = ProblemSpecFile::load(&a.spec)?;
    let h = spec.hamiltonian_family()?;
    let mut opts = spec.options.to_solve_options();
    if let Some(t) = a.t_max {
        opts.dichotomy.t_max = t;
    }
    if a.assume_dichotomy {
        opts.dichotomy.assume_dichotomy = true;
    }
    let t0 = a.t0.unwrap_or(opts.t0);
    let r = dichotomy::compute_dichotomy(&h, t0, &opts.dichotomy)?;
    println!("method: {:?}", r.method);
    println!("verdict: {:?} (has_dichotomy = {})", r.verdict, r.has_dichotomy());
    println!("beta_est: {}  eta_est: {}", fmt_opt(r.beta_est), fmt_opt(r.eta_est));
    println!("weyl matrix M+: {}", if r.m_plus.is_some() { "present" } else { "absent" });
    for n in &r.notes {
        println!("note: {n}");
    }
    if let Some(path) = &a.out {
        output::write_file(path, &output::to_json(&DichotomyFile::from(&r))?)?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_rotation(a: &RotationArgs) -> Result<i32> {
    let spec = ProblemSpecFile::load(&a.spec)?;
    let h = spec.hamiltonian_family()?;
    let opts = spec.options.to_solve_options();
    let t0 = a.t0.unwrap_or(opts.t0);
    let est = match a.horizon {
        Some(t) => rotation::rotation_number(&h, t0, t, &opts.rotation)?,
        None => rotation::rotation_number_adaptive(&h, t0, &opts.rotation)?,
    };
    let file = RotationFile::from(&est);
    println!("alpha: {:.10}  (arg/T: {:.10})", est.alpha, est.alpha_raw);
    println!("horizon: {}  indicator: {:.3e}  converged: {}", est.horizon, est.convergence_indicator, est.converged);
    if let Some(w) = &file.warning {
        println!("warning: {w}");
    }
    if let Some(path) = &a.out {
        output::write_file(path, &output::to_json(&file)?)?;
    }
    if let Some(path) = &a.samples_csv {
        output::write_csv(
            path,
            &["t".to_string(), "arg".to_string()],
            est.samples.iter().map(|&(t, v)| vec![t, v]),
        )?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_validate(a: &ValidateArgs) -> Result<i32> {
    let spec = ProblemSpecFile::load(&a.spec)?;
    let opts = spec.options.to_solve_options();
    match spec.problem()? {
        Some(p) => {
            let tol = ValidationTolerances {
                tau_sym: opts.validation.tau_sym,
                tau_psd: opts.validation.tau_psd,
            };
            let violations = p.validate(&p.default_grid(opts.t0), tol)?;
            if !violations.is_empty() {
                return Err(LqError::InvalidProblem(violations));
            }
            if let Some(x0) = &spec.x0 {
                if x0.len() != p.n() {
                    return Err(LqError::InvalidArgument(format!("x0: expected length {}, got {}", p.n(), x0.len())));
                }
            }
            println!("ok: n = {}, m = {}, {:?}", p.n(), p.m(), p.periodicity());
        }
        None => {
            spec.hamiltonian_family()?;
            println!("ok: Hamiltonian given directly, n = {}", spec.dims.n);
        }
    }
    Ok(EXIT_OK)
}
