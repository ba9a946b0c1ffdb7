// SPDX-License-Identifier: Apache-2.0

//! Thin command-line front end. All computation lives in the library; this
//! binary parses arguments, loads one TOML configuration, runs the requested
//! command, and writes artifacts under the output directory.
//!
//! Exit codes: 0 success, 2 configuration problem, 3 invariant failure,
//! 4 non-convergence. Artifacts are still written on exit 4 so a failed run
//! can be inspected.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use evosteer::checks::{run_all, CheckReport};
use evosteer::report::{
    fmt_float, render_control_csv, render_json, render_matrix_csv, render_profile_csv,
    render_sweep_csv, render_sweep_svg, render_trajectory_csv, trajectory_rows, write_text,
    ReportEnvelope, REPORT_SCHEMA,
};
use evosteer::solver::{steer, sweep, SolveReport, SteerProblem, SweepRow};
use evosteer::steering::Gramian;
use evosteer::{Error, Result, RunConfig, Selector};

const EXIT_CONFIG: u8 = 2;
const EXIT_INVARIANT: u8 = 3;
const EXIT_NONCONVERGED: u8 = 4;

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Directory artifacts are written into.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Overrides the seed from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Format for tabular artifacts.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Parser)]
#[command(
    name = "evosteer",
    version,
    about = "Steering toolkit for impulsive functional evolution systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the invariant suite on the configured problem.
    Check(Common),
    /// Assembles the controllability Gramian and reports its shape.
    Gramian(Common),
    /// Steers to the target at one regularization weight.
    Steer {
        #[command(flatten)]
        common: Common,
        /// Regularization weight; defaults to the first configured value.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Steers across the configured weight list and tabulates the errors.
    Sweep(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(classify(&e))
        }
    }
}

fn classify(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidInput(_) | Error::Io(_) => EXIT_CONFIG,
        Error::SolverFailure(_) => EXIT_NONCONVERGED,
        _ => EXIT_INVARIANT,
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Check(c) => run_check(&c),
        Command::Gramian(c) => run_gramian(&c),
        Command::Steer { common, lambda } => run_steer(&common, lambda),
        Command::Sweep(c) => run_sweep(&c),
    }
}

fn artifact(common: &Common, stem: &str, ext: &str) -> PathBuf {
    common.out.join(format!("{stem}.{ext}"))
}

fn write_json<T: serde::Serialize>(path: &Path, command: &'static str, payload: T) -> Result<()> {
    let envelope = ReportEnvelope {
        schema: REPORT_SCHEMA,
        command,
        payload,
    };
    write_text(path, &render_json(&envelope)?)
}

fn run_check(common: &Common) -> Result<ExitCode> {
    let cfg = RunConfig::from_path(&common.config)?;
    let report = run_all(&cfg, cfg.effective_seed(common.seed))?;
    print!("{}", report.render_lines());

    match common.format {
        Format::Json => write_json(&artifact(common, "check", "json"), "check", &report)?,
        Format::Csv => write_text(&artifact(common, "check", "csv"), &check_csv(&report))?,
    }

    let failures = report.results.iter().filter(|r| !r.pass).count();
    if failures == 0 {
        println!("all {} checks passed", report.results.len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{failures} of {} checks failed", report.results.len());
        Ok(ExitCode::from(EXIT_INVARIANT))
    }
}

fn check_csv(report: &CheckReport) -> String {
    let mut out = String::from("name,pass,value,threshold\n");
    for r in &report.results {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.name,
            r.pass,
            fmt_float(r.value),
            fmt_float(r.threshold)
        );
    }
    out
}

fn run_gramian(common: &Common) -> Result<ExitCode> {
    let cfg = RunConfig::from_path(&common.config)?;
    let family = cfg.to_family()?;
    let gramian = Gramian::assemble(&family, cfg.solver.quad_tol)?;

    let summary = serde_json::json!({
        "dim": gramian.dim(),
        "horizon": gramian.horizon(),
        "symmetry_defect": gramian.symmetry_defect(),
        "min_eigenvalue": gramian.min_eigenvalue(),
    });
    write_json(
        &artifact(common, "gramian_summary", "json"),
        "gramian",
        &summary,
    )?;
    match common.format {
        Format::Csv => write_text(
            &artifact(common, "gramian", "csv"),
            &render_matrix_csv(gramian.matrix()),
        )?,
        Format::Json => {
            let rows: Vec<Vec<f64>> = (0..gramian.dim())
                .map(|i| (0..gramian.dim()).map(|j| gramian.matrix()[(i, j)]).collect())
                .collect();
            write_json(&artifact(common, "gramian", "json"), "gramian", &rows)?;
        }
    }

    println!(
        "gramian {0}x{0} over [0, {1}]: min eigenvalue {2:.6e}, symmetry defect {3:.2e}",
        gramian.dim(),
        gramian.horizon(),
        gramian.min_eigenvalue(),
        gramian.symmetry_defect()
    );
    Ok(ExitCode::SUCCESS)
}

/// Problem pieces shared by `steer` and `sweep`, owned so the borrowed
/// [`SteerProblem`] can point into them.
struct Workbench {
    cfg: RunConfig,
    family: evosteer::EvolutionFamily,
    basis: evosteer::SineBasis,
    grid: evosteer::TimeGrid,
    history: evosteer::HistorySegment,
    inclusion: Option<evosteer::InclusionSpec>,
    impulses: evosteer::ImpulseSet,
    gramian: Gramian,
    target: evosteer::ModeVector,
}

impl Workbench {
    fn build(config: &Path) -> Result<Self> {
        let cfg = RunConfig::from_path(config)?;
        let family = cfg.to_family()?;
        let basis = cfg.to_basis()?;
        let impulses = cfg.to_impulses()?;
        let grid = cfg.to_time_grid(&impulses)?;
        let history = cfg.to_history(&basis)?;
        let inclusion = cfg.to_inclusion()?;
        let gramian = Gramian::assemble(&family, cfg.solver.quad_tol)?;
        let target = cfg.target_modes();
        Ok(Self {
            cfg,
            family,
            basis,
            grid,
            history,
            inclusion,
            impulses,
            gramian,
            target,
        })
    }

    fn problem(&self) -> SteerProblem<'_> {
        SteerProblem {
            family: &self.family,
            basis: &self.basis,
            grid: &self.grid,
            history: &self.history,
            inclusion: self.inclusion.as_ref(),
            impulses: &self.impulses,
            gramian: &self.gramian,
            target: &self.target,
            p: self.cfg.model.p,
        }
    }
}

fn print_solve_summary(report: &SolveReport) {
    println!(
        "lambda {:.3e}: terminal error {:.6e}, control L2 {:.6e}, {} outer iterations, converged {}",
        report.lambda,
        report.terminal_error,
        report.control_l2,
        report.iterations,
        report.converged
    );
    println!(
        "  identity residual {:.3e}, control margin {:.3e}, fading bound {}",
        report.terminal_identity_residual,
        report.control_margin,
        if report.fading_ok { "holds" } else { "VIOLATED" }
    );
}

fn run_steer(common: &Common, lambda: Option<f64>) -> Result<ExitCode> {
    let bench = Workbench::build(&common.config)?;
    let lambda = lambda.unwrap_or(bench.cfg.steering.lambdas[0]);
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Config(format!(
            "lambda {lambda} must be positive and finite"
        )));
    }

    let mut selector = Selector::new(bench.cfg.selection_policy(common.seed))?;
    let solve = steer(
        &bench.problem(),
        lambda,
        &mut selector,
        &bench.cfg.gamma_options(),
    )?;

    write_json(&artifact(common, "report", "json"), "steer", &solve.report)?;
    let terminal = bench
        .basis
        .from_modes(solve.trajectory.terminal(), bench.cfg.model.p)?;
    match common.format {
        Format::Csv => {
            write_text(
                &artifact(common, "trajectory", "csv"),
                &render_trajectory_csv(&solve.trajectory),
            )?;
            write_text(
                &artifact(common, "control", "csv"),
                &render_control_csv(bench.grid.times(), &solve.controls),
            )?;
            write_text(
                &artifact(common, "terminal_profile", "csv"),
                &render_profile_csv(bench.basis.grid(), &terminal),
            )?;
        }
        Format::Json => {
            write_json(
                &artifact(common, "trajectory", "json"),
                "steer",
                trajectory_rows(&solve.trajectory),
            )?;
            let controls: Vec<(f64, Vec<f64>)> = bench
                .grid
                .times()
                .iter()
                .zip(&solve.controls)
                .map(|(t, u)| (*t, u.0.iter().copied().collect()))
                .collect();
            write_json(&artifact(common, "control", "json"), "steer", controls)?;
            let profile: Vec<(f64, f64)> = bench
                .basis
                .grid()
                .points()
                .iter()
                .zip(terminal.values())
                .map(|(xi, v)| (*xi, *v))
                .collect();
            write_json(
                &artifact(common, "terminal_profile", "json"),
                "steer",
                profile,
            )?;
        }
    }

    print_solve_summary(&solve.report);
    if solve.report.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_NONCONVERGED))
    }
}

fn run_sweep(common: &Common) -> Result<ExitCode> {
    let bench = Workbench::build(&common.config)?;
    let policy = bench.cfg.selection_policy(common.seed);
    let seed = bench.cfg.effective_seed(common.seed);
    let results = sweep(
        &bench.problem(),
        &bench.cfg.steering.lambdas,
        &policy,
        seed,
        &bench.cfg.gamma_options(),
    )?;
    let rows: Vec<SweepRow> = results.iter().map(|(row, _)| row.clone()).collect();

    match common.format {
        Format::Csv => write_text(&artifact(common, "sweep", "csv"), &render_sweep_csv(&rows))?,
        Format::Json => write_json(&artifact(common, "sweep", "json"), "sweep", &rows)?,
    }
    write_text(&artifact(common, "sweep", "svg"), &render_sweep_svg(&rows))?;

    for (row, _) in &results {
        println!(
            "lambda {:>10}: terminal error {:>12}, control L2 {:>12}, {} iterations, converged {}",
            fmt_float(row.lambda),
            fmt_float(row.terminal_error),
            fmt_float(row.control_l2),
            row.iterations,
            row.converged
        );
    }
    if rows.iter().all(|r| r.converged) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_NONCONVERGED))
    }
}
