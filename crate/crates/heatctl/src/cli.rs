//! Command-line front end: one subcommand per solver, CSV/JSON emission.
//!
//! Every run writes `summary.json` into the output directory with the inputs
//! echoed, the computed values, iteration counts and residuals; subcommands
//! add control/state CSVs, bisection trace CSVs, or the verification report.
//! All floating-point output carries 17 significant digits so files
//! round-trip exactly, and identical config + seed produce byte-identical
//! outputs.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::bvp::solve_bvp;
use crate::config::ProblemConfig;
use crate::error::{Error, Result};
use crate::feedback::{simulate_activated, FeedbackScenario};
use crate::norm::{free_reach, optimal_norm, BisectionTrace};
use crate::spectral::{Field, TimeGrid};
use crate::time::optimal_time;
use crate::verify::run_verification;

#[derive(Parser)]
#[command(
    name = "heatctl",
    about = "Optimal target / norm / time control of the 1-D heat equation",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Problem configuration file (flat `key = value` text)
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing
    #[arg(long)]
    out: PathBuf,
    /// Override the seed from the config file
    #[arg(long)]
    seed: Option<u64>,
    /// Halve the time step this many times (convergence studies)
    #[arg(long, default_value_t = 0)]
    refine: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal target: best reach distance r(tau, M) under a norm bound
    SolveOp(CommonArgs),
    /// Optimal norm: smallest bound M(r, tau) reaching the target ball
    SolveNp(CommonArgs),
    /// Optimal time: latest activation tau(M, r) reaching the target ball
    SolveTp(CommonArgs),
    /// Closed-loop simulation under the optimal-norm feedback law
    FeedbackSim(CommonArgs),
    /// Run the verification suite and write the report
    Verify(CommonArgs),
}

/// Parse argv, execute, report errors on stderr; returns the process exit
/// code (0 ok, 1 configuration, 2 infeasible, 3 solver failure).
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: &Command) -> Result<()> {
    let (name, args) = match command {
        Command::SolveOp(a) => ("solve-op", a),
        Command::SolveNp(a) => ("solve-np", a),
        Command::SolveTp(a) => ("solve-tp", a),
        Command::FeedbackSim(a) => ("feedback-sim", a),
        Command::Verify(a) => ("verify", a),
    };
    let mut cfg = ProblemConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    fs::create_dir_all(&args.out)?;

    let domain = cfg.domain()?;
    let grid = cfg.grid(args.refine)?;
    let y0 = cfg.y0_field()?;
    let z_d = cfg.z_d_field()?;
    // Activation times are grid nodes; keep the configured tau on the grid
    // after refinement.
    let tau = grid.node(grid.nearest_node(cfg.tau));
    let r_t = free_reach(&domain, &grid, &y0, &z_d)?;

    let mut summary = json!({
        "subcommand": name,
        "config": config_echo(&cfg, args.refine),
        "grid": { "t_end": fmt(grid.t_end), "n_steps": grid.n_steps, "dt": fmt(grid.dt()) },
        "r_T": fmt(r_t),
    });

    match command {
        Command::SolveOp(_) => {
            let m = cfg.require_m()?;
            let sol = solve_bvp(&domain, &grid, tau, m, &y0, &z_d, cfg.tol_bvp, cfg.max_iter)?;
            write_control_csv(&args.out.join("control.csv"), &grid, &sol.control.values)?;
            merge(&mut summary, json!({
                "r": fmt(sol.reach_distance),
                "tau": fmt(tau),
                "m": fmt(m),
                "iterations": sol.iterations,
                "residual": fmt(sol.residual),
            }));
        }
        Command::SolveNp(_) => {
            let r = cfg.require_r()?;
            let sol = optimal_norm(
                &domain, &grid, tau, r, cfg.m0, cfg.tol_m, cfg.tol_bvp, cfg.max_iter, &y0, &z_d,
            )?;
            write_control_csv(&args.out.join("control.csv"), &grid, &sol.solution.control.values)?;
            write_trace_csv(&args.out.join("trace.csv"), &sol.trace)?;
            merge(&mut summary, json!({
                "m_star": fmt(sol.m_star),
                "r": fmt(r),
                "tau": fmt(tau),
                "bisection_steps": sol.trace.bracket_history.len(),
                "iterations": sol.solution.iterations,
                "residual": fmt(sol.solution.residual),
            }));
        }
        Command::SolveTp(_) => {
            let m = cfg.require_m()?;
            let r = cfg.require_r()?;
            let sol = optimal_time(
                &domain, &grid, m, r, cfg.tol_tau, cfg.tol_bvp, cfg.max_iter, &y0, &z_d,
            )?;
            write_control_csv(&args.out.join("control.csv"), &grid, &sol.solution.control.values)?;
            write_trace_csv(&args.out.join("trace.csv"), &sol.trace)?;
            merge(&mut summary, json!({
                "tau_star": fmt(sol.tau_star),
                "tau_grid": fmt(sol.tau_grid),
                "m": fmt(m),
                "r": fmt(r),
                "r_immediate": fmt(sol.feasibility.0),
                "bisection_steps": sol.trace.bracket_history.len(),
                "iterations": sol.solution.iterations,
                "residual": fmt(sol.solution.residual),
            }));
        }
        Command::FeedbackSim(_) => {
            let r = cfg.require_r()?;
            let scenario = FeedbackScenario {
                radius: r,
                t0: grid.t_start,
                y0: y0.clone(),
                z_d: z_d.clone(),
                grid,
                tol_m: cfg.tol_m,
                tol_bvp: cfg.tol_bvp,
                max_iter: cfg.max_iter,
            };
            let run = simulate_activated(&domain, &scenario, tau)?;
            write_state_csv(&args.out.join("closed_loop.csv"), &run.grid, &run.states)?;
            write_norm_csv(&args.out.join("norm_values.csv"), &run)?;
            let n0 = run.norm_values.first().copied().unwrap_or(0.0);
            let n_max = run.norm_values.iter().copied().fold(0.0, f64::max);
            merge(&mut summary, json!({
                "r": fmt(r),
                "tau": fmt(tau),
                "terminal_miss": fmt(run.terminal_miss(&z_d)),
                "n_initial": fmt(n0),
                "n_max": fmt(n_max),
                "steps": run.controls.len(),
            }));
        }
        Command::Verify(_) => {
            let report = run_verification(&cfg)?;
            fs::write(args.out.join("report.json"), report.to_json() + "\n")?;
            merge(&mut summary, json!({
                "passed": report.passed,
                "warned": report.warned,
                "failed": report.failed,
            }));
            if !report.all_passed() {
                write_summary(&args.out.join("summary.json"), &summary)?;
                return Err(Error::Oracle(format!(
                    "{} verification check(s) failed; see report.json",
                    report.failed
                )));
            }
        }
    }

    write_summary(&args.out.join("summary.json"), &summary)?;
    Ok(())
}

/// 17 significant digits: round-trips f64 exactly.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn config_echo(cfg: &ProblemConfig, refine: u32) -> Value {
    json!({
        "omega_a": fmt(cfg.omega.0),
        "omega_b": fmt(cfg.omega.1),
        "num_modes": cfg.num_modes,
        "t_end": fmt(cfg.t_end),
        "n_steps": cfg.n_steps,
        "y0": cfg.y0.to_string(),
        "z_d": cfg.z_d.to_string(),
        "r": cfg.r.map(fmt),
        "m": cfg.m.map(fmt),
        "tau": fmt(cfg.tau),
        "m0": cfg.m0.map(fmt),
        "tol_bvp": fmt(cfg.tol_bvp),
        "tol_m": fmt(cfg.tol_m),
        "tol_tau": fmt(cfg.tol_tau),
        "max_iter": cfg.max_iter,
        "seed": cfg.seed,
        "refine": refine,
    })
}

fn merge(summary: &mut Value, extra: Value) {
    let (Value::Object(base), Value::Object(extra)) = (summary, extra) else {
        unreachable!("summaries are objects");
    };
    base.extend(extra);
}

fn write_summary(path: &Path, summary: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(summary).expect("summary serializes");
    fs::write(path, text + "\n")?;
    Ok(())
}

fn write_rows(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<()> {
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(file, "{header}")?;
    for row in rows {
        writeln!(file, "{row}")?;
    }
    Ok(())
}

fn coeff_header(n: usize) -> String {
    let mut h = String::from("t");
    for k in 1..=n {
        h.push_str(&format!(",coeff_{k}"));
    }
    h
}

fn field_row(t: f64, f: &Field) -> String {
    let mut row = fmt(t);
    for c in &f.0 {
        row.push(',');
        row.push_str(&fmt(*c));
    }
    row
}

/// Control values per cell, stamped with the cell start time.
fn write_control_csv(path: &Path, grid: &TimeGrid, values: &[Field]) -> Result<()> {
    let n = values.first().map(Field::len).unwrap_or(0);
    write_rows(
        path,
        &coeff_header(n),
        values
            .iter()
            .enumerate()
            .map(|(i, v)| field_row(grid.node(i), v)),
    )
}

/// States at every grid node.
fn write_state_csv(path: &Path, grid: &TimeGrid, states: &[Field]) -> Result<()> {
    let n = states.first().map(Field::len).unwrap_or(0);
    write_rows(
        path,
        &coeff_header(n),
        states
            .iter()
            .enumerate()
            .map(|(i, s)| field_row(grid.node(i), s)),
    )
}

fn write_trace_csv(path: &Path, trace: &BisectionTrace) -> Result<()> {
    write_rows(
        path,
        "n,a,b,mid,r_mid",
        trace.bracket_history.iter().enumerate().map(|(i, s)| {
            format!(
                "{i},{},{},{},{}",
                fmt(s.a),
                fmt(s.b),
                fmt(s.midpoint),
                fmt(s.r_mid)
            )
        }),
    )
}

fn write_norm_csv(path: &Path, run: &crate::feedback::ClosedLoopRun) -> Result<()> {
    write_rows(
        path,
        "t,n_value,masked_adjoint_norm",
        run.norm_values
            .iter()
            .zip(&run.masked_adjoint_norms)
            .enumerate()
            .map(|(i, (n, w))| format!("{},{},{}", fmt(run.grid.node(i)), fmt(*n), fmt(*w))),
    )
}
