//! Batch front-end: `run` executes one config, `sweep` repeats it over a
//! list of `ε` and fits the energy slope.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver failure or no
//! convergence, 4 failed check.

use crate::config::{CheckName, ConfigError, RunConfig, ScenarioName};
use crate::defect::{self, DefectSet};
use crate::field::{vtk, QField, Region};
use crate::potential::MaterialParams;
use crate::scenario::Scenario;
use crate::solver::{self, SolveReport, SolverError};
use crate::verify::{self, CheckReport, VerifyError};
use clap::{Parser, Subcommand};
use nalgebra::Vector3;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "nematic", version, about = "Landau-de Gennes Q-tensor relaxation and defect analysis")]
pub struct Cli {
    /// Worker threads (default: all cores). `--threads 1` is bitwise
    /// reproducible.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Relax, extract defects and run the configured checks.
    Run { config: PathBuf },
    /// Repeat a run for each epsilon and fit the log-slope of the energy.
    Sweep {
        config: PathBuf,
        /// Comma-separated list, e.g. `0.1,0.05,0.025`.
        #[arg(long)]
        eps: String,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write outputs: {0}")]
    Output(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("solver stopped after {iterations} iterations without converging (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 2,
            CliError::Solver(_) | CliError::NotConverged { .. } => 3,
            CliError::Check(_) => 4,
        }
    }
}

fn out_err(e: impl std::fmt::Display) -> CliError {
    CliError::Output(e.to_string())
}

/// Everything a single run produces.
pub struct RunOutcome {
    pub field: QField,
    pub report: SolveReport,
    pub defects: DefectSet,
    pub checks: Vec<CheckReport>,
}

fn header(cfg: &RunConfig, sc: &Scenario, extra: &str) -> String {
    let mut h = cfg.echo();
    let _ = writeln!(h, "[resolved]");
    let _ = writeln!(h, "epsilon = {}", sc.epsilon);
    let _ = writeln!(h, "h = {}", sc.domain.h());
    let _ = writeln!(h, "shape = {:?}", sc.domain.shape());
    let _ = writeln!(h, "init = \"{:?}\"", sc.init);
    h.push_str(extra);
    h
}

fn run_checks(field: &QField, params: &MaterialParams, cfg: &RunConfig) -> Result<Vec<CheckReport>, VerifyError> {
    let v = &cfg.verify;
    let c = Vector3::from(v.center);
    let bx = Region::Box {
        min: c - Vector3::repeat(v.box_half),
        max: c + Vector3::repeat(v.box_half),
    };
    let mut out = Vec::new();
    for check in &v.checks {
        out.push(match check {
            CheckName::ElResidual => verify::check_el_residual(field, params, cfg.solver.grad_tol),
            CheckName::Pohozaev => verify::check_pohozaev(field, params, &c, v.radius)?,
            CheckName::Monotonicity => verify::check_monotonicity(field, params, &c, &v.radii)?,
            CheckName::StarBound => verify::check_star_bound(field, params, &bx)?,
            CheckName::StressEnergy => verify::check_stress_energy(field, params, &bx, v.seed)?,
            CheckName::LineDensity => verify::check_line_density(field, params, &c, v.radius)?,
        });
    }
    Ok(out)
}

/// Runs one configuration at an optional `ε` override, writing all outputs
/// into `dir`. Errors carry the exit code; outputs already written stay.
pub fn execute(cfg: &RunConfig, epsilon: Option<f64>, dir: &Path) -> Result<RunOutcome, CliError> {
    let params = cfg.params()?;
    let sc = cfg.scenario.build(&params, epsilon)?;
    std::fs::create_dir_all(dir).map_err(out_err)?;
    let hdr = header(cfg, &sc, "");
    let init = solver::initialize(sc.domain.clone(), &sc.init, sc.epsilon)?;
    let dump_path = |iter: usize| {
        let p = Path::new(&cfg.outputs.field);
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("field");
        dir.join(format!("{stem}_{iter:08}.vtk"))
    };
    let mut dump_err = None;
    let (field, mut report) = solver::relax_observed(&init, &params, &cfg.solver, cfg.outputs.dump_every, &mut |it, f| {
        if dump_err.is_none() {
            dump_err = vtk::write_vtk(&dump_path(it), f, &params).err();
        }
    })?;
    if let Some(e) = dump_err {
        return Err(out_err(e));
    }
    report.init = format!("{:?}", sc.init);
    vtk::write_vtk(&dir.join(&cfg.outputs.field), &field, &params).map_err(out_err)?;
    let trace_hdr = format!(
        "{hdr}converged = {}\niterations = {}\nhalvings = {}\nrestarts = {}\n",
        report.converged, report.iterations, report.halvings, report.restarts
    );
    report
        .write_trace_csv(&dir.join(&cfg.outputs.trace), &trace_hdr)
        .map_err(out_err)?;
    let defects = defect::extract_defects(&field, cfg.scenario.threshold, &params)
        .map_err(|e| CliError::Config(ConfigError::Invalid(e.to_string())))?;
    defects
        .write_csv(&dir.join(&cfg.outputs.defects), &hdr)
        .map_err(out_err)?;
    let checks = run_checks(&field, &params, cfg);
    let mut log = String::new();
    for line in hdr.lines() {
        let _ = writeln!(log, "# {line}");
    }
    let _ = writeln!(log, "{}", CheckReport::CSV_HEADER);
    if let Ok(cs) = &checks {
        for c in cs {
            log.push_str(&c.csv_rows());
        }
    }
    std::fs::write(dir.join(&cfg.outputs.verify), log).map_err(out_err)?;
    if !report.converged {
        return Err(CliError::NotConverged {
            iterations: report.iterations,
            residual: report.residual,
        });
    }
    let checks = checks.map_err(|e| CliError::Check(e.to_string()))?;
    if let Some(bad) = checks.iter().find(|c| !c.pass) {
        return Err(CliError::Check(format!("{} ({})", bad.name, bad.region)));
    }
    Ok(RunOutcome {
        field,
        report,
        defects,
        checks,
    })
}

fn parse_eps(list: &str) -> Result<Vec<f64>, CliError> {
    let eps: Vec<f64> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|e| *e > 0.0)
                .ok_or_else(|| ConfigError::Invalid(format!("bad epsilon `{s}`")))
        })
        .collect::<Result<_, _>>()?;
    if eps.is_empty() {
        return Err(ConfigError::Invalid("empty epsilon list".into()).into());
    }
    Ok(eps)
}

/// Runs the sweep and writes `sweep.csv`; returns the slope report.
pub fn sweep(cfg: &RunConfig, eps_list: &str, dir: &Path) -> Result<CheckReport, CliError> {
    let eps = parse_eps(eps_list)?;
    let params = cfg.params()?;
    // validate every member before any compute
    for &e in &eps {
        cfg.scenario.build(&params, Some(e))?;
    }
    let mut points = Vec::new();
    let mut failed = None;
    for &e in &eps {
        let sub = dir.join(format!("eps_{e}"));
        match execute(cfg, Some(e), &sub) {
            Ok(o) => points.push((e, o.report.energy.total)),
            Err(err @ CliError::Check(_)) => {
                // the energy is still meaningful
                let text = std::fs::read_to_string(sub.join(&cfg.outputs.trace)).unwrap_or_default();
                if let Some(total) = last_total(&text) {
                    points.push((e, total));
                }
                failed.get_or_insert(err);
            }
            Err(err) => return Err(err),
        }
    }
    let expect_defect = cfg.scenario.name != ScenarioName::DiskTrivial;
    let report = verify::sweep_report(&points, &params, expect_defect).map_err(|e| CliError::Check(e.to_string()))?;
    let mut text = String::new();
    for line in cfg.echo().lines() {
        let _ = writeln!(text, "# {line}");
    }
    let _ = writeln!(text, "{}", CheckReport::CSV_HEADER);
    text.push_str(&report.csv_rows());
    std::fs::write(dir.join("sweep.csv"), text).map_err(out_err)?;
    if let Some(err) = failed {
        return Err(err);
    }
    if !report.pass {
        return Err(CliError::Check(format!("slope {:.4}", report.value("slope").unwrap_or(f64::NAN))));
    }
    Ok(report)
}

fn last_total(trace: &str) -> Option<f64> {
    trace
        .lines()
        .rev()
        .find(|l| !l.starts_with('#') && !l.starts_with("iter"))
        .and_then(|l| l.split(',').nth(3))
        .and_then(|t| t.parse().ok())
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args(args: impl IntoIterator<Item = std::ffi::OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: cannot start {n} worker threads");
            return 2;
        }
    }
    let result = match &cli.command {
        Command::Run { config } => RunConfig::load(config)
            .map_err(CliError::from)
            .and_then(|cfg| execute(&cfg, None, &cli.out))
            .map(|o| {
                println!(
                    "converged in {} iterations, energy {:.6}, {} defect component(s)",
                    o.report.iterations,
                    o.report.energy.total,
                    o.defects.components.len()
                );
                for c in &o.checks {
                    println!("{}: {}", c.name, if c.pass { "pass" } else { "FAIL" });
                }
            }),
        Command::Sweep { config, eps } => RunConfig::load(config)
            .map_err(CliError::from)
            .and_then(|cfg| sweep(&cfg, eps, &cli.out))
            .map(|r| {
                println!(
                    "slope {:.4}, intercept {:.4}",
                    r.value("slope").unwrap_or(f64::NAN),
                    r.value("intercept").unwrap_or(f64::NAN)
                );
            }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_lists() {
        assert_eq!(parse_eps("0.1, 0.05,0.025").unwrap(), vec![0.1, 0.05, 0.025]);
        assert_eq!(parse_eps("").unwrap_err().exit_code(), 2);
        assert_eq!(parse_eps("0.1,x").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn trace_tail_is_read_back() {
        let t = "# c\niter,elastic,bulk,total,residual,dt\n0,1e0,1e0,2e0,1e0,1e0\n9,1e0,5e-1,1.5e0,1e-3,1e0\n";
        assert_eq!(last_total(t), Some(1.5));
    }
}
