//! Subcommand dispatch and exit statuses.

use std::path::PathBuf;

use ac_dynbc::compat::{check_compatibility, default_samples, CompatError, CompatibilityReport};
use ac_dynbc::config::ConfigError;
use ac_dynbc::evolution::{solve, SolverError, Trajectory};
use ac_dynbc::experiments::{
    run_contdep, run_energy_decay, run_eps_sweep, run_mms, run_nu_sweep, ExperimentError, ExperimentReport,
};
use ac_dynbc::graphs::ScalarGraph;
use ac_dynbc::mesh::{snapshot_csv, snapshot_raw, RawSidecar};
use ac_dynbc::properties::{graph_property_suite, uniform_samples, PropertyCheck};
use serde::Serialize;
use thiserror::Error;

use crate::config::{load_config, Bundle, LoadError};
use crate::output::Output;
use crate::svg::{LinePlot, Series};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_ASSERTION: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    Contdep,
    SweepEps,
    SweepNu,
    Mms,
    Energy,
    GraphCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Contdep => "contdep",
            Command::SweepEps => "sweep-eps",
            Command::SweepNu => "sweep-nu",
            Command::Mms => "mms",
            Command::Energy => "energy",
            Command::GraphCheck => "graph-check",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: PathBuf,
    pub snapshots: Vec<f64>,
    pub quiet: bool,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("configuration error: {0}")]
    Config(ConfigError),
    #[error("solver failure: {0}")]
    Solver(SolverError),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<SolverError> for RunError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Config(c) => RunError::Config(c),
            other => RunError::Solver(other),
        }
    }
}

impl From<ExperimentError> for RunError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(c) => RunError::Config(c),
            ExperimentError::Solver(s) => s.into(),
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Load(_) | RunError::Config(_) => EXIT_CONFIG,
            RunError::Solver(_) => EXIT_SOLVER,
            RunError::Io(_) => EXIT_IO,
        }
    }
}

/// Exit status for a completed run.
pub fn exit_code(passed: bool) -> i32 {
    if passed {
        EXIT_OK
    } else {
        EXIT_ASSERTION
    }
}

/// Run one subcommand; `Ok(true)` when every flag it checks passes.
pub fn dispatch(command: Command, opts: &RunOptions) -> Result<bool, RunError> {
    let bundle = load_config(&opts.config)?;
    let resolved = bundle.to_toml();
    let mut out = Output::new(&opts.out, command.name(), resolved.clone(), opts.quiet)?;
    out.write("resolved_config.toml", resolved.as_bytes())?;
    let passed = match command {
        Command::GraphCheck => graph_check(&bundle, &mut out)?,
        Command::Solve => {
            bundle.validate()?;
            run_solve(&bundle, &opts.snapshots, &mut out)?
        }
        _ => {
            if command != Command::Mms {
                bundle.validate()?;
            }
            let report = out.phase("run", |_| experiment(command, &bundle))?;
            out.phase("write", |o| emit_report(&report, o))?;
            if !opts.quiet {
                print!("{}", report.to_text());
                println!("\nwall time: {:.3} s", report.wall_time.as_secs_f64());
            }
            report.passed()
        }
    };
    let manifest = out.finish()?;
    if !opts.quiet {
        println!("wrote {} files to {} (run hash {})", manifest.files.len() + 1, opts.out.display(), manifest.run_hash);
    }
    Ok(passed)
}

fn experiment(command: Command, b: &Bundle) -> Result<ExperimentReport, RunError> {
    let c = &b.solver;
    Ok(match command {
        Command::Contdep => run_contdep(c, b.contdep.spec(), &b.contdep.amplitudes)?,
        Command::SweepEps => run_eps_sweep(c, &b.sweep_eps)?,
        Command::SweepNu => run_nu_sweep(c, &b.sweep_nu)?,
        Command::Mms => run_mms(&b.mms.plan(c.mesh.lx, c.mesh.ly)?)?,
        Command::Energy => run_energy_decay(c)?,
        Command::Solve | Command::GraphCheck => unreachable!("handled by dispatch"),
    })
}

#[derive(Serialize)]
struct SolveSummary {
    steps: usize,
    eta: f64,
    c_gamma: f64,
    final_energy: f64,
    max_energy_increase: Option<f64>,
    time_derivative_l2: f64,
    selection_l2: f64,
    boundary_selection_max: f64,
    gronwall_envelope_ok: Option<bool>,
}

fn run_solve(b: &Bundle, snapshots: &[f64], out: &mut Output) -> Result<bool, RunError> {
    let traj = out.phase("solve", |_| solve(&b.solver, snapshots))?;
    out.phase("write", |o| write_trajectory(&traj, o))?;
    let passed = traj.gronwall_envelope_ok != Some(false);
    if !out.quiet() {
        let last = traj.records.last().map_or(f64::NAN, |r| r.energy.total);
        println!(
            "solve: {} steps, final energy {last:.6e}, eta {}, C_gamma {}",
            traj.records.len().saturating_sub(1),
            traj.eta,
            traj.c_gamma
        );
    }
    Ok(passed)
}

fn write_trajectory(traj: &Trajectory, out: &mut Output) -> std::io::Result<()> {
    out.write("trajectory.csv", traj.to_csv().as_bytes())?;
    let mesh = &traj.config.mesh;
    for (k, s) in traj.snapshots.iter().enumerate() {
        out.write(&format!("snapshot_{k:03}.csv"), snapshot_csv(mesh, &s.u, s.t).as_bytes())?;
        let raw = format!("snapshot_{k:03}.bin");
        out.write(&raw, &snapshot_raw(&s.u))?;
        let sidecar = serde_json::to_string_pretty(&RawSidecar::new(raw.clone(), mesh, s.t)).expect("sidecars serialize");
        out.write(&format!("snapshot_{k:03}.json"), sidecar.as_bytes())?;
    }
    let summary = SolveSummary {
        steps: traj.records.len().saturating_sub(1),
        eta: traj.eta,
        c_gamma: traj.c_gamma,
        final_energy: traj.records.last().map_or(f64::NAN, |r| r.energy.total),
        max_energy_increase: (traj.records.len() > 1).then(|| traj.max_energy_increase()),
        time_derivative_l2: traj.time_derivative_l2,
        selection_l2: traj.selection_l2,
        boundary_selection_max: traj.boundary_selection_max,
        gronwall_envelope_ok: traj.gronwall_envelope_ok,
    };
    out.write(
        "summary.json",
        serde_json::to_string_pretty(&summary).expect("summaries serialize").as_bytes(),
    )?;
    let hash = out.run_hash().to_string();
    let (energy, norms) = trajectory_plots(traj);
    out.plot("energy.svg", energy.render(&hash))?;
    out.plot("norms.svg", norms.render(&hash))
}

/// Energy against time, and the bulk/boundary norms against time.
pub fn trajectory_plots(traj: &Trajectory) -> (LinePlot, LinePlot) {
    let t: Vec<f64> = traj.records.iter().map(|r| r.t).collect();
    let col = |f: fn(&ac_dynbc::evolution::Record) -> f64| traj.records.iter().map(f).collect::<Vec<f64>>();
    let energy = LinePlot::new("Total energy", "t", "E").with(Series::new("E(t)", &t, &col(|r| r.energy.total)));
    let norms = LinePlot::new("Solution norms", "t", "norm")
        .with(Series::new("|u|_H", &t, &col(|r| r.norms.l2_bulk)))
        .with(Series::new("|u|_H_Gamma", &t, &col(|r| r.norms.l2_boundary)))
        .with(Series::new("|grad u|", &t, &col(|r| r.norms.h1_semi_bulk)));
    (energy, norms)
}

fn emit_report(report: &ExperimentReport, out: &mut Output) -> std::io::Result<()> {
    let id = report.experiment_id.as_str();
    out.write(&format!("{id}_report.json"), report.to_json().as_bytes())?;
    out.write(&format!("{id}_report.txt"), report.to_text().as_bytes())?;
    for t in &report.tables {
        out.write(&format!("{id}_{}.csv", t.name), t.to_csv().as_bytes())?;
    }
    let hash = out.run_hash().to_string();
    for (name, plot) in report_plots(report) {
        out.plot(&format!("{id}_{name}.svg"), plot.render(&hash))?;
    }
    Ok(())
}

/// Plots for a report, keyed by a short file stem.
pub fn report_plots(r: &ExperimentReport) -> Vec<(&'static str, LinePlot)> {
    let col = |table: &str, c: &str| r.table(table).map(|t| t.column(c)).unwrap_or_default();
    let mut plots = Vec::new();
    match r.experiment_id {
        ac_dynbc::experiments::ExperimentId::Contdep => {
            let d = col("runs", "delta");
            plots.push((
                "bound",
                LinePlot::new("Continuous dependence", "data difference", "difference norm")
                    .log_log()
                    .with(Series::new("LHS", &d, &col("runs", "lhs")))
                    .with(Series::new("RHS", &d, &col("runs", "rhs")))
                    .fit(0),
            ));
        }
        ac_dynbc::experiments::ExperimentId::EpsSweep => {
            plots.push((
                "cauchy",
                LinePlot::new("Regularization limit", "eps", "gap")
                    .log_log()
                    .with(Series::new("Cauchy gap", &col("cauchy", "eps"), &col("cauchy", "gap")))
                    .with(Series::new("distance to prox", &col("runs", "eps"), &col("runs", "prox_distance")))
                    .fit(0),
            ));
        }
        ac_dynbc::experiments::ExperimentId::NuSweep => {
            plots.push((
                "error",
                LinePlot::new("Vanishing surface diffusion", "nu", "error")
                    .log_log()
                    .with(Series::new("e(nu)", &col("runs", "nu"), &col("runs", "e")))
                    .fit(0),
            ));
        }
        ac_dynbc::experiments::ExperimentId::Mms => {
            plots.push((
                "spatial",
                LinePlot::new("Spatial convergence", "h", "error")
                    .log_log()
                    .with(Series::new("error", &col("spatial", "h"), &col("spatial", "error")))
                    .fit(0),
            ));
            plots.push((
                "temporal",
                LinePlot::new("Temporal convergence", "dt", "increment")
                    .log_log()
                    .with(Series::new(
                        "increment",
                        &col("temporal_increments", "dt"),
                        &col("temporal_increments", "increment"),
                    ))
                    .fit(0),
            ));
        }
        ac_dynbc::experiments::ExperimentId::EnergyDecay => {
            plots.push((
                "energy",
                LinePlot::new("Total energy", "t", "E")
                    .with(Series::new("E(t)", &col("trajectory", "t"), &col("trajectory", "energy_total"))),
            ));
        }
    }
    plots
}

#[derive(Serialize)]
struct GraphCheck {
    bulk: Vec<PropertyCheck>,
    boundary: Vec<PropertyCheck>,
    compatibility: Option<CompatibilityReport>,
    domain_inclusion_witness: Option<f64>,
    passed: bool,
}

fn suite(g: &ScalarGraph, key: &str) -> Result<Vec<PropertyCheck>, RunError> {
    graph_property_suite(g, &uniform_samples(201)).map_err(|e| ConfigError::invalid(key, e.to_string()).into())
}

fn graph_check(b: &Bundle, out: &mut Output) -> Result<bool, RunError> {
    let (bulk, boundary) = (&b.solver.bulk.graph, &b.solver.boundary.graph);
    let (bulk_checks, boundary_checks) = out.phase("properties", |_| {
        Ok::<_, RunError>((suite(bulk, "bulk.graph")?, suite(boundary, "boundary.graph")?))
    })?;
    let (compatibility, witness) = match check_compatibility(bulk, boundary, &default_samples(boundary)) {
        Ok(r) => (Some(r), None),
        Err(CompatError::DomainInclusion { witness }) => (None, Some(witness)),
        Err(e) => return Err(ConfigError::Compat(e).into()),
    };
    let passed = bulk_checks.iter().chain(&boundary_checks).all(|c| c.holds)
        && compatibility.as_ref().is_some_and(|r| r.holds);
    let report = GraphCheck {
        bulk: bulk_checks,
        boundary: boundary_checks,
        compatibility,
        domain_inclusion_witness: witness,
        passed,
    };
    out.write(
        "graph_check.json",
        serde_json::to_string_pretty(&report).expect("graph checks serialize").as_bytes(),
    )?;
    if !out.quiet() {
        for (side, checks) in [("bulk", &report.bulk), ("boundary", &report.boundary)] {
            for c in checks {
                println!(
                    "[{}] {side} {}: worst {:e} (tolerance {:e})",
                    if c.holds { "pass" } else { "FAIL" },
                    c.name,
                    c.worst,
                    c.tolerance
                );
            }
        }
        match (&report.compatibility, report.domain_inclusion_witness) {
            (Some(r), _) => println!(
                "compatibility: eta = {}, C_gamma = {}, eps margin {:e}, holds = {}",
                r.eta, r.c_gamma, r.eps_margin, r.holds
            ),
            (None, Some(w)) => println!("compatibility: domain inclusion fails at r = {w}"),
            (None, None) => {}
        }
    }
    Ok(passed)
}
