//! Time loop, trajectory records and CSV output.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use super::{energy, EnergyBreakdown, Model, SolverError, SolverState};
use crate::config::SolverConfig;
use crate::mesh::{inner_boundary, inner_bulk, norms, NormSet};

pub const TRAJECTORY_COLUMNS: [&str; 12] = [
    "t",
    "energy_total",
    "energy_bulk_grad",
    "energy_bulk_beta",
    "energy_bulk_pi",
    "energy_boundary_grad",
    "energy_boundary_beta",
    "energy_boundary_pi",
    "norm_l2_bulk",
    "norm_l2_boundary",
    "norm_h1_bulk",
    "membership_violation_max",
];

/// Diagnostics at one time level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub energy: EnergyBreakdown,
    pub norms: NormSet,
    pub membership_violation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub eta: f64,
    pub c_gamma: f64,
    pub records: Vec<Record>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: SolverState,
    /// `Σ dt·‖(uⁿ⁺¹ − uⁿ)/dt‖²_H`.
    pub time_derivative_l2: f64,
    /// `Σ dt·‖ξⁿ⁺¹‖²_H`.
    pub selection_l2: f64,
    /// `max_n ‖ξ_Γⁿ‖_{H_Γ}`.
    pub boundary_selection_max: f64,
    /// Whether `‖u‖² + ‖v‖²` stayed below `e^{(2L+1)t}` times its initial value;
    /// `None` when forcing is present and the envelope does not apply.
    pub gronwall_envelope_ok: Option<bool>,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut s = TRAJECTORY_COLUMNS.join(",");
        s.push('\n');
        for r in &self.records {
            let e = &r.energy;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.t,
                e.total,
                e.bulk_grad,
                e.bulk_beta,
                e.bulk_pi,
                e.boundary_grad,
                e.boundary_beta,
                e.boundary_pi,
                r.norms.l2_bulk,
                r.norms.l2_boundary,
                r.norms.h1_semi_bulk,
                r.membership_violation
            );
        }
        s
    }

    /// Largest step-to-step increase of the total energy (negative when strictly dissipative).
    pub fn max_energy_increase(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| w[1].energy.total - w[0].energy.total)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Stepping driver that owns one state.
#[derive(Clone, Debug)]
pub struct Solver {
    model: Model,
    state: SolverState,
}

impl Solver {
    pub fn new(config: &SolverConfig) -> Result<Self, SolverError> {
        let model = Model::new(config)?;
        let u0 = model.initial_field();
        Ok(Self::with_initial(model, u0))
    }

    pub fn with_initial(model: Model, u0: Vec<f64>) -> Self {
        let state = SolverState::new(model.mesh(), u0);
        Solver { model, state }
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn done(&self) -> bool {
        self.state.step >= self.model.steps
    }

    pub fn step(&mut self) -> Result<&SolverState, SolverError> {
        self.state = self.model.step(&self.state)?;
        Ok(&self.state)
    }
}

fn record(model: &Model, u: &[f64], t: f64, violation: f64) -> Result<Record, SolverError> {
    Ok(Record {
        t,
        energy: energy(model, u)?,
        norms: norms(model.mesh(), u)?,
        membership_violation: violation,
    })
}

/// Run a configuration to `t_final`, keeping snapshots at the steps nearest to
/// the requested times (plus the initial field whenever snapshots are requested).
pub fn solve(config: &SolverConfig, snapshot_times: &[f64]) -> Result<Trajectory, SolverError> {
    let solver = Solver::new(config)?;
    run(solver, snapshot_times)
}

pub(crate) fn run(mut solver: Solver, snapshot_times: &[f64]) -> Result<Trajectory, SolverError> {
    let model = solver.model.clone();
    let mesh = *model.mesh();
    let dt = model.config.dt;
    let mut wanted: Vec<usize> = snapshot_times
        .iter()
        .filter(|t| t.is_finite() && **t >= 0.0)
        .map(|t| ((t / dt).round() as usize).min(model.steps))
        .collect();
    if !wanted.is_empty() {
        wanted.push(0);
    }
    wanted.sort_unstable();
    wanted.dedup();

    let mut snapshots = Vec::new();
    let u0 = solver.state.u.clone();
    if wanted.first() == Some(&0) {
        snapshots.push(Snapshot { t: 0.0, u: u0.clone() });
    }
    let mut records = vec![record(&model, &u0, 0.0, 0.0)?];
    let zero_forcing = model.config.forcing_bulk.is_zero() && model.config.forcing_boundary.is_zero();
    let growth = 2.0 * model.config.lipschitz() + 1.0;
    let mass0 = inner_bulk(&mesh, &u0, &u0) + inner_boundary(&mesh, &u0, &u0);
    let mut envelope_ok = true;
    let mut dtu = 0.0;
    let mut xi_l2 = 0.0;
    let mut xig_max = 0.0_f64;

    while !solver.done() {
        let prev = solver.state.u.clone();
        let s = solver.step()?;
        let mut d: Vec<f64> = s.u.iter().zip(&prev).map(|(a, b)| (a - b) / dt).collect();
        dtu += dt * inner_bulk(&mesh, &d, &d);
        xi_l2 += dt * inner_bulk(&mesh, &s.xi, &s.xi);
        let xig = (s.xi_gamma.iter().map(|x| x * x).sum::<f64>() * mesh.hx()).sqrt();
        xig_max = xig_max.max(xig);
        let mass = inner_bulk(&mesh, &s.u, &s.u) + inner_boundary(&mesh, &s.u, &s.u);
        if mass > (growth * s.t).exp() * mass0 * (1.0 + 1e-12) + 1e-300 {
            envelope_ok = false;
        }
        let violation = super::recover_selection(&model, &prev, &s.u, s.t)?.membership_violation;
        let (t, step, u) = (s.t, s.step, s.u.clone());
        records.push(record(&model, &u, t, violation)?);
        if wanted.binary_search(&step).is_ok() {
            snapshots.push(Snapshot { t, u });
        }
        d.clear();
    }
    Ok(Trajectory {
        config: model.config.clone(),
        eta: model.compat.eta,
        c_gamma: model.compat.c_gamma,
        records,
        snapshots,
        final_state: solver.state,
        time_derivative_l2: dtu,
        selection_l2: xi_l2,
        boundary_selection_max: xig_max,
        gronwall_envelope_ok: zero_forcing.then_some(envelope_ok),
    })
}
