//! Reproducible numerical experiments with self-auditing reports.
//!
//! Every experiment stores its raw measurements as named tables plus the
//! thresholds it was judged against. Derived rates and pass flags are produced
//! by a pure function of those two pieces, so [`ExperimentReport::audit`] can
//! recompute them from a deserialized report.

mod contdep;
mod energy_decay;
mod mms;
mod sweeps;

pub use contdep::{run_contdep, DataDifference, Datum, PerturbationShape, PerturbationSpec};
pub use energy_decay::run_energy_decay;
pub use mms::{run_mms, MmsLevel, MmsPlan};
pub use sweeps::{run_eps_sweep, run_nu_sweep};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;
use thiserror::Error;

use crate::config::ConfigError;
use crate::evolution::{Model, Solver, SolverError};
use crate::mesh::{inner_boundary, StripMesh};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    Contdep,
    EpsSweep,
    NuSweep,
    Mms,
    EnergyDecay,
}

impl ExperimentId {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::Contdep => "contdep",
            ExperimentId::EpsSweep => "eps_sweep",
            ExperimentId::NuSweep => "nu_sweep",
            ExperimentId::Mms => "mms",
            ExperimentId::EnergyDecay => "energy_decay",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Values of one column, or an empty vector when the column is unknown.
    pub fn column(&self, name: &str) -> Vec<f64> {
        match self.columns.iter().position(|c| c == name) {
            Some(i) => self.rows.iter().map(|r| r[i]).collect(),
            None => Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment_id: ExperimentId,
    /// Echo of the configuration or plan the experiment ran with.
    pub config: serde_json::Value,
    pub tables: Vec<Table>,
    pub thresholds: BTreeMap<String, f64>,
    pub derived: BTreeMap<String, f64>,
    pub flags: BTreeMap<String, bool>,
    /// Excluded from the JSON document so that reruns hash identically.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl ExperimentReport {
    pub(crate) fn assemble(
        experiment_id: ExperimentId,
        config: serde_json::Value,
        tables: Vec<Table>,
        thresholds: BTreeMap<String, f64>,
        wall_time: Duration,
    ) -> Self {
        let (derived, flags) = evaluate(experiment_id, &tables, &thresholds);
        ExperimentReport {
            experiment_id,
            config,
            tables,
            thresholds,
            derived,
            flags,
            wall_time,
        }
    }

    pub fn passed(&self) -> bool {
        self.flags.values().all(|&f| f)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// True when the stored derived values and flags match a recomputation
    /// from the tables and thresholds alone.
    pub fn audit(&self) -> bool {
        let (derived, flags) = evaluate(self.experiment_id, &self.tables, &self.thresholds);
        let same_derived = derived.len() == self.derived.len()
            && derived
                .iter()
                .zip(&self.derived)
                .all(|((ka, a), (kb, b))| ka == kb && (a == b || (a.is_nan() && b.is_nan())));
        same_derived && flags == self.flags
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only serializable data")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment: {}", self.experiment_id.as_str());
        for t in &self.tables {
            let _ = writeln!(s, "\n[{}]", t.name);
            let _ = writeln!(s, "{}", t.columns.iter().map(|c| format!("{c:>16}")).collect::<String>());
            for r in &t.rows {
                let _ = writeln!(s, "{}", r.iter().map(|v| format!("{v:>16.6e}")).collect::<String>());
            }
        }
        if !self.thresholds.is_empty() {
            let _ = writeln!(s, "\nthresholds:");
            for (k, v) in &self.thresholds {
                let _ = writeln!(s, "  {k} = {v:e}");
            }
        }
        if !self.derived.is_empty() {
            let _ = writeln!(s, "\nderived:");
            for (k, v) in &self.derived {
                let _ = writeln!(s, "  {k} = {v:.6e}");
            }
        }
        let _ = writeln!(s, "\nflags:");
        for (k, v) in &self.flags {
            let _ = writeln!(s, "  [{}] {k}", if *v { "pass" } else { "FAIL" });
        }
        s
    }
}

type Evaluation = (BTreeMap<String, f64>, BTreeMap<String, bool>);

fn evaluate(id: ExperimentId, tables: &[Table], thresholds: &BTreeMap<String, f64>) -> Evaluation {
    let get = |name: &str| tables.iter().find(|t| t.name == name);
    let th = |name: &str| thresholds.get(name).copied().unwrap_or(f64::NAN);
    let empty = Table::new("", &[]);
    match id {
        ExperimentId::Contdep => contdep::evaluate(get("runs").unwrap_or(&empty), th("quadratic_slack")),
        ExperimentId::EpsSweep => sweeps::evaluate_eps(
            get("runs").unwrap_or(&empty),
            get("cauchy").unwrap_or(&empty),
            th("prox_factor"),
            th("roundoff_floor"),
        ),
        ExperimentId::NuSweep => sweeps::evaluate_nu(get("runs").unwrap_or(&empty), th("roundoff_floor")),
        ExperimentId::Mms => mms::evaluate(
            get("spatial").unwrap_or(&empty),
            get("temporal_increments").unwrap_or(&empty),
            th("min_spatial_order"),
            th("min_temporal_order"),
        ),
        ExperimentId::EnergyDecay => {
            energy_decay::evaluate(get("trajectory").unwrap_or(&empty), th("energy_tol"), th("dissipation_tol"))
        }
    }
}

/// Strict decrease with values at or below `floor` treated as converged.
pub(crate) fn decreasing_to_floor(values: &[f64], floor: f64) -> bool {
    values.windows(2).all(|w| w[1] < w[0] || w[1] <= floor)
}

/// Least-squares slope of `log y` against `log x` over positive pairs.
pub fn fitted_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Field history `u⁰, u¹, …, u^N` plus per-step boundary selection norms.
pub(crate) struct History {
    pub u: Vec<Vec<f64>>,
    pub xi_gamma_l2: Vec<f64>,
}

pub(crate) fn history(model: Model, u0: Vec<f64>) -> Result<History, SolverError> {
    let mesh = *model.mesh();
    let mut solver = Solver::with_initial(model, u0);
    let mut u = vec![solver.state().u.clone()];
    let mut xi_gamma_l2 = vec![0.0];
    while !solver.done() {
        let s = solver.step()?;
        u.push(s.u.clone());
        xi_gamma_l2.push((s.xi_gamma.iter().map(|x| x * x).sum::<f64>() * mesh.hx()).sqrt());
    }
    Ok(History { u, xi_gamma_l2 })
}

pub(crate) fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `‖w‖²_H + ‖w|_Γ‖²_{H_Γ}` pieces as a pair.
pub(crate) fn squared_norms(mesh: &StripMesh, w: &[f64]) -> (f64, f64) {
    (crate::mesh::inner_bulk(mesh, w, w), inner_boundary(mesh, w, w))
}

pub(crate) fn thresholds(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

pub(crate) fn echo<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).unwrap_or(serde_json::Value::Null)
}
