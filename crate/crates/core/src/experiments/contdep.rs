//! Continuous dependence on the data with the explicit Gronwall constant.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;

use super::{diff, echo, history, squared_norms, thresholds, ExperimentError, ExperimentId, ExperimentReport, Table};
use crate::closed_form::{ClosedForm, Mode};
use crate::config::{ConfigError, SolverConfig};
use crate::evolution::Model;
use crate::mesh::{boundary_dirichlet_form, dirichlet_form, inner_boundary, inner_bulk};

/// Which datum is perturbed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Datum {
    Initial,
    BulkForcing,
    BoundaryForcing,
}

/// Unit-size perturbation pattern, scaled by the amplitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationShape {
    Constant,
    Cosine { kx: i32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub datum: Datum,
    pub shape: PerturbationShape,
    pub amplitude: f64,
}

impl PerturbationSpec {
    pub fn with_amplitude(self, amplitude: f64) -> Self {
        PerturbationSpec { amplitude, ..self }
    }

    /// The perturbation as a closed form, `None` for zero amplitude.
    pub fn closed_form(&self) -> Option<ClosedForm> {
        if self.amplitude == 0.0 {
            return None;
        }
        Some(match self.shape {
            PerturbationShape::Constant => ClosedForm::Constant { value: self.amplitude },
            PerturbationShape::Cosine { kx } => ClosedForm::Trig {
                offset: 0.0,
                modes: vec![Mode {
                    amplitude: self.amplitude,
                    kx,
                    phase: 0.0,
                    y_poly: Vec::new(),
                    decay: 0.0,
                }],
            },
        })
    }

    /// `config` with this perturbation added to the chosen datum; zero amplitude
    /// returns an identical config.
    pub fn apply(&self, config: &SolverConfig) -> Result<SolverConfig, ConfigError> {
        if !(self.amplitude >= 0.0) {
            return Err(ConfigError::invalid("contdep.amplitude", "must be nonnegative"));
        }
        let mut c = config.clone();
        if let Some(p) = self.closed_form() {
            let slot = match self.datum {
                Datum::Initial => &mut c.initial,
                Datum::BulkForcing => &mut c.forcing_bulk,
                Datum::BoundaryForcing => &mut c.forcing_boundary,
            };
            *slot = std::mem::replace(slot, ClosedForm::Zero).plus(p);
        }
        Ok(c)
    }
}

/// Squared data differences in the norms of the continuous-dependence estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DataDifference {
    pub initial_bulk: f64,
    pub initial_boundary: f64,
    /// `Σ dt ‖f₁(tⁿ) − f₂(tⁿ)‖²_H` over `n = 1..N`.
    pub forcing_bulk: f64,
    pub forcing_boundary: f64,
}

impl DataDifference {
    pub fn total(&self) -> f64 {
        self.initial_bulk + self.initial_boundary + self.forcing_bulk + self.forcing_boundary
    }
}

/// Left-hand side of the estimate for two field histories, together with the data
/// difference of the two models. Symmetric in its arguments.
///
/// The first value is `max_n P(tⁿ)` with
/// `P(tⁿ) = ‖w(tⁿ)‖²_H + ‖w(tⁿ)‖²_{H_Γ} + Σ_{m≤n} dt (‖∇w‖² + ν‖∇_Γ w‖²)`,
/// the quantity the Gronwall argument bounds at every time. The second value
/// adds the separate maxima of the two `L²` terms to the full gradient integrals.
pub(crate) fn lhs_and_data(
    m1: &Model,
    u1: &[Vec<f64>],
    m2: &Model,
    u2: &[Vec<f64>],
) -> (f64, f64, DataDifference) {
    let mesh = m1.mesh();
    let dt = m1.config.dt;
    let nu = m1.config.nu;
    let (mut sup_u, mut sup_v, mut grad) = (0.0_f64, 0.0_f64, 0.0);
    let mut sup_p = 0.0_f64;
    for (n, (a, b)) in u1.iter().zip(u2).enumerate() {
        let d = diff(a, b);
        let (bu, bv) = squared_norms(mesh, &d);
        sup_u = sup_u.max(bu);
        sup_v = sup_v.max(bv);
        if n > 0 {
            grad += dt * (dirichlet_form(mesh, &d, &d) + nu * boundary_dirichlet_form(mesh, &d, &d));
        }
        sup_p = sup_p.max(bu + bv + grad);
    }
    let d0 = diff(&u1[0], &u2[0]);
    let mut data = DataDifference {
        initial_bulk: inner_bulk(mesh, &d0, &d0),
        initial_boundary: inner_boundary(mesh, &d0, &d0),
        ..Default::default()
    };
    for n in 1..u1.len() {
        let t = m1.time(n);
        let (f1, g1) = m1.forcing(t);
        let (f2, g2) = m2.forcing(t);
        let df = diff(&f1, &f2);
        let dg = diff(&g1, &g2);
        data.forcing_bulk += dt * inner_bulk(mesh, &df, &df);
        data.forcing_boundary += dt * inner_boundary(mesh, &dg, &dg);
    }
    (sup_p, sup_u + sup_v + grad, data)
}

/// Gronwall constant `exp((2 max(L, L_Γ) + 1) T)`.
pub fn gronwall_constant(config: &SolverConfig) -> f64 {
    ((2.0 * config.lipschitz() + 1.0) * config.t_final).exp()
}

/// Solve the base problem and one perturbed problem per amplitude, then compare
/// the difference norms with `C_G` times the data difference.
pub fn run_contdep(
    config: &SolverConfig,
    perturbation: PerturbationSpec,
    amplitudes: &[f64],
) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    let base = Model::new(config)?;
    let perturbed: Vec<Model> = amplitudes
        .iter()
        .map(|&a| Ok(Model::new(&perturbation.with_amplitude(a).apply(config)?)?))
        .collect::<Result<_, ExperimentError>>()?;
    let mut models = vec![base];
    models.extend(perturbed);
    let histories: Vec<Vec<Vec<f64>>> = models
        .par_iter()
        .map(|m| history(m.clone(), m.initial_field()).map(|h| h.u))
        .collect::<Result<_, _>>()?;

    let c_g = gronwall_constant(config);
    let mut runs = Table::new(
        "runs",
        &[
            "delta",
            "lhs",
            "lhs_separate_sups",
            "rhs",
            "gronwall_constant",
            "data_initial_bulk",
            "data_initial_boundary",
            "data_forcing_bulk",
            "data_forcing_boundary",
        ],
    );
    for (i, &delta) in amplitudes.iter().enumerate() {
        let (lhs, separate, data) = lhs_and_data(&models[0], &histories[0], &models[i + 1], &histories[i + 1]);
        runs.push(vec![
            delta,
            lhs,
            separate,
            c_g * data.total(),
            c_g,
            data.initial_bulk,
            data.initial_boundary,
            data.forcing_bulk,
            data.forcing_boundary,
        ]);
    }
    let echo = serde_json::json!({
        "config": echo(config),
        "perturbation": echo(&perturbation),
        "amplitudes": amplitudes,
    });
    Ok(ExperimentReport::assemble(
        ExperimentId::Contdep,
        echo,
        vec![runs],
        thresholds(&[("quadratic_slack", 1.5)]),
        start.elapsed(),
    ))
}

pub(crate) fn evaluate(runs: &Table, slack: f64) -> super::Evaluation {
    let delta = runs.column("delta");
    let lhs = runs.column("lhs");
    let rhs = runs.column("rhs");
    let mut derived = BTreeMap::new();
    let mut flags = BTreeMap::new();

    flags.insert(
        "lhs_bounded_by_rhs".to_string(),
        lhs.iter().zip(&rhs).all(|(l, r)| l <= r),
    );
    flags.insert(
        "zero_amplitude_exact".to_string(),
        delta.iter().zip(&lhs).all(|(d, l)| *d != 0.0 || *l == 0.0),
    );
    // Consecutive positive amplitudes: LHS must shrink like δ² up to the slack.
    let positive: Vec<(f64, f64)> = delta
        .iter()
        .zip(&lhs)
        .filter(|(d, _)| **d > 0.0)
        .map(|(d, l)| (*d, *l))
        .collect();
    let mut quadratic = true;
    let mut worst = 0.0_f64;
    for w in positive.windows(2) {
        let (d0, l0) = w[0];
        let (d1, l1) = w[1];
        let (small, big, ls, lb) = if d1 < d0 { (d1, d0, l1, l0) } else { (d0, d1, l0, l1) };
        let allowed = slack * (small / big).powi(2) * lb;
        worst = worst.max(if allowed > 0.0 { ls / allowed } else { 0.0 });
        quadratic &= ls <= allowed;
    }
    flags.insert("quadratic_scaling".to_string(), quadratic);
    if positive.len() >= 2 {
        derived.insert("worst_quadratic_ratio".to_string(), worst);
    }
    let ratio = lhs
        .iter()
        .zip(&rhs)
        .filter(|(_, r)| **r > 0.0)
        .map(|(l, r)| l / r)
        .fold(f64::NEG_INFINITY, f64::max);
    if ratio.is_finite() {
        derived.insert("max_lhs_over_rhs".to_string(), ratio);
    }
    let separate = runs.column("lhs_separate_sups");
    let sep_ratio = separate
        .iter()
        .zip(&rhs)
        .filter(|(_, r)| **r > 0.0)
        .map(|(l, r)| l / r)
        .fold(f64::NEG_INFINITY, f64::max);
    if sep_ratio.is_finite() {
        derived.insert("max_separate_sups_over_rhs".to_string(), sep_ratio);
    }
    if let Some(&(d, l)) = positive.iter().min_by(|a, b| a.0.total_cmp(&b.0)) {
        derived.insert("lhs_over_delta_sq_smallest".to_string(), l / (d * d));
    }
    (derived, flags)
}
