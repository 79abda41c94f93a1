//! Regularization sweep (ε → 0) and vanishing boundary diffusion sweep (ν → 0).

use rayon::prelude::*;
use std::collections::BTreeMap;
use std::time::Instant;

use super::{
    decreasing_to_floor, diff, echo, history, squared_norms, thresholds, ExperimentError, ExperimentId,
    ExperimentReport, History, Table,
};
use crate::config::{ConfigError, Scheme, SolverConfig};
use crate::evolution::{mollify_initial, Model};
use crate::mesh::{inner_bulk, laplace_beltrami, Side, StripMesh};

fn check_decreasing_positive(key: &str, list: &[f64]) -> Result<(), ConfigError> {
    if list.is_empty() {
        return Err(ConfigError::invalid(key, "must not be empty"));
    }
    if list.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(ConfigError::invalid(key, "entries must be positive"));
    }
    if list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ConfigError::invalid(key, "entries must be strictly decreasing"));
    }
    Ok(())
}

/// `max_n ‖a − b‖_H` over two histories.
fn max_bulk_distance(mesh: &StripMesh, a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = diff(x, y);
            inner_bulk(mesh, &d, &d).sqrt()
        })
        .fold(0.0, f64::max)
}

/// Solve the regularized problem at each ε and the exact-graph problem with the
/// prox scheme, then tabulate Cauchy gaps and the distance to the reference.
pub fn run_eps_sweep(config: &SolverConfig, eps_list: &[f64]) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    if config.scheme != Scheme::RegularizedNewton {
        return Err(ConfigError::invalid("scheme", "the eps sweep needs the regularized scheme").into());
    }
    check_decreasing_positive("sweep_eps.eps", eps_list)?;
    let mut models = Vec::with_capacity(eps_list.len() + 1);
    for &eps in eps_list {
        models.push(Model::new(&SolverConfig { eps, ..config.clone() })?);
    }
    models.push(Model::new(&SolverConfig {
        scheme: Scheme::ProxSplitting,
        ..config.clone()
    })?);
    let histories: Vec<Vec<Vec<f64>>> = models
        .par_iter()
        .map(|m| history(m.clone(), m.initial_field()).map(|h| h.u))
        .collect::<Result<_, _>>()?;
    let mesh = &config.mesh;
    let reference = histories.last().expect("the prox reference is always present");

    let mut runs = Table::new("runs", &["eps", "prox_distance"]);
    for (i, &eps) in eps_list.iter().enumerate() {
        runs.push(vec![eps, max_bulk_distance(mesh, &histories[i], reference)]);
    }
    let mut cauchy = Table::new("cauchy", &["eps", "eps_next", "gap"]);
    for i in 0..eps_list.len().saturating_sub(1) {
        cauchy.push(vec![
            eps_list[i],
            eps_list[i + 1],
            max_bulk_distance(mesh, &histories[i], &histories[i + 1]),
        ]);
    }
    let echo = serde_json::json!({ "config": echo(config), "eps": eps_list });
    Ok(ExperimentReport::assemble(
        ExperimentId::EpsSweep,
        echo,
        vec![runs, cauchy],
        thresholds(&[("prox_factor", 5.0), ("roundoff_floor", 1e-9)]),
        start.elapsed(),
    ))
}

pub(crate) fn evaluate_eps(runs: &Table, cauchy: &Table, factor: f64, floor: f64) -> super::Evaluation {
    let gaps = cauchy.column("gap");
    let prox = runs.column("prox_distance");
    let mut derived = BTreeMap::new();
    let mut flags = BTreeMap::new();
    flags.insert("cauchy_decreasing".to_string(), decreasing_to_floor(&gaps, floor));
    let agreement = match (gaps.last(), prox.last()) {
        (Some(&g), Some(&p)) => {
            if g > 0.0 {
                derived.insert("prox_distance_over_last_gap".to_string(), p / g);
            }
            p <= factor * g || p <= floor
        }
        _ => true,
    };
    flags.insert("prox_agreement".to_string(), agreement);
    if let Some(&g) = gaps.last() {
        derived.insert("last_gap".to_string(), g);
    }
    (derived, flags)
}

/// `ν (Σ dt ‖Δ_Γ v‖²_{H_Γ})^{1/2}` over a history.
fn nu_laplace_beltrami(mesh: &StripMesh, nu: f64, dt: f64, h: &History) -> Result<f64, ExperimentError> {
    let mut acc = 0.0;
    for u in h.u.iter().skip(1) {
        for side in Side::BOTH {
            let lb = laplace_beltrami(mesh, mesh.trace(u, side)).map_err(ConfigError::from)?;
            acc += dt * mesh.hx() * lb.iter().map(|x| x * x).sum::<f64>();
        }
    }
    Ok(nu * acc.sqrt())
}

/// For each ν, mollify the initial data, solve with boundary diffusion ν, and
/// compare with the ν = 0 problem started from the raw data.
pub fn run_nu_sweep(config: &SolverConfig, nu_list: &[f64]) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    check_decreasing_positive("sweep_nu.nu", nu_list)?;
    let reference = Model::new(&SolverConfig {
        nu: 0.0,
        ..config.clone()
    })?;
    let u0 = reference.initial_field();
    let mesh = config.mesh;
    let mut jobs = Vec::with_capacity(nu_list.len() + 1);
    for &nu in nu_list {
        let model = Model::new(&SolverConfig { nu, ..config.clone() })?;
        let mollified = mollify_initial(&mesh, &u0, nu, &config.boundary.graph)?;
        jobs.push((model, mollified));
    }
    jobs.push((reference, u0.clone()));
    let histories: Vec<History> = jobs
        .par_iter()
        .map(|(m, init)| history(m.clone(), init.clone()))
        .collect::<Result<_, _>>()?;
    let base = histories.last().expect("the nu = 0 reference is always present");

    let mut runs = Table::new(
        "runs",
        &[
            "nu",
            "e",
            "e_bulk",
            "e_boundary",
            "mollifier_shift",
            "nu_laplace_beltrami",
            "boundary_selection_max",
        ],
    );
    for (i, &nu) in nu_list.iter().enumerate() {
        let h = &histories[i];
        let (mut eb, mut eg) = (0.0_f64, 0.0_f64);
        for (a, b) in h.u.iter().zip(&base.u) {
            let (sb, sg) = squared_norms(&mesh, &diff(a, b));
            eb = eb.max(sb.sqrt());
            eg = eg.max(sg.sqrt());
        }
        let shift = jobs[i]
            .1
            .iter()
            .zip(&u0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        runs.push(vec![
            nu,
            eb + eg,
            eb,
            eg,
            shift,
            nu_laplace_beltrami(&mesh, nu, config.dt, h)?,
            h.xi_gamma_l2.iter().copied().fold(0.0, f64::max),
        ]);
    }
    let echo = serde_json::json!({ "config": echo(config), "nu": nu_list });
    Ok(ExperimentReport::assemble(
        ExperimentId::NuSweep,
        echo,
        vec![runs],
        thresholds(&[("roundoff_floor", 1e-9)]),
        start.elapsed(),
    ))
}

pub(crate) fn evaluate_nu(runs: &Table, floor: f64) -> super::Evaluation {
    let e = runs.column("e");
    let mut derived = BTreeMap::new();
    let mut flags = BTreeMap::new();
    flags.insert("e_decreasing".to_string(), decreasing_to_floor(&e, floor));
    if let (Some(first), Some(last)) = (e.first(), e.last()) {
        if e.len() >= 2 && *last > 0.0 {
            derived.insert("e_reduction".to_string(), first / last);
        }
    }
    (derived, flags)
}
