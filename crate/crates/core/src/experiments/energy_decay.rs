//! Energy dissipation along an unforced trajectory.

use std::collections::BTreeMap;
use std::time::Instant;

use super::{diff, echo, squared_norms, thresholds, ExperimentError, ExperimentId, ExperimentReport, Table};
use crate::config::{ConfigError, SolverConfig};
use crate::evolution::{energy, Model, Solver, SolverError};
use crate::graphs::Domain;

/// Distance of `r` to the closure of `d`, or the smallest positive number when
/// `r` sits on an open endpoint.
fn outside(d: &Domain, r: f64) -> f64 {
    if d.contains(r) {
        0.0
    } else {
        (d.lo.value - r).max(r - d.hi.value).max(f64::MIN_POSITIVE)
    }
}

pub fn run_energy_decay(config: &SolverConfig) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    if !config.forcing_bulk.is_zero() {
        return Err(ConfigError::invalid("forcing.bulk", "the energy study needs zero forcing").into());
    }
    if !config.forcing_boundary.is_zero() {
        return Err(ConfigError::invalid("forcing.boundary", "the energy study needs zero forcing").into());
    }
    let model = Model::new(config)?;
    let mesh = *model.mesh();
    let (db, dg) = (config.bulk.graph.domain(), config.boundary.graph.domain());
    let violation = |u: &[f64]| {
        let mut v = 0.0_f64;
        for (k, &r) in u.iter().enumerate() {
            v = v.max(outside(&db, r));
            if model.mg[k] > 0.0 {
                v = v.max(outside(&dg, r));
            }
        }
        v
    };
    let mut table = Table::new(
        "trajectory",
        &["step", "t", "energy_total", "energy_increase", "dissipation", "domain_violation"],
    );
    let mut solver = Solver::with_initial(model.clone(), model.initial_field());
    let mut e_prev = energy(&model, &solver.state().u).map_err(SolverError::from)?.total;
    let mut dissipation = 0.0;
    table.push(vec![0.0, 0.0, e_prev, 0.0, 0.0, violation(&solver.state().u)]);
    while !solver.done() {
        let prev = solver.state().u.clone();
        let s = solver.step()?;
        let (b, g) = squared_norms(&mesh, &diff(&s.u, &prev));
        dissipation += (b + g) / config.dt;
        let e = energy(&model, &s.u).map_err(SolverError::from)?.total;
        table.push(vec![s.step as f64, s.t, e, e - e_prev, dissipation, violation(&s.u)]);
        e_prev = e;
    }
    Ok(ExperimentReport::assemble(
        ExperimentId::EnergyDecay,
        echo(config),
        vec![table],
        thresholds(&[("energy_tol", 1e-10), ("dissipation_tol", 1e-10)]),
        start.elapsed(),
    ))
}

/// Flags: no step raises the energy by more than `energy_tol`; the accumulated
/// `Σ dt‖∂ₜu‖²` is at most twice the energy drop; the graph domains are respected.
pub(crate) fn evaluate(traj: &Table, energy_tol: f64, dissipation_tol: f64) -> super::Evaluation {
    let e = traj.column("energy_total");
    let inc = traj.column("energy_increase");
    let diss = traj.column("dissipation");
    let dom = traj.column("domain_violation");
    let mut derived = BTreeMap::new();
    let mut flags = BTreeMap::new();
    let worst = inc.iter().skip(1).copied().fold(f64::NEG_INFINITY, f64::max);
    if worst.is_finite() {
        derived.insert("max_energy_increase".to_string(), worst);
    }
    flags.insert("energy_non_increasing".to_string(), inc.iter().all(|&d| d <= energy_tol));
    let bounded = match (e.first(), e.last(), diss.last()) {
        (Some(e0), Some(en), Some(d)) => {
            derived.insert("energy_drop".to_string(), e0 - en);
            derived.insert("dissipation_total".to_string(), *d);
            0.5 * d <= e0 - en + dissipation_tol * e0.abs().max(1.0)
        }
        _ => true,
    };
    flags.insert("dissipation_bounded".to_string(), bounded);
    flags.insert("domain_respected".to_string(), dom.iter().all(|&v| v == 0.0));
    (derived, flags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::ClosedForm;
    use crate::config::Scheme;
    use crate::evolution::test_support::config;

    #[test]
    fn zero_data_has_constant_zero_energy() {
        let mut c = config("double_well", Scheme::RegularizedNewton, 8);
        c.initial = ClosedForm::Zero;
        let r = run_energy_decay(&c).unwrap();
        assert!(r.table("trajectory").unwrap().column("energy_total").iter().all(|&e| e == 0.0));
        assert!(r.passed());
    }

    #[test]
    fn forcing_is_rejected() {
        let mut c = config("double_well", Scheme::RegularizedNewton, 8);
        c.forcing_boundary = ClosedForm::Constant { value: 1.0 };
        assert!(matches!(run_energy_decay(&c), Err(ExperimentError::Config(_))));
    }

    #[test]
    fn obstacle_interior_constant_stays_confined() {
        let mut c = config("double_obstacle", Scheme::ProxSplitting, 8);
        c.initial = ClosedForm::Constant { value: 0.5 };
        c.t_final = 0.2;
        c.dt = 1e-2;
        let r = run_energy_decay(&c).unwrap();
        assert!(r.passed() && r.audit(), "{}", r.to_text());
    }

    #[test]
    fn both_schemes_dissipate() {
        for s in [Scheme::RegularizedNewton, Scheme::ProxSplitting] {
            let r = run_energy_decay(&config("double_well", s, 12)).unwrap();
            assert!(r.passed(), "{}", r.to_text());
        }
    }

    #[test]
    fn outside_distance() {
        let d = crate::graphs::ScalarGraph::indicator(-1.0, 1.0).domain();
        assert_eq!(outside(&d, 1.0), 0.0);
        assert_eq!(outside(&d, 1.5), 0.5);
        let l = crate::graphs::ScalarGraph::logarithmic().domain();
        assert!(outside(&l, 1.0) > 0.0);
    }
}
