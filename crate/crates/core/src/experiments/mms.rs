//! Manufactured-solution convergence study.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;

use super::{diff, echo, fitted_slope, squared_norms, thresholds, ExperimentError, ExperimentId, ExperimentReport, Table};
use crate::closed_form::ClosedForm;
use crate::config::{Scheme, SolverConfig};
use crate::evolution::{Model, Solver};
use crate::mesh::StripMesh;
use crate::potentials::{catalog, PotentialPair};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmsLevel {
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
}

/// A spatial refinement (with `dt ∝ h²`) and a time-step refinement at fixed mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmsPlan {
    pub spatial: Vec<MmsLevel>,
    pub temporal: Vec<MmsLevel>,
    pub t_final_spatial: f64,
    pub t_final_temporal: f64,
    pub amplitude: f64,
    pub shift: f64,
    pub nu: f64,
    pub lx: f64,
    pub ly: f64,
    /// Regularization of the Newton scheme; small enough to be invisible at these errors.
    pub eps: f64,
    pub potential: PotentialPair,
}

impl MmsPlan {
    /// Spatial levels `N × (N+1)` with `dt = 2e-3·(32/N)²` on `[0, 0.05]`, and time
    /// steps `4e-3, 2e-3, 1e-3` on `[0, 0.1]` at the finest spatial level.
    pub fn standard(sizes: &[usize]) -> Self {
        let spatial: Vec<MmsLevel> = sizes
            .iter()
            .map(|&n| MmsLevel {
                nx: n,
                ny: n + 1,
                dt: 2e-3 * (32.0 / n as f64).powi(2),
            })
            .collect();
        let fine = sizes.iter().copied().max().unwrap_or(32);
        let temporal = [4e-3, 2e-3, 1e-3]
            .iter()
            .map(|&dt| MmsLevel {
                nx: fine,
                ny: fine + 1,
                dt,
            })
            .collect();
        MmsPlan {
            spatial,
            temporal,
            t_final_spatial: 0.05,
            t_final_temporal: 0.1,
            amplitude: 0.9,
            shift: 0.0,
            nu: 1.0,
            lx: 1.0,
            ly: 1.0,
            eps: 1e-12,
            potential: catalog("double_well").expect("double_well is in the catalog"),
        }
    }

    pub fn config(&self, level: MmsLevel, t_final: f64) -> Result<SolverConfig, ExperimentError> {
        let (u, f, g) = ClosedForm::manufactured_triple(self.amplitude, self.shift);
        Ok(SolverConfig {
            mesh: StripMesh::new(level.nx, level.ny, self.lx, self.ly).map_err(crate::config::ConfigError::from)?,
            nu: self.nu,
            eps: self.eps,
            dt: level.dt,
            t_final,
            scheme: Scheme::RegularizedNewton,
            bulk: self.potential.clone(),
            boundary: self.potential.clone(),
            forcing_bulk: f,
            forcing_boundary: g,
            initial: u,
        })
    }
}

/// `max_n (‖uⁿ − u*(tⁿ)‖_H + ‖vⁿ − v*(tⁿ)‖_{H_Γ})` for one level, plus the fields
/// at every multiple of `sample_every` (which must be a multiple of `dt`).
pub(crate) fn level_run(config: &SolverConfig, sample_every: f64) -> Result<(f64, Vec<Vec<f64>>), ExperimentError> {
    let model = Model::new(config)?;
    let stride = (sample_every / config.dt).round().max(1.0) as usize;
    let cx = config.context();
    let exact = |t: f64| config.mesh.sample(|x, y| config.initial.eval(x, y, t, &cx));
    let mut solver = Solver::with_initial(model.clone(), model.initial_field());
    let err = |u: &[f64], t: f64| {
        let (b, g) = squared_norms(&config.mesh, &diff(u, &exact(t)));
        b.sqrt() + g.sqrt()
    };
    let mut worst = err(&solver.state().u, 0.0);
    let mut samples = vec![solver.state().u.clone()];
    while !solver.done() {
        let s = solver.step()?;
        worst = worst.max(err(&s.u, s.t));
        if s.step % stride == 0 {
            samples.push(s.u.clone());
        }
    }
    Ok((worst, samples))
}

pub fn run_mms(plan: &MmsPlan) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    let coarse = plan.temporal.iter().map(|l| l.dt).fold(0.0, f64::max);
    for l in &plan.temporal {
        let ratio = coarse / l.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(crate::config::ConfigError::invalid("mms.temporal", "each dt must divide the largest dt").into());
        }
    }
    let mut jobs = Vec::new();
    for &l in &plan.spatial {
        jobs.push((plan.config(l, plan.t_final_spatial)?, plan.t_final_spatial));
    }
    for &l in &plan.temporal {
        jobs.push((plan.config(l, plan.t_final_temporal)?, coarse));
    }
    let results: Vec<(f64, Vec<Vec<f64>>)> = jobs
        .par_iter()
        .map(|(c, every)| level_run(c, *every))
        .collect::<Result<_, _>>()?;
    let columns = ["nx", "ny", "h", "dt", "error"];
    let mut spatial = Table::new("spatial", &columns);
    let mut temporal = Table::new("temporal", &columns);
    for (i, (c, _)) in jobs.iter().enumerate() {
        let row = vec![c.mesh.nx as f64, c.mesh.ny as f64, c.mesh.hx(), c.dt, results[i].0];
        if i < plan.spatial.len() {
            spatial.push(row);
        } else {
            temporal.push(row);
        }
    }
    // Successive differences on a fixed mesh cancel the spatial error.
    let mut increments = Table::new("temporal_increments", &["dt", "dt_next", "increment"]);
    let ns = plan.spatial.len();
    for i in 0..plan.temporal.len().saturating_sub(1) {
        let (a, b) = (&results[ns + i].1, &results[ns + i + 1].1);
        let mesh = &jobs[ns + i].0.mesh;
        let inc = a
            .iter()
            .zip(b)
            .map(|(x, y)| {
                let (sb, sg) = squared_norms(mesh, &diff(x, y));
                sb.sqrt() + sg.sqrt()
            })
            .fold(0.0, f64::max);
        increments.push(vec![plan.temporal[i].dt, plan.temporal[i + 1].dt, inc]);
    }
    Ok(ExperimentReport::assemble(
        ExperimentId::Mms,
        echo(plan),
        vec![spatial, temporal, increments],
        thresholds(&[("min_spatial_order", 1.8), ("min_temporal_order", 0.9)]),
        start.elapsed(),
    ))
}

/// Smallest pairwise order `log(e_i/e_{i+1}) / log(s_i/s_{i+1})` and the fitted slope.
fn orders(step: &[f64], err: &[f64]) -> (Option<f64>, Option<f64>) {
    let min = step
        .windows(2)
        .zip(err.windows(2))
        .map(|(s, e)| (e[0] / e[1]).ln() / (s[0] / s[1]).ln())
        .fold(None, |acc: Option<f64>, p| Some(acc.map_or(p, |a| a.min(p))));
    (min, fitted_slope(step, err))
}

pub(crate) fn evaluate(spatial: &Table, increments: &Table, min_space: f64, min_time: f64) -> super::Evaluation {
    let mut derived = BTreeMap::new();
    let mut flags = BTreeMap::new();
    for (name, table, step_col, err_col, threshold) in [
        ("spatial", spatial, "h", "error", min_space),
        ("temporal", increments, "dt", "increment", min_time),
    ] {
        let (min, fit) = orders(&table.column(step_col), &table.column(err_col));
        if let Some(m) = min {
            derived.insert(format!("{name}_order_min"), m);
        }
        if let Some(f) = fit {
            derived.insert(format!("{name}_order_fit"), f);
        }
        flags.insert(format!("{name}_order"), min.map_or(true, |m| m >= threshold));
    }
    (derived, flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> MmsPlan {
        let mut p = MmsPlan::standard(&[8, 16]);
        p.t_final_spatial = 0.008;
        p.t_final_temporal = 0.008;
        p.spatial[1].dt = 5e-4;
        p.spatial[0].dt = 2e-3;
        p.temporal = vec![
            MmsLevel { nx: 16, ny: 17, dt: 2e-3 },
            MmsLevel { nx: 16, ny: 17, dt: 1e-3 },
            MmsLevel { nx: 16, ny: 17, dt: 5e-4 },
        ];
        p
    }

    #[test]
    fn exact_initial_data_has_zero_error() {
        let p = tiny();
        let c = p.config(p.spatial[1], p.t_final_spatial).unwrap();
        let m = Model::new(&c).unwrap();
        let cx = c.context();
        let exact = c.mesh.sample(|x, y| c.initial.eval(x, y, 0.0, &cx));
        assert_eq!(m.initial_field(), exact);
    }

    #[test]
    fn two_spatial_levels_give_one_pairwise_order() {
        let r = run_mms(&tiny()).unwrap();
        assert_eq!(r.table("spatial").unwrap().rows.len(), 2);
        assert!(r.derived.contains_key("spatial_order_min"));
        assert_eq!(r.table("temporal_increments").unwrap().rows.len(), 2);
        assert!(r.derived.contains_key("temporal_order_min"));
        assert!(r.audit());
        let e = r.table("spatial").unwrap().column("error");
        assert!(e[1] < e[0], "{e:?}");
    }

    #[test]
    fn orders_of_exact_power_laws() {
        let (m, f) = orders(&[0.1, 0.05, 0.025], &[1.0, 0.25, 0.0625]);
        assert!((m.unwrap() - 2.0).abs() < 1e-12 && (f.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(orders(&[0.1], &[1.0]), (None, None));
    }
}

#[cfg(test)]
mod divisibility {
    use super::*;

    #[test]
    fn temporal_steps_must_divide_the_coarsest() {
        let mut p = MmsPlan::standard(&[8]);
        p.temporal[1].dt = 3e-3;
        assert!(matches!(run_mms(&p), Err(ExperimentError::Config(_))));
    }
}
