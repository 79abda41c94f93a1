//! Damped Newton on the Yosida-regularized backward-Euler step.

use super::{
    add_boundary_diffusion, pcg, recover_selection, Model, SolverError, SolverState,
    NEWTON_MAX_ITER, NEWTON_TOL,
};
use crate::config::ConfigError;
use crate::mesh::stiffness_apply;

const PCG_REL_TOL: f64 = 1e-11;
const MAX_HALVINGS: usize = 30;

struct Frame<'a> {
    model: &'a Model,
    prev: &'a [f64],
    f: Vec<f64>,
    fg: Vec<f64>,
    eps: f64,
    eps_gamma: f64,
}

impl Frame<'_> {
    /// Residual and the diagonal of the nonlinear/mass part of the Jacobian.
    fn residual(&self, u: &[f64], r: &mut [f64], jd: Option<&mut [f64]>) -> Result<(), SolverError> {
        let m = self.model;
        let c = &m.config;
        let mesh = &c.mesh;
        stiffness_apply(mesh, u, r);
        add_boundary_diffusion(mesh, c.nu, u, r);
        let idt = 1.0 / c.dt;
        let mut jd = jd;
        for k in 0..u.len() {
            let (mb, mg) = (m.mb[k], m.mg[k]);
            let rb = c.bulk.graph.resolve(self.eps, u[k])?;
            let ut = (u[k] - self.prev[k]) * idt;
            let mut v = mb * (ut + rb.yosida + c.bulk.perturbation.eval(u[k]) - self.f[k]);
            let mut d = mb * (idt + rb.slope + c.bulk.perturbation.slope(u[k]));
            if mg != 0.0 {
                let rg = c.boundary.graph.resolve(self.eps_gamma, u[k])?;
                v += mg * (ut + rg.yosida + c.boundary.perturbation.eval(u[k]) - self.fg[k]);
                d += mg * (idt + rg.slope + c.boundary.perturbation.slope(u[k]));
            }
            r[k] += v;
            if let Some(jd) = jd.as_deref_mut() {
                jd[k] = d;
            }
        }
        Ok(())
    }

    fn scaled_max(&self, r: &[f64]) -> f64 {
        r.iter()
            .enumerate()
            .map(|(k, v)| v.abs() / (self.model.mb[k] + self.model.mg[k]))
            .fold(0.0, f64::max)
    }

    fn scaled_l2(&self, r: &[f64]) -> f64 {
        r.iter()
            .enumerate()
            .map(|(k, v)| v * v / (self.model.mb[k] + self.model.mg[k]))
            .sum::<f64>()
            .sqrt()
    }
}

/// One backward-Euler step of the regularized system.
pub fn step_regularized(model: &Model, state: &SolverState) -> Result<SolverState, SolverError> {
    let c = &model.config;
    if !(c.eps > 0.0) {
        return Err(ConfigError::invalid("eps", "the regularized scheme needs eps > 0").into());
    }
    let mesh = &c.mesh;
    let n = mesh.len();
    let t = model.time(state.step + 1);
    let (f, fg) = model.forcing(t);
    let frame = Frame {
        model,
        prev: &state.u,
        f,
        fg,
        eps: c.eps,
        eps_gamma: c.eps * model.eta(),
    };

    let mut u = state.u.clone();
    let mut r = vec![0.0; n];
    let mut jd = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut rt = vec![0.0; n];
    let mut du = vec![0.0; n];
    let mut precond = vec![0.0; n];
    let hx2 = mesh.hx() * mesh.hx();

    frame.residual(&u, &mut r, Some(&mut jd))?;
    let mut merit = frame.scaled_l2(&r);
    let mut it = 0;
    loop {
        let rmax = frame.scaled_max(&r);
        if !rmax.is_finite() {
            return Err(SolverError::NonFinite { t });
        }
        if rmax <= NEWTON_TOL {
            break;
        }
        if it == NEWTON_MAX_ITER {
            return Err(SolverError::Newton {
                t,
                iterations: it,
                residual: rmax,
            });
        }
        it += 1;

        for k in 0..n {
            let row = k / mesh.nx;
            precond[k] = jd[k] + model.kdiag_row[row] + model.mg[k] * 2.0 * c.nu / hx2;
        }
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        du.iter_mut().for_each(|v| *v = 0.0);
        let apply = |x: &[f64], y: &mut [f64]| {
            stiffness_apply(mesh, x, y);
            add_boundary_diffusion(mesh, c.nu, x, y);
            for k in 0..x.len() {
                y[k] += jd[k] * x[k];
            }
        };
        pcg(apply, &precond, &rhs, &mut du, PCG_REL_TOL, 20 * n.max(100))
            .map_err(|e| SolverError::Linear {
                t,
                iterations: e.iterations,
                residual: e.relative_residual,
            })?;

        let mut lambda = 1.0;
        for h in 0..=MAX_HALVINGS {
            for k in 0..n {
                trial[k] = u[k] + lambda * du[k];
            }
            frame.residual(&trial, &mut rt, None)?;
            let m = frame.scaled_l2(&rt);
            if m < merit || h == MAX_HALVINGS {
                break;
            }
            lambda *= 0.5;
        }
        std::mem::swap(&mut u, &mut trial);
        frame.residual(&u, &mut r, Some(&mut jd))?;
        merit = frame.scaled_l2(&r);
    }

    let sel = recover_selection(model, &state.u, &u, t)?;
    Ok(SolverState {
        t,
        step: state.step + 1,
        u,
        xi: sel.xi,
        xi_gamma: sel.xi_gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::super::test_support::config;
    use super::*;
    use crate::closed_form::ClosedForm;
    use crate::config::Scheme;

    #[test]
    fn zero_state_stays_zero() {
        let mut c = config("double_well", Scheme::RegularizedNewton, 8);
        c.initial = ClosedForm::Zero;
        let m = Model::new(&c).unwrap();
        let mut s = SolverState::new(m.mesh(), m.initial_field());
        for _ in 0..5 {
            s = step_regularized(&m, &s).unwrap();
            assert!(s.u.iter().all(|&v| v == 0.0));
        }
    }

    /// Constant data with matching bulk and boundary potentials reduces to the
    /// scalar ODE `u' = −β_ε(u) − π(u)`, integrated here by classical RK4 with
    /// a tiny step as the oracle.
    #[test]
    fn constant_state_follows_scalar_ode() {
        let mut c = config("double_well", Scheme::RegularizedNewton, 8);
        c.initial = ClosedForm::Constant { value: 0.3 };
        c.t_final = 0.2;
        let dt = c.dt;
        let m = Model::new(&c).unwrap();
        let g = c.bulk.graph.clone();
        let rhs = |u: f64| -(g.yosida(c.eps, u).unwrap() - u);
        let mut y = 0.3;
        let h = 1e-5;
        let mut s = SolverState::new(m.mesh(), m.initial_field());
        for _ in 0..m.steps {
            s = step_regularized(&m, &s).unwrap();
            for _ in 0..(dt / h).round() as usize {
                let k1 = rhs(y);
                let k2 = rhs(y + 0.5 * h * k1);
                let k3 = rhs(y + 0.5 * h * k2);
                let k4 = rhs(y + h * k3);
                y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            for &v in &s.u {
                assert!((v - y).abs() < 2.0 * dt, "{v} vs {y}");
            }
        }
        let spread = s.u.iter().fold(0.0_f64, |a, &v| a.max((v - s.u[0]).abs()));
        assert!(spread < 1e-12);
    }

    #[test]
    fn recovered_selection_is_the_yosida_value() {
        let c = config("double_obstacle", Scheme::RegularizedNewton, 12);
        let m = Model::new(&c).unwrap();
        let mut s = SolverState::new(m.mesh(), m.initial_field());
        for _ in 0..3 {
            s = step_regularized(&m, &s).unwrap();
            for (k, &v) in s.u.iter().enumerate() {
                let want = c.bulk.graph.yosida(c.eps, v).unwrap();
                assert!((s.xi[k] - want).abs() < 1e-9, "{} vs {want}", s.xi[k]);
            }
            let mesh = m.mesh();
            for (side_idx, side) in crate::mesh::Side::BOTH.iter().enumerate() {
                for (i, &v) in s.v(mesh, *side).iter().enumerate() {
                    let want = c.boundary.graph.boundary_yosida(c.eps, m.eta(), v).unwrap();
                    assert!((s.xi_gamma[side_idx * mesh.nx + i] - want).abs() < 1e-8);
                }
            }
        }
    }
}
