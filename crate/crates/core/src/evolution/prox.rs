//! Exact-graph backward-Euler step by nonlinear successive over-relaxation.
//!
//! Each node update solves the scalar inclusion of the lumped weak form with
//! the neighbours frozen, which is a resolvent of the graphs. The sweep is the
//! coordinate-descent method for the strongly convex step functional, so the
//! fixed point is the fully implicit solution and the graph constraints are met
//! exactly at every node (for the double obstacle, `|u| ≤ 1` to the bit).

use super::{recover_selection, wrap_left, wrap_right, Model, SolverError, SolverState};
use crate::graphs::{solve_inclusion, GraphError, ScalarGraph};
use crate::mesh::StripMesh;
use crate::potentials::Perturbation;

pub const SWEEP_TOL: f64 = 4e-15;
pub const MAX_SWEEPS: usize = 200_000;

/// Node-local data of the relaxation: `b ∈ c·u + p(u) + w_b β(u) + w_g β_Γ(u)`.
pub(crate) struct NodeProblem<'a> {
    pub mesh: &'a StripMesh,
    /// Weight of `u` in the node equation (mass/dt or mollifier mass), per node.
    pub mass: Vec<f64>,
    /// Constant part of `b`, per node.
    pub rhs: Vec<f64>,
    /// Multiplier of the stiffness and the boundary diffusion.
    pub stiff: f64,
    pub nu: f64,
    pub bulk: Option<(&'a ScalarGraph, &'a Perturbation)>,
    pub boundary: (&'a ScalarGraph, &'a Perturbation),
    pub mb: &'a [f64],
    pub mg: &'a [f64],
    /// Bulk weight multiplying `β` (1 for the evolution, 0 for the mollifier).
    pub graph_weight_bulk: f64,
    /// Boundary weight multiplying `β_Γ`.
    pub graph_weight_boundary: f64,
}

impl NodeProblem<'_> {
    fn linear_slopes(&self) -> (Option<f64>, Option<f64>) {
        (
            self.bulk.map_or(Some(0.0), |(_, p)| p.as_linear()),
            self.boundary.1.as_linear(),
        )
    }

    /// Sum of the neighbour couplings on row `j`; it equals the diagonal of the
    /// stiffness plus boundary diffusion because both annihilate constants.
    fn coupling(&self, j: usize, k: usize) -> f64 {
        let mesh = self.mesh;
        let hx2 = mesh.hx() * mesh.hx();
        let wj = mesh.bulk_weight(j);
        let ny_nb = if mesh.is_boundary_row(j) { 1.0 } else { 2.0 };
        self.stiff * (2.0 * wj / hx2 + ny_nb / mesh.hy()) + self.mg[k] * self.nu * 2.0 / hx2
    }

    /// Relaxation factor from the Jacobi contraction of the linear part.
    fn omega(&self) -> f64 {
        let mesh = self.mesh;
        let mut rho = 0.0_f64;
        let (lb, lg) = self.linear_slopes();
        for j in 0..mesh.ny {
            let k = mesh.idx(0, j);
            let off = self.coupling(j, k);
            let mut diag = self.mass[k] + off;
            if let Some(s) = lb {
                diag += self.graph_weight_bulk * self.mb[k] * s.min(0.0);
            }
            if let Some(s) = lg {
                diag += self.graph_weight_boundary * self.mg[k] * s.min(0.0);
            }
            if diag > 0.0 {
                rho = rho.max(off / diag);
            }
        }
        let rho = rho.min(1.0 - 1e-12);
        2.0 / (1.0 + (1.0 - rho * rho).sqrt())
    }

    fn solve_node(&self, k: usize, b: f64, c_lin: f64) -> Result<f64, GraphError> {
        let wb = self.graph_weight_bulk * self.mb[k];
        let wg = self.graph_weight_boundary * self.mg[k];
        let (lb, lg) = self.linear_slopes();
        let bulk_graph = self.bulk.map(|(g, _)| g);
        match (lb, lg) {
            (Some(sb), Some(sg)) => {
                let c = c_lin + wb * sb + wg * sg;
                if wg == 0.0 {
                    match bulk_graph {
                        Some(g) if wb > 0.0 => g.resolvent(wb / c, b / c),
                        _ => Ok(b / c),
                    }
                } else if wb == 0.0 || bulk_graph == Some(self.boundary.0) {
                    self.boundary.0.resolvent((wb + wg) / c, b / c)
                } else {
                    let g = bulk_graph.expect("positive bulk weight implies a bulk graph");
                    solve_inclusion(b, c, &|_| 0.0, &[(wb, g), (wg, self.boundary.0)])
                }
            }
            _ => {
                let pb = self.bulk.map(|(_, p)| *p);
                let pg = *self.boundary.1;
                let p = move |u: f64| {
                    pb.map_or(0.0, |p| wb * p.eval(u)) + if wg > 0.0 { wg * pg.eval(u) } else { 0.0 }
                };
                let mut terms: Vec<(f64, &ScalarGraph)> = Vec::new();
                if let Some(g) = bulk_graph {
                    if wb > 0.0 {
                        terms.push((wb, g));
                    }
                }
                if wg > 0.0 {
                    terms.push((wg, self.boundary.0));
                }
                solve_inclusion(b, c_lin, &p, &terms)
            }
        }
    }

    fn admissible(&self, k: usize, u: f64) -> bool {
        let in_bulk = match self.bulk {
            Some((g, _)) if self.graph_weight_bulk * self.mb[k] > 0.0 => g.domain().contains(u),
            _ => true,
        };
        let in_boundary = self.graph_weight_boundary * self.mg[k] == 0.0
            || self.boundary.0.domain().contains(u);
        in_bulk && in_boundary
    }

    /// Relax `u` in place until the sweep change falls below tolerance.
    pub fn relax(&self, u: &mut [f64], t: f64) -> Result<usize, SolverError> {
        let mesh = self.mesh;
        let (nx, ny) = (mesh.nx, mesh.ny);
        let hx2 = mesh.hx() * mesh.hx();
        let ihy = 1.0 / mesh.hy();
        let omega = self.omega();
        let kdiag: Vec<f64> = (0..ny).map(|j| self.coupling(j, mesh.idx(0, j))).collect();
        let mut last = f64::INFINITY;
        for sweep in 1..=MAX_SWEEPS {
            let mut change = 0.0_f64;
            let mut scale = 1.0_f64;
            for j in 0..ny {
                let wj = self.stiff * mesh.bulk_weight(j) / hx2;
                for i in 0..nx {
                    let k = mesh.idx(i, j);
                    let (l, r) = (mesh.idx(wrap_left(nx, i), j), mesh.idx(wrap_right(nx, i), j));
                    let mut b = self.rhs[k] + wj * (u[l] + u[r]);
                    if j > 0 {
                        b += self.stiff * ihy * u[k - nx];
                    }
                    if j + 1 < ny {
                        b += self.stiff * ihy * u[k + nx];
                    }
                    if self.mg[k] != 0.0 && self.nu != 0.0 {
                        b += self.mg[k] * self.nu / hx2 * (u[l] + u[r]);
                    }
                    let c_lin = self.mass[k] + kdiag[j];
                    let gs = self.solve_node(k, b, c_lin)?;
                    let mut next = u[k] + omega * (gs - u[k]);
                    if !self.admissible(k, next) {
                        next = gs;
                    }
                    change = change.max((next - u[k]).abs());
                    scale = scale.max(next.abs());
                    u[k] = next;
                }
            }
            if !change.is_finite() {
                return Err(SolverError::NonFinite { t });
            }
            if change <= SWEEP_TOL * scale {
                return Ok(sweep);
            }
            last = change;
        }
        Err(SolverError::Prox {
            t,
            sweeps: MAX_SWEEPS,
            change: last,
        })
    }
}

/// One fully implicit backward-Euler step on the exact graphs.
pub fn step_prox(model: &Model, state: &SolverState) -> Result<SolverState, SolverError> {
    let c = &model.config;
    let mesh = &c.mesh;
    let t = model.time(state.step + 1);
    let (f, fg) = model.forcing(t);
    let idt = 1.0 / c.dt;
    let n = mesh.len();
    let mut mass = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    for k in 0..n {
        let m = model.mb[k] + model.mg[k];
        mass.push(m * idt);
        rhs.push(m * idt * state.u[k] + model.mb[k] * f[k] + model.mg[k] * fg[k]);
    }
    let problem = NodeProblem {
        mesh,
        mass,
        rhs,
        stiff: 1.0,
        nu: c.nu,
        bulk: Some((&c.bulk.graph, &c.bulk.perturbation)),
        boundary: (&c.boundary.graph, &c.boundary.perturbation),
        mb: &model.mb,
        mg: &model.mg,
        graph_weight_bulk: 1.0,
        graph_weight_boundary: 1.0,
    };
    let mut u = state.u.clone();
    problem.relax(&mut u, t)?;
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
    use super::super::step_regularized;
    use super::*;
    use crate::closed_form::ClosedForm;
    use crate::config::Scheme;

    #[test]
    fn zero_data_gives_zero() {
        let mut c = config("double_obstacle", Scheme::ProxSplitting, 8);
        c.initial = ClosedForm::Zero;
        let m = Model::new(&c).unwrap();
        let s = step_prox(&m, &SolverState::new(m.mesh(), m.initial_field())).unwrap();
        assert!(s.u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn obstacle_is_respected_exactly() {
        let mut c = config("double_obstacle", Scheme::ProxSplitting, 12);
        c.forcing_bulk = ClosedForm::Constant { value: 400.0 };
        c.forcing_boundary = ClosedForm::Constant { value: -400.0 };
        let m = Model::new(&c).unwrap();
        let mut s = SolverState::new(m.mesh(), m.initial_field());
        let mut touched = false;
        for _ in 0..10 {
            s = step_prox(&m, &s).unwrap();
            for (k, &v) in s.u.iter().enumerate() {
                assert!(v.abs() <= 1.0);
                if m.mg[k] == 0.0 && v == 1.0 {
                    touched = true;
                    assert!(s.xi[k] >= -1e-8);
                }
            }
        }
        assert!(touched);
    }

    #[test]
    fn agrees_with_regularized_on_linear_graph() {
        let mut c = config("linear_test", Scheme::ProxSplitting, 12);
        c.eps = 1e-8;
        let m = Model::new(&c).unwrap();
        let s0 = SolverState::new(m.mesh(), m.initial_field());
        let a = step_prox(&m, &s0).unwrap();
        let mut cr = c.clone();
        cr.scheme = Scheme::RegularizedNewton;
        let mr = Model::new(&cr).unwrap();
        let b = step_regularized(&mr, &s0).unwrap();
        let scale = b.u.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        for (x, y) in a.u.iter().zip(&b.u) {
            assert!((x - y).abs() <= 1e-6 * scale);
        }
    }

    #[test]
    fn mixed_graphs_use_the_generic_node_solver() {
        let mut c = config("double_well", Scheme::ProxSplitting, 8);
        c.boundary = crate::potentials::catalog("double_obstacle").unwrap();
        c.boundary.perturbation = Perturbation::Sine {
            amplitude: 0.5,
            frequency: 2.0,
        };
        let m = Model::new(&c).unwrap();
        let mut s = SolverState::new(m.mesh(), m.initial_field());
        for _ in 0..3 {
            s = step_prox(&m, &s).unwrap();
        }
        let sel = recover_selection(&m, &SolverState::new(m.mesh(), m.initial_field()).u, &s.u, s.t);
        assert!(sel.is_ok());
        for side in crate::mesh::Side::BOTH {
            assert!(s.v(m.mesh(), side).iter().all(|v| v.abs() <= 1.0));
        }
    }
}
