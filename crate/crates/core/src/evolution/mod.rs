//! Backward-Euler time stepping of the coupled bulk/boundary inclusion.
//!
//! Both schemes assemble the same lumped weak form. With `m_b = w_j` (bulk
//! weight per unit `hx`) and `m_g ∈ {0, 1}` (trace weight), node `k` solves
//!
//! ```text
//! m_b[(u − uⁿ)/dt + ξ + π(u) − f] + (K u)_k
//!   + m_g[(u − uⁿ)/dt − ν δxx u + ξ_Γ + π_Γ(u) − f_Γ] = 0
//! ```
//!
//! with `K` the stiffness of the discrete Dirichlet form. Inside the strip this
//! is the 5-point equation; on a trace row it is `hy/2` times the bulk equation
//! plus the dynamic boundary equation, since `(K u)_k = m_b(−Δ_h u)_k + (∂ₙu)_k`.
//! The step is therefore the minimizer of a discrete energy plus a quadratic
//! mass term, which gives exact energy dissipation.

mod energy;
mod mollify;
mod pcg;
mod prox;
mod regularized;
mod selection;
mod solve;

pub use energy::{energy, EnergyBreakdown};
pub use mollify::mollify_initial;
pub use pcg::{pcg, PcgFailure};
pub use prox::step_prox;
pub use regularized::step_regularized;
pub use selection::{recover_selection, Selection};
pub use solve::{solve, Record, Snapshot, Solver, Trajectory, TRAJECTORY_COLUMNS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compat::CompatibilityReport;
use crate::config::{ConfigError, Prepared, Scheme, SolverConfig};
use crate::graphs::GraphError;
use crate::mesh::{stiffness_diagonal, MeshError, Side, StripMesh};

/// Newton stops once every scaled residual `|R_k|/(m_b + m_g)` is below this.
pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("Newton did not converge at t = {t}: residual {residual:e} after {iterations} iterations")]
    Newton {
        t: f64,
        iterations: usize,
        residual: f64,
    },
    #[error("conjugate gradient stagnated at t = {t}: relative residual {residual:e} after {iterations} iterations")]
    Linear {
        t: f64,
        iterations: usize,
        residual: f64,
    },
    #[error("proximal sweeps stagnated at t = {t}: last change {change:e} after {sweeps} sweeps")]
    Prox { t: f64, sweeps: usize, change: f64 },
    #[error("nonfinite value produced at t = {t}")]
    NonFinite { t: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

impl SolverError {
    /// Time stamp of the failing step, when known.
    pub fn time(&self) -> Option<f64> {
        match *self {
            SolverError::Newton { t, .. }
            | SolverError::Linear { t, .. }
            | SolverError::Prox { t, .. }
            | SolverError::NonFinite { t } => Some(t),
            _ => None,
        }
    }
}

/// Solver state at one time level. The trace `v` is the pair of boundary rows of `u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    pub t: f64,
    pub step: usize,
    pub u: Vec<f64>,
    /// Bulk selection `ξ`, one value per node.
    pub xi: Vec<f64>,
    /// Boundary selection `ξ_Γ`: bottom row then top row.
    pub xi_gamma: Vec<f64>,
}

impl SolverState {
    pub fn new(mesh: &StripMesh, u: Vec<f64>) -> Self {
        SolverState {
            t: 0.0,
            step: 0,
            xi: vec![0.0; u.len()],
            xi_gamma: vec![0.0; 2 * mesh.nx],
            u,
        }
    }

    pub fn v<'a>(&'a self, mesh: &StripMesh, side: Side) -> &'a [f64] {
        mesh.trace(&self.u, side)
    }
}

/// A validated configuration with the per-node weights every stepper needs.
#[derive(Clone, Debug)]
pub struct Model {
    pub config: SolverConfig,
    pub steps: usize,
    pub compat: CompatibilityReport,
    /// Bulk weight `m_b` per node.
    pub mb: Vec<f64>,
    /// Trace weight `m_g` per node.
    pub mg: Vec<f64>,
    /// Stiffness diagonal per row.
    pub kdiag_row: Vec<f64>,
}

impl Model {
    pub fn new(config: &SolverConfig) -> Result<Self, ConfigError> {
        Ok(Self::from_prepared(config.validate()?))
    }

    pub fn from_prepared(p: Prepared) -> Self {
        let mesh = p.config.mesh;
        let mut mb = Vec::with_capacity(mesh.len());
        let mut mg = Vec::with_capacity(mesh.len());
        for j in 0..mesh.ny {
            for _ in 0..mesh.nx {
                mb.push(mesh.bulk_weight(j));
                mg.push(mesh.boundary_weight(j));
            }
        }
        let kdiag_row = (0..mesh.ny).map(|j| stiffness_diagonal(&mesh, j)).collect();
        Model {
            config: p.config,
            steps: p.steps,
            compat: p.compat,
            mb,
            mg,
            kdiag_row,
        }
    }

    pub fn mesh(&self) -> &StripMesh {
        &self.config.mesh
    }

    pub fn eta(&self) -> f64 {
        self.compat.eta
    }

    /// Time of step `n`.
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.config.dt
    }

    /// Initial field from the configured closed form.
    pub fn initial_field(&self) -> Vec<f64> {
        let cx = self.config.context();
        self.mesh()
            .sample(|x, y| self.config.initial.eval(x, y, 0.0, &cx))
    }

    /// Bulk forcing at every node and boundary forcing on the trace rows (zero inside).
    pub fn forcing(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let cx = self.config.context();
        let mesh = self.mesh();
        let f = mesh.sample(|x, y| self.config.forcing_bulk.eval(x, y, t, &cx));
        let mut fg = vec![0.0; mesh.len()];
        for side in Side::BOTH {
            let j = mesh.row(side);
            for i in 0..mesh.nx {
                fg[mesh.idx(i, j)] = self.config.forcing_boundary.eval(mesh.x(i), mesh.y(j), t, &cx);
            }
        }
        (f, fg)
    }

    /// Advance one step with the configured scheme.
    pub fn step(&self, state: &SolverState) -> Result<SolverState, SolverError> {
        match self.config.scheme {
            Scheme::RegularizedNewton => step_regularized(self, state),
            Scheme::ProxSplitting => step_prox(self, state),
        }
    }
}

#[inline]
pub(crate) fn wrap_left(nx: usize, i: usize) -> usize {
    if i == 0 {
        nx - 1
    } else {
        i - 1
    }
}

#[inline]
pub(crate) fn wrap_right(nx: usize, i: usize) -> usize {
    if i + 1 == nx {
        0
    } else {
        i + 1
    }
}

/// `out_k += m_g ν (2u_k − u_{k−1} − u_{k+1})/hx²` on the trace rows.
pub(crate) fn add_boundary_diffusion(mesh: &StripMesh, nu: f64, u: &[f64], out: &mut [f64]) {
    if nu == 0.0 {
        return;
    }
    let nx = mesh.nx;
    let c = nu / (mesh.hx() * mesh.hx());
    for side in Side::BOTH {
        let j = mesh.row(side);
        let base = j * nx;
        for i in 0..nx {
            let k = base + i;
            out[k] += c * (2.0 * u[k] - u[base + wrap_left(nx, i)] - u[base + wrap_right(nx, i)]);
        }
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::closed_form::{ClosedForm, Mode};
    use crate::potentials::catalog;

    pub fn config(potential: &str, scheme: Scheme, n: usize) -> SolverConfig {
        let p = catalog(potential).unwrap();
        SolverConfig {
            mesh: StripMesh::new(n, n, 1.0, 1.0).unwrap(),
            nu: 1.0,
            eps: 1e-3,
            dt: 1e-3,
            t_final: 0.02,
            scheme,
            bulk: p.clone(),
            boundary: p,
            forcing_bulk: ClosedForm::Zero,
            forcing_boundary: ClosedForm::Zero,
            initial: ClosedForm::Trig {
                offset: 0.1,
                modes: vec![
                    Mode {
                        amplitude: 0.6,
                        kx: 1,
                        phase: 0.3,
                        y_poly: vec![1.0, -1.0, 1.0],
                        decay: 0.0,
                    },
                    Mode {
                        amplitude: 0.3,
                        kx: 3,
                        phase: 0.0,
                        y_poly: vec![0.0, 1.0],
                        decay: 0.0,
                    },
                ],
            },
        }
    }
}
