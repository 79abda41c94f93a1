//! Discrete free energy with the same quadrature the steppers assemble.

use serde::{Deserialize, Serialize};

use super::Model;
use crate::config::Scheme;
use crate::graphs::GraphError;
use crate::mesh::{boundary_dirichlet_form, dirichlet_form, Side};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub bulk_grad: f64,
    pub bulk_beta: f64,
    pub bulk_pi: f64,
    pub boundary_grad: f64,
    pub boundary_beta: f64,
    pub boundary_pi: f64,
    pub total: f64,
}

/// Energy of `u`. The regularized scheme uses the Moreau primitives `β̂_ε` and
/// `β̂_Γ,ε`; the prox scheme uses the exact primitives.
pub fn energy(model: &Model, u: &[f64]) -> Result<EnergyBreakdown, GraphError> {
    let c = &model.config;
    let mesh = &c.mesh;
    let hx = mesh.hx();
    let regularized = c.scheme == Scheme::RegularizedNewton;
    let beta_hat = |r: f64| -> Result<f64, GraphError> {
        if regularized {
            c.bulk.graph.moreau_primitive(c.eps, r)
        } else {
            Ok(c.bulk.graph.primitive(r))
        }
    };
    let beta_gamma_hat = |r: f64| -> Result<f64, GraphError> {
        if regularized {
            c.boundary.graph.moreau_primitive(c.eps * model.eta(), r)
        } else {
            Ok(c.boundary.graph.primitive(r))
        }
    };

    let (mut bulk_beta, mut bulk_pi) = (0.0, 0.0);
    for j in 0..mesh.ny {
        let (mut sb, mut sp) = (0.0, 0.0);
        for i in 0..mesh.nx {
            let r = u[mesh.idx(i, j)];
            sb += beta_hat(r)?;
            sp += c.bulk.perturbation.primitive(r);
        }
        bulk_beta += mesh.bulk_weight(j) * sb;
        bulk_pi += mesh.bulk_weight(j) * sp;
    }
    let (mut boundary_beta, mut boundary_pi) = (0.0, 0.0);
    for side in Side::BOTH {
        for &r in mesh.trace(u, side) {
            boundary_beta += beta_gamma_hat(r)?;
            boundary_pi += c.boundary.perturbation.primitive(r);
        }
    }
    let mut e = EnergyBreakdown {
        bulk_grad: 0.5 * dirichlet_form(mesh, u, u),
        bulk_beta: hx * bulk_beta,
        bulk_pi: hx * bulk_pi,
        boundary_grad: 0.5 * c.nu * boundary_dirichlet_form(mesh, u, u),
        boundary_beta: hx * boundary_beta,
        boundary_pi: hx * boundary_pi,
        total: 0.0,
    };
    e.total = e.bulk_grad + e.bulk_beta + e.bulk_pi + e.boundary_grad + e.boundary_beta + e.boundary_pi;
    Ok(e)
}
