//! Recovery of the selections `ξ ∈ β(u)` and `ξ_Γ ∈ β_Γ(v)` from a completed step.

use super::{add_boundary_diffusion, Model, SolverError};
use crate::config::Scheme;
use crate::mesh::{stiffness_apply, Side};

#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub xi: Vec<f64>,
    /// Bottom row then top row.
    pub xi_gamma: Vec<f64>,
    /// Largest distance from `(u, ξ)` and `(v, ξ_Γ)` to the graphs in use:
    /// the regularized graphs for the Newton scheme, the exact ones for the prox scheme.
    pub membership_violation: f64,
}

/// Recover the selections using the backward difference of the scheme itself.
///
/// At a trace node only the combination `ζ = m_b ξ + ξ_Γ` is determined by the
/// discrete equation. The regularized scheme splits it with `ξ = β_ε(u)`; the
/// prox scheme picks the admissible `ξ ∈ β(u)` closest to `β°(u)` such that
/// `ζ − m_b ξ ∈ β_Γ(u)`.
pub fn recover_selection(
    model: &Model,
    prev: &[f64],
    u: &[f64],
    t: f64,
) -> Result<Selection, SolverError> {
    let c = &model.config;
    let mesh = &c.mesh;
    let n = mesh.len();
    let (f, fg) = model.forcing(t);
    let mut ku = vec![0.0; n];
    stiffness_apply(mesh, u, &mut ku);
    add_boundary_diffusion(mesh, c.nu, u, &mut ku);
    let idt = 1.0 / c.dt;
    let regularized = c.scheme == Scheme::RegularizedNewton;

    let mut xi = vec![0.0; n];
    let mut xi_gamma = vec![0.0; 2 * mesh.nx];
    let mut worst = 0.0_f64;
    for k in 0..n {
        let (mb, mg) = (model.mb[k], model.mg[k]);
        let ut = (u[k] - prev[k]) * idt;
        let mut zeta = mb * (f[k] - ut - c.bulk.perturbation.eval(u[k])) - ku[k];
        if mg == 0.0 {
            xi[k] = zeta / mb;
            let d = if regularized {
                (xi[k] - c.bulk.graph.yosida(c.eps, u[k])?).abs()
            } else {
                c.bulk.graph.membership_violation(u[k], xi[k])
            };
            worst = worst.max(d);
            continue;
        }
        zeta += mg * (fg[k] - ut - c.boundary.perturbation.eval(u[k]));
        let j = k / mesh.nx;
        let i = k % mesh.nx;
        let slot = if j == mesh.row(Side::Bottom) { i } else { mesh.nx + i };
        let (xb, xg, d) = if regularized {
            let xb = c.bulk.graph.yosida(c.eps, u[k])?;
            let xg = zeta - mb * xb;
            let d = (xg - c.boundary.graph.boundary_yosida(c.eps, model.eta(), u[k])?).abs();
            (xb, xg, d)
        } else {
            let (a1, b1) = c.bulk.graph.values_at(u[k]).unwrap_or((f64::NAN, f64::NAN));
            let (a2, b2) = c.boundary.graph.values_at(u[k]).unwrap_or((f64::NAN, f64::NAN));
            let lo = a1.max((zeta - b2) / mb);
            let hi = b1.min((zeta - a2) / mb);
            let target = c.bulk.graph.minimal_section(u[k]).unwrap_or(0.0);
            let xb = if lo <= hi {
                target.max(lo).min(hi)
            } else {
                target.max(a1).min(b1)
            };
            let xg = zeta - mb * xb;
            let d = c
                .bulk
                .graph
                .membership_violation(u[k], xb)
                .max(c.boundary.graph.membership_violation(u[k], xg));
            (xb, xg, d)
        };
        xi[k] = xb;
        xi_gamma[slot] = xg;
        worst = worst.max(if d.is_nan() { f64::INFINITY } else { d });
    }
    Ok(Selection {
        xi,
        xi_gamma,
        membership_violation: worst,
    })
}
