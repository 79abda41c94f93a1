//! Elliptic smoothing of initial data for the vanishing boundary-diffusion limit:
//! `u − νΔu = u₀` in the bulk with `∂ₙu + β_Γ(v) ∋ 0` on the trace rows.

use super::prox::NodeProblem;
use super::SolverError;
use crate::graphs::ScalarGraph;
use crate::mesh::StripMesh;
use crate::potentials::Perturbation;

/// Solve the discrete weak form `⟨u − u₀, z⟩ + ν a(u, z) + ν⟨ρ, z⟩_Γ = 0`,
/// `ρ ∈ β_Γ(v)`, with the exact graph handled by node resolvents.
pub fn mollify_initial(
    mesh: &StripMesh,
    u0: &[f64],
    nu: f64,
    beta_gamma: &ScalarGraph,
) -> Result<Vec<f64>, SolverError> {
    mesh.check(u0)?;
    if !(nu > 0.0) {
        return Err(crate::config::ConfigError::invalid("nu", "mollification needs nu > 0").into());
    }
    let n = mesh.len();
    let mut mb = Vec::with_capacity(n);
    let mut mg = Vec::with_capacity(n);
    for j in 0..mesh.ny {
        for _ in 0..mesh.nx {
            mb.push(mesh.bulk_weight(j));
            mg.push(mesh.boundary_weight(j));
        }
    }
    let rhs: Vec<f64> = mb.iter().zip(u0).map(|(m, u)| m * u).collect();
    let zero = Perturbation::Zero;
    let problem = NodeProblem {
        mesh,
        mass: mb.clone(),
        rhs,
        stiff: nu,
        nu: 0.0,
        bulk: None,
        boundary: (beta_gamma, &zero),
        mb: &mb,
        mg: &mg,
        graph_weight_bulk: 0.0,
        graph_weight_boundary: nu,
    };
    // Start from the projection of u₀ onto the closed boundary domain.
    let d = beta_gamma.domain();
    let mut u: Vec<f64> = u0
        .iter()
        .zip(&mg)
        .map(|(&v, &g)| {
            if g == 0.0 || d.contains(v) {
                v
            } else {
                beta_gamma.resolvent(1.0, v).unwrap_or(v)
            }
        })
        .collect();
    problem.relax(&mut u, 0.0)?;
    Ok(u)
}
