//! Sampled certification of the bulk/boundary compatibility condition
//! `D(β_Γ) ⊆ D(β)` and `|β°(r)| ≤ η|β_Γ°(r)| + C_Γ`, together with the
//! regularized transfer `|β_ε(r)| ≤ η|β_Γ,ε(r)| + C_Γ`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphs::{GraphError, ScalarGraph};

/// η candidates are `2^k` for `k = 0..=ETA_MAX_EXP`.
pub const ETA_MAX_EXP: i32 = 10;
/// `C_Γ` is rounded up to this grid.
pub const C_GRID: f64 = 1e-3;
/// Uniform sample count on `D(β_Γ) ∩ [−SAMPLE_BOX, SAMPLE_BOX]`.
pub const DEFAULT_SAMPLES: usize = 2001;
pub const SAMPLE_BOX: f64 = 5.0;
/// ε grid and `r` sample size for the regularized inequality.
pub const EPS_GRID: [f64; 3] = [1e-1, 1e-2, 1e-3];
pub const EPS_SAMPLES: usize = 1001;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompatError {
    #[error("domain inclusion D(beta_gamma) ⊆ D(beta) fails at r = {witness}")]
    DomainInclusion { witness: f64 },
    #[error("sample r = {0} lies outside D(beta_gamma)")]
    SampleOutside(f64),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub eta: f64,
    pub c_gamma: f64,
    pub verified_on: Vec<f64>,
    /// Largest `|β_ε| − η|β_Γ,ε| − C_Γ` over the ε grid; nonpositive when the transfer holds.
    pub eps_margin: f64,
    pub holds: bool,
}

/// Uniform samples on `D(β_Γ)` clipped to the sample box, plus closed finite endpoints.
pub fn default_samples(beta_gamma: &ScalarGraph) -> Vec<f64> {
    let d = beta_gamma.domain();
    let a = d.lo.value.max(-SAMPLE_BOX);
    let b = d.hi.value.min(SAMPLE_BOX);
    let n = DEFAULT_SAMPLES;
    let mut out: Vec<f64> = (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .filter(|&r| d.contains(r))
        .collect();
    for e in [d.lo, d.hi] {
        if e.closed && e.value.is_finite() && !out.contains(&e.value) {
            out.push(e.value);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Uniform `r` grid on `[−SAMPLE_BOX, SAMPLE_BOX]` for the regularized check.
pub fn eps_samples() -> Vec<f64> {
    (0..EPS_SAMPLES)
        .map(|k| -SAMPLE_BOX + 2.0 * SAMPLE_BOX * k as f64 / (EPS_SAMPLES - 1) as f64)
        .collect()
}

fn round_up(c: f64) -> f64 {
    let k = (c / C_GRID - 1e-9).ceil();
    (k.max(0.0)) * C_GRID
}

/// Smallest certified `(C_Γ, η)` in lexicographic order on the declared grid.
pub fn check_compatibility(
    beta: &ScalarGraph,
    beta_gamma: &ScalarGraph,
    samples: &[f64],
) -> Result<CompatibilityReport, CompatError> {
    if let Some(witness) = beta.domain().inclusion_witness(&beta_gamma.domain()) {
        return Err(CompatError::DomainInclusion { witness });
    }
    let mut pairs = Vec::with_capacity(samples.len());
    for &r in samples {
        let g = beta_gamma
            .minimal_section(r)
            .map_err(|_| CompatError::SampleOutside(r))?;
        let b = beta.minimal_section(r)?;
        pairs.push((b.abs(), g.abs()));
    }
    let mut best: Option<(f64, f64)> = None;
    for k in 0..=ETA_MAX_EXP {
        let eta = 2f64.powi(k);
        let c = pairs
            .iter()
            .map(|&(b, g)| (b - eta * g).max(0.0))
            .fold(0.0, f64::max);
        let c = round_up(c);
        if best.is_none_or(|(bc, _)| c < bc) {
            best = Some((c, eta));
        }
    }
    let (c_gamma, eta) = best.expect("eta grid is nonempty");

    let mut margin = f64::NEG_INFINITY;
    let mut holds = true;
    for &eps in &EPS_GRID {
        for r in eps_samples() {
            let lhs = beta.yosida(eps, r)?.abs();
            let rhs = eta * beta_gamma.boundary_yosida(eps, eta, r)?.abs() + c_gamma;
            margin = margin.max(lhs - rhs);
            if lhs > rhs + 1e-12 * (1.0 + rhs) {
                holds = false;
            }
        }
    }
    Ok(CompatibilityReport {
        eta,
        c_gamma,
        verified_on: samples.to_vec(),
        eps_margin: margin,
        holds,
    })
}
