//! Sampled property suite for a single graph: the checks run by `graph-check`
//! and by the acceptance tests.

use serde::{Deserialize, Serialize};

use crate::graphs::{GraphError, ScalarGraph};
use crate::quadrature::{adaptive_simpson, QuadratureError};

pub const LAMBDAS: [f64; 3] = [1e-3, 1e-1, 1.0];
pub const EPSILONS: [f64; 3] = [1e-1, 1e-2, 1e-3];
pub const SCALES: [f64; 3] = [0.5, 2.0, 10.0];
pub const SHIFTS: [f64; 2] = [-1.0, 0.5];
pub const IDENTITY_TOL: f64 = 1e-12;
pub const QUADRATURE_TOL: f64 = 1e-10;

/// Outcome of one property over its whole sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    /// Largest violation measured (≤ 0 or below `tolerance` when the check holds).
    pub worst: f64,
    pub tolerance: f64,
    pub holds: bool,
}

impl PropertyCheck {
    fn new(name: &str, worst: f64, tolerance: f64) -> Self {
        PropertyCheck {
            name: name.to_string(),
            worst,
            tolerance,
            holds: worst <= tolerance,
        }
    }
}

/// `n` uniform points on `[−5, 5]`.
pub fn uniform_samples(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| -5.0 + 10.0 * k as f64 / (n - 1) as f64)
        .collect()
}

/// `∫₀^r β_ε` by adaptive Simpson, split at the kinks of `β_ε`.
pub fn moreau_primitive_quadrature(
    g: &ScalarGraph,
    eps: f64,
    r: f64,
    tol: f64,
) -> Result<f64, QuadratureError> {
    let (a, b, sign) = if r >= 0.0 { (0.0, r, 1.0) } else { (r, 0.0, -1.0) };
    // Kinks of β_ε sit at r = x + ε·y for every corner (x, y) of the graph.
    let mut cuts = vec![a, b];
    for x in g.breakpoints() {
        if let Some((lo, hi)) = g.values_at(x) {
            for y in [lo, hi] {
                if y.is_finite() {
                    let k = x + eps * y;
                    if k > a && k < b {
                        cuts.push(k);
                    }
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    let f = |s: f64| g.yosida(eps, s).unwrap_or(f64::NAN);
    let n = cuts.len() - 1;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += adaptive_simpson(&f, w[0], w[1], tol / n as f64)?;
    }
    Ok(sign * total)
}

/// Run every sampled property on `g`.
pub fn graph_property_suite(g: &ScalarGraph, samples: &[f64]) -> Result<Vec<PropertyCheck>, GraphError> {
    let mut out = Vec::new();
    let dom = g.domain();

    let mut worst = f64::NEG_INFINITY;
    for &lambda in &LAMBDAS {
        let j: Vec<f64> = samples
            .iter()
            .map(|&r| g.resolvent(lambda, r))
            .collect::<Result<_, _>>()?;
        for k in 1..samples.len() {
            worst = worst.max((j[k] - j[k - 1]).abs() - (samples[k] - samples[k - 1]).abs());
        }
    }
    out.push(PropertyCheck::new("resolvent_nonexpansive", worst, 1e-12));

    let mut lip = f64::NEG_INFINITY;
    let mut member = f64::NEG_INFINITY;
    let mut dom_yosida = f64::NEG_INFINITY;
    let mut prim_lower = f64::NEG_INFINITY;
    let mut prim_upper = f64::NEG_INFINITY;
    let mut prim_quad = f64::NEG_INFINITY;
    for &eps in &EPSILONS {
        let y: Vec<f64> = samples
            .iter()
            .map(|&r| g.yosida(eps, r))
            .collect::<Result<_, _>>()?;
        for k in 1..samples.len() {
            let d = (samples[k] - samples[k - 1]).abs() / eps;
            lip = lip.max((y[k] - y[k - 1]).abs() - d * (1.0 + 1e-12));
        }
        for (&r, &yr) in samples.iter().zip(&y) {
            let res = g.resolve(eps, r)?;
            member = member.max(g.membership_violation(res.point, yr));
            if dom.contains(r) {
                let m = g.minimal_section(r)?;
                dom_yosida = dom_yosida.max(yr.abs() - m.abs());
            }
            let p = g.moreau_primitive(eps, r)?;
            prim_lower = prim_lower.max(-p);
            let cap = g.primitive(r);
            if cap.is_finite() {
                prim_upper = prim_upper.max(p - cap);
            }
            match moreau_primitive_quadrature(g, eps, r, QUADRATURE_TOL) {
                Ok(q) => prim_quad = prim_quad.max((q - p).abs() / (1.0 + p.abs())),
                Err(_) => prim_quad = f64::INFINITY,
            }
        }
    }
    out.push(PropertyCheck::new("yosida_lipschitz", lip, 1e-12));
    out.push(PropertyCheck::new("yosida_membership", member, 1e-10));
    out.push(PropertyCheck::new("yosida_dominated_by_minimal_section", dom_yosida, QUADRATURE_TOL));
    out.push(PropertyCheck::new("moreau_primitive_nonnegative", prim_lower, QUADRATURE_TOL));
    out.push(PropertyCheck::new("moreau_primitive_below_primitive", prim_upper, QUADRATURE_TOL));
    out.push(PropertyCheck::new("moreau_primitive_matches_quadrature", prim_quad, 2.0 * QUADRATURE_TOL));

    let mut scale_err = 0.0_f64;
    let mut shift_err = 0.0_f64;
    for &eps in &EPSILONS {
        for &b in &SCALES {
            let gb = g.scaled(b)?;
            for &r in samples {
                let lhs = gb.yosida(eps, r)?;
                let rhs = b * g.yosida(b * eps, r)?;
                scale_err = scale_err.max((lhs - rhs).abs());
            }
        }
        for &a in &SHIFTS {
            let ga = g.shifted(a);
            for &r in samples {
                let lhs = ga.yosida(eps, r)?;
                let rhs = g.yosida(eps, r - eps * a)? + a;
                shift_err = shift_err.max((lhs - rhs).abs());
            }
        }
    }
    out.push(PropertyCheck::new("scaling_identity", scale_err, IDENTITY_TOL));
    out.push(PropertyCheck::new("shift_identity", shift_err, IDENTITY_TOL));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_route_matches_hand_integral() {
        let v = moreau_primitive_quadrature(&ScalarGraph::linear(), 1.0, 2.0, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        // indicator at ε: ∫₁^{1.5} (s − 1)/ε ds = 0.125/ε
        let ind = ScalarGraph::indicator(-1.0, 1.0);
        let v = moreau_primitive_quadrature(&ind, 0.1, -1.5, 1e-12).unwrap();
        assert!((v - 1.25).abs() < 1e-11);
    }

    #[test]
    fn catalog_graphs_pass_the_suite() {
        let s = uniform_samples(201);
        for g in [
            ScalarGraph::linear(),
            ScalarGraph::cubic(),
            ScalarGraph::indicator(-1.0, 1.0),
            ScalarGraph::logarithmic(),
        ] {
            for c in graph_property_suite(&g, &s).unwrap() {
                assert!(c.holds, "{g:?}: {c:?}");
            }
        }
    }
}
