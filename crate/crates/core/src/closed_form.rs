//! Named closed-form space-time functions used for initial data and forcing.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::potentials::PotentialPair;

/// Which equation a manufactured-solution term feeds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManufacturedRole {
    /// `u*` itself.
    #[default]
    Solution,
    /// `f = ∂ₜu* − Δu* + β°(u*) + π(u*)`.
    BulkForcing,
    /// `f_Γ = ∂ₙu* + ∂ₜv* − νΔ_Γv* + β_Γ°(v*) + π_Γ(v*)`.
    BoundaryForcing,
}

/// `amplitude · cos(2π·kx·x/lx + phase) · P(y/ly) · exp(−decay·t)` with
/// `P(s) = Σ y_poly[n]·sⁿ` (an empty list means `P ≡ 1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub amplitude: f64,
    #[serde(default)]
    pub kx: i32,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub y_poly: Vec<f64>,
    #[serde(default)]
    pub decay: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClosedForm {
    Zero,
    Constant {
        value: f64,
    },
    Trig {
        #[serde(default)]
        offset: f64,
        modes: Vec<Mode>,
    },
    /// `u*(x, y, t) = amplitude·e^{−t}·cos(2π(x − shift)/lx)·(1 + y²/ly² − y/ly)`.
    Manufactured {
        amplitude: f64,
        #[serde(default)]
        shift: f64,
        #[serde(default)]
        role: ManufacturedRole,
    },
    Sum {
        terms: Vec<ClosedForm>,
    },
}

/// Everything a closed form may depend on besides `(x, y, t)`.
#[derive(Clone, Copy, Debug)]
pub struct EvalContext<'a> {
    pub lx: f64,
    pub ly: f64,
    pub nu: f64,
    pub bulk: &'a PotentialPair,
    pub boundary: &'a PotentialPair,
}

fn poly(c: &[f64], s: f64) -> f64 {
    if c.is_empty() {
        return 1.0;
    }
    c.iter().rev().fold(0.0, |acc, &a| acc * s + a)
}

fn minimal(p: &PotentialPair, r: f64) -> f64 {
    p.graph.minimal_section(r).unwrap_or(f64::NAN)
}

impl ClosedForm {
    pub fn is_zero(&self) -> bool {
        match self {
            ClosedForm::Zero => true,
            ClosedForm::Constant { value } => *value == 0.0,
            ClosedForm::Trig { offset, modes } => {
                *offset == 0.0 && modes.iter().all(|m| m.amplitude == 0.0)
            }
            ClosedForm::Manufactured { .. } => false,
            ClosedForm::Sum { terms } => terms.iter().all(|t| t.is_zero()),
        }
    }

    pub fn eval(&self, x: f64, y: f64, t: f64, cx: &EvalContext) -> f64 {
        match self {
            ClosedForm::Zero => 0.0,
            ClosedForm::Constant { value } => *value,
            ClosedForm::Trig { offset, modes } => {
                offset
                    + modes
                        .iter()
                        .map(|m| {
                            m.amplitude
                                * (2.0 * PI * m.kx as f64 * x / cx.lx + m.phase).cos()
                                * poly(&m.y_poly, y / cx.ly)
                                * (-m.decay * t).exp()
                        })
                        .sum::<f64>()
            }
            ClosedForm::Manufactured {
                amplitude,
                shift,
                role,
            } => {
                let k = 2.0 * PI / cx.lx;
                let s = y / cx.ly;
                let g = 1.0 + s * s - s;
                let c = amplitude * (-t).exp() * (k * (x - shift)).cos();
                let u = c * g;
                match role {
                    ManufacturedRole::Solution => u,
                    ManufacturedRole::BulkForcing => {
                        let lap = c * (2.0 / (cx.ly * cx.ly) - k * k * g);
                        -u - lap + minimal(cx.bulk, u) + cx.bulk.perturbation.eval(u)
                    }
                    ManufacturedRole::BoundaryForcing => {
                        // v = c on both rows and ∂ₙu* = v/ly on both sides.
                        let v = c;
                        v / cx.ly - v + cx.nu * k * k * v
                            + minimal(cx.boundary, v)
                            + cx.boundary.perturbation.eval(v)
                    }
                }
            }
            ClosedForm::Sum { terms } => terms.iter().map(|f| f.eval(x, y, t, cx)).sum(),
        }
    }

    /// Manufactured solution with its two forcing terms.
    pub fn manufactured_triple(amplitude: f64, shift: f64) -> (Self, Self, Self) {
        let mk = |role| ClosedForm::Manufactured {
            amplitude,
            shift,
            role,
        };
        (
            mk(ManufacturedRole::Solution),
            mk(ManufacturedRole::BulkForcing),
            mk(ManufacturedRole::BoundaryForcing),
        )
    }

    /// `self + other`, flattening nested sums.
    pub fn plus(self, other: ClosedForm) -> ClosedForm {
        let mut terms = Vec::new();
        for f in [self, other] {
            match f {
                ClosedForm::Sum { terms: t } => terms.extend(t),
                ClosedForm::Zero => {}
                f => terms.push(f),
            }
        }
        match terms.len() {
            0 => ClosedForm::Zero,
            1 => terms.pop().unwrap(),
            _ => ClosedForm::Sum { terms },
        }
    }
}
