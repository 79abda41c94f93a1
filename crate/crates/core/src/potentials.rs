//! Potential catalog: a maximal monotone graph `β = ∂β̂` plus a Lipschitz
//! perturbation `π = Π'`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphs::ScalarGraph;

/// Lipschitz perturbation `π`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    Zero,
    /// `π(r) = slope·r`
    Linear { slope: f64 },
    /// `π(r) = amplitude·sin(frequency·r)`
    Sine { amplitude: f64, frequency: f64 },
}

impl Perturbation {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Perturbation::Zero => 0.0,
            Perturbation::Linear { slope } => slope * r,
            Perturbation::Sine {
                amplitude,
                frequency,
            } => amplitude * (frequency * r).sin(),
        }
    }

    pub fn slope(&self, r: f64) -> f64 {
        match *self {
            Perturbation::Zero => 0.0,
            Perturbation::Linear { slope } => slope,
            Perturbation::Sine {
                amplitude,
                frequency,
            } => amplitude * frequency * (frequency * r).cos(),
        }
    }

    /// Antiderivative `Π` with `Π(0) = 0`.
    pub fn primitive(&self, r: f64) -> f64 {
        match *self {
            Perturbation::Zero => 0.0,
            Perturbation::Linear { slope } => 0.5 * slope * r * r,
            Perturbation::Sine {
                amplitude,
                frequency,
            } => {
                if frequency == 0.0 {
                    0.0
                } else {
                    amplitude * (1.0 - (frequency * r).cos()) / frequency
                }
            }
        }
    }

    /// Global Lipschitz constant `L`.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            Perturbation::Zero => 0.0,
            Perturbation::Linear { slope } => slope.abs(),
            Perturbation::Sine {
                amplitude,
                frequency,
            } => (amplitude * frequency).abs(),
        }
    }

    /// Linear part, when `π` is linear.
    pub fn as_linear(&self) -> Option<f64> {
        match *self {
            Perturbation::Zero => Some(0.0),
            Perturbation::Linear { slope } => Some(slope),
            Perturbation::Sine { .. } => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("unknown potential `{0}` (expected double_well, double_obstacle or linear_test)")]
    Unknown(String),
    #[error("potential graph must contain the origin: 0 ∉ β(0)")]
    OriginNotInGraph,
}

/// `W' = β + π`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialPair {
    pub name: String,
    pub graph: ScalarGraph,
    pub perturbation: Perturbation,
}

impl PotentialPair {
    pub fn new(
        name: impl Into<String>,
        graph: ScalarGraph,
        perturbation: Perturbation,
    ) -> Result<Self, PotentialError> {
        if !graph.contains_origin() {
            return Err(PotentialError::OriginNotInGraph);
        }
        Ok(PotentialPair {
            name: name.into(),
            graph,
            perturbation,
        })
    }

    pub fn lipschitz(&self) -> f64 {
        self.perturbation.lipschitz()
    }

    /// `β̂(r) + Π(r)`.
    pub fn energy_density(&self, r: f64) -> f64 {
        self.graph.primitive(r) + self.perturbation.primitive(r)
    }
}

/// Built-in potentials by name.
pub fn catalog(name: &str) -> Result<PotentialPair, PotentialError> {
    let minus_identity = Perturbation::Linear { slope: -1.0 };
    match name {
        "double_well" => PotentialPair::new(name, ScalarGraph::cubic(), minus_identity),
        "double_obstacle" => {
            PotentialPair::new(name, ScalarGraph::indicator(-1.0, 1.0), minus_identity)
        }
        "linear_test" => PotentialPair::new(name, ScalarGraph::linear(), Perturbation::Zero),
        other => Err(PotentialError::Unknown(other.to_string())),
    }
}

pub const CATALOG: [&str; 3] = ["double_well", "double_obstacle", "linear_test"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_values() {
        let dw = catalog("double_well").unwrap();
        let (lo, _) = dw.graph.values_at(1.0).unwrap();
        assert_eq!(lo + dw.perturbation.eval(1.0), 0.0);
        assert_eq!(dw.graph.primitive(2.0), 4.0);
        assert_eq!(dw.lipschitz(), 1.0);
        assert_eq!(dw.perturbation.primitive(1.0), -0.5);

        let dob = catalog("double_obstacle").unwrap();
        assert_eq!(dob.graph.minimal_section(0.0).unwrap(), 0.0);
        assert_eq!(dob.perturbation.eval(0.0), 0.0);

        let lin = catalog("linear_test").unwrap();
        assert_eq!(lin.lipschitz(), 0.0);
        assert!(matches!(catalog("quartic"), Err(PotentialError::Unknown(_))));
    }

    #[test]
    fn sine_perturbation_primitive_and_slope() {
        let p = Perturbation::Sine {
            amplitude: 0.5,
            frequency: 3.0,
        };
        let h = 1e-6;
        for r in [-1.0, 0.2, 2.5] {
            let fd = (p.primitive(r + h) - p.primitive(r - h)) / (2.0 * h);
            assert!((fd - p.eval(r)).abs() < 1e-8);
            let fd = (p.eval(r + h) - p.eval(r - h)) / (2.0 * h);
            assert!((fd - p.slope(r)).abs() < 1e-8);
        }
        assert_eq!(p.lipschitz(), 1.5);
        assert_eq!(p.primitive(0.0), 0.0);
    }

    #[test]
    fn rejects_graph_missing_origin() {
        let g = ScalarGraph::linear().shifted(1.0);
        assert_eq!(
            PotentialPair::new("x", g, Perturbation::Zero),
            Err(PotentialError::OriginNotInGraph)
        );
    }
}
