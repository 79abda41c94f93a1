//! Solver configuration and its validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closed_form::{ClosedForm, EvalContext};
use crate::compat::{check_compatibility, default_samples, CompatError, CompatibilityReport};
use crate::mesh::{MeshError, StripMesh};
use crate::potentials::PotentialPair;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Backward Euler on the Yosida-regularized system, solved by damped Newton.
    RegularizedNewton,
    /// Backward Euler on the exact graphs, solved node by node with resolvents.
    ProxSplitting,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("compatibility check failed: {0}")]
    Compat(#[from] CompatError),
}

impl ConfigError {
    pub fn invalid(key: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

impl From<MeshError> for ConfigError {
    fn from(e: MeshError) -> Self {
        let key = match &e {
            MeshError::BadLength(name, _) => format!("mesh.{name}"),
            _ => "mesh".to_string(),
        };
        ConfigError::Invalid {
            key,
            reason: e.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mesh: StripMesh,
    pub nu: f64,
    pub eps: f64,
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub bulk: PotentialPair,
    pub boundary: PotentialPair,
    pub forcing_bulk: ClosedForm,
    pub forcing_boundary: ClosedForm,
    pub initial: ClosedForm,
}

/// A validated configuration with its derived quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct Prepared {
    pub config: SolverConfig,
    pub steps: usize,
    pub compat: CompatibilityReport,
}

impl SolverConfig {
    pub fn context(&self) -> EvalContext<'_> {
        EvalContext {
            lx: self.mesh.lx,
            ly: self.mesh.ly,
            nu: self.nu,
            bulk: &self.bulk,
            boundary: &self.boundary,
        }
    }

    /// Largest Lipschitz constant of the two perturbations.
    pub fn lipschitz(&self) -> f64 {
        self.bulk.lipschitz().max(self.boundary.lipschitz())
    }

    /// Number of steps, when `t_final` is an integer multiple of `dt`.
    pub fn steps(&self) -> Result<usize, ConfigError> {
        let n = (self.t_final / self.dt).round();
        if n < 1.0 || (n * self.dt - self.t_final).abs() > 1e-9 * self.t_final {
            return Err(ConfigError::invalid(
                "t_final",
                format!("must be a positive integer multiple of dt = {}", self.dt),
            ));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<Prepared, ConfigError> {
        let m = self.mesh;
        StripMesh::new(m.nx, m.ny, m.lx, m.ly)?;
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(ConfigError::invalid("nu", format!("must be >= 0, got {}", self.nu)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ConfigError::invalid("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(ConfigError::invalid(
                "t_final",
                format!("must be > 0, got {}", self.t_final),
            ));
        }
        if self.dt > self.t_final {
            return Err(ConfigError::invalid("dt", "must not exceed t_final"));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(ConfigError::invalid("eps", format!("must be >= 0, got {}", self.eps)));
        }
        if self.scheme == Scheme::RegularizedNewton && self.eps == 0.0 {
            return Err(ConfigError::invalid(
                "eps",
                "the regularized scheme needs eps > 0",
            ));
        }
        let lip = self.lipschitz();
        if self.dt * lip >= 1.0 {
            return Err(ConfigError::invalid(
                "dt",
                format!("dt·L = {} must be < 1 for a uniquely solvable step", self.dt * lip),
            ));
        }
        let steps = self.steps()?;
        let compat = check_compatibility(
            &self.bulk.graph,
            &self.boundary.graph,
            &default_samples(&self.boundary.graph),
        )?;
        Ok(Prepared {
            config: self.clone(),
            steps,
            compat,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::ScalarGraph;
    use crate::potentials::{catalog, Perturbation};

    pub(crate) fn base() -> SolverConfig {
        let p = catalog("double_well").unwrap();
        SolverConfig {
            mesh: StripMesh::new(8, 8, 1.0, 1.0).unwrap(),
            nu: 1.0,
            eps: 1e-3,
            dt: 1e-3,
            t_final: 0.1,
            scheme: Scheme::RegularizedNewton,
            bulk: p.clone(),
            boundary: p,
            forcing_bulk: ClosedForm::Zero,
            forcing_boundary: ClosedForm::Zero,
            initial: ClosedForm::Zero,
        }
    }

    fn key_of(e: ConfigError) -> String {
        match e {
            ConfigError::Invalid { key, .. } => key,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn accepts_base_and_counts_steps() {
        let p = base().validate().unwrap();
        assert_eq!(p.steps, 100);
        assert_eq!((p.compat.eta, p.compat.c_gamma), (1.0, 0.0));
    }

    #[test]
    fn rejects_bad_values_with_key() {
        let mut c = base();
        c.nu = -1.0;
        assert_eq!(key_of(c.validate().unwrap_err()), "nu");
        let mut c = base();
        c.dt = 0.0;
        assert_eq!(key_of(c.validate().unwrap_err()), "dt");
        let mut c = base();
        c.t_final = 0.10005;
        assert_eq!(key_of(c.validate().unwrap_err()), "t_final");
        let mut c = base();
        c.eps = 0.0;
        assert_eq!(key_of(c.validate().unwrap_err()), "eps");
        let mut c = base();
        c.mesh.ly = -1.0;
        assert_eq!(key_of(c.validate().unwrap_err()), "mesh.ly");
        let mut c = base();
        c.bulk.perturbation = Perturbation::Linear { slope: -2000.0 };
        assert_eq!(key_of(c.validate().unwrap_err()), "dt");
    }

    #[test]
    fn rejects_incompatible_graphs() {
        let mut c = base();
        c.bulk.graph = ScalarGraph::logarithmic();
        c.boundary = catalog("double_obstacle").unwrap();
        assert!(matches!(
            c.validate(),
            Err(ConfigError::Compat(CompatError::DomainInclusion { witness })) if witness == -1.0
        ));
    }
}
