//! Run configuration files: TOML parsing, defaults, validation and emission.
//!
//! A minimal file only names the potential:
//!
//! ```toml
//! potential = "double_well"
//! ```
//!
//! Every other key falls back to the defaults listed on [`FileConfig`]. The
//! resolved configuration is written back with every key explicit, and parsing
//! that output reproduces the same [`Bundle`].

use std::path::Path;

use ac_dynbc::closed_form::ClosedForm;
use ac_dynbc::config::{ConfigError, Scheme, SolverConfig};
use ac_dynbc::experiments::{Datum, MmsLevel, MmsPlan, PerturbationShape, PerturbationSpec};
use ac_dynbc::graphs::{Piece, ScalarGraph};
use ac_dynbc::mesh::StripMesh;
use ac_dynbc::potentials::{catalog, Perturbation, PotentialPair};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_POTENTIAL: &str = "double_well";
pub const DEFAULT_NX: usize = 64;
pub const DEFAULT_NY: usize = 64;
pub const DEFAULT_LX: f64 = 1.0;
pub const DEFAULT_LY: f64 = 1.0;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_T_FINAL: f64 = 0.1;
pub const DEFAULT_EPS: f64 = 1e-3;
pub const DEFAULT_NU: f64 = 1.0;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// On-disk layout. Every field is optional; `None` means "use the default".
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Catalog potential used for both bulk and boundary unless overridden.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<MeshSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bulk: Option<PotentialSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<PotentialSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<ClosedForm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forcing: Option<ForcingSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contdep: Option<ContdepSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_eps: Option<SweepSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_nu: Option<SweepSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mms: Option<MmsSection>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ly: Option<f64>,
}

/// Either a catalog name or a custom graph with its perturbation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
}

/// A named graph (`linear`, `cubic`, `indicator` on `[-1, 1]`, `logarithmic`)
/// or an explicit list of pieces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSpec {
    Named(String),
    Pieces(Vec<Piece>),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bulk: Option<ClosedForm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<ClosedForm>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContdepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub datum: Option<Datum>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<PerturbationShape>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temporal_dt: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_final_spatial: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_final_temporal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContdepSettings {
    pub datum: Datum,
    pub shape: PerturbationShape,
    pub amplitudes: Vec<f64>,
}

impl ContdepSettings {
    pub fn spec(&self) -> PerturbationSpec {
        PerturbationSpec {
            datum: self.datum,
            shape: self.shape,
            amplitude: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MmsSettings {
    pub sizes: Vec<usize>,
    pub temporal_dt: Vec<f64>,
    pub t_final_spatial: f64,
    pub t_final_temporal: f64,
    pub amplitude: f64,
    pub shift: f64,
    pub nu: f64,
    pub eps: f64,
    pub potential: String,
}

impl MmsSettings {
    /// Spatial levels `N × (N+1)` with `dt ∝ h²`, and the temporal steps on the finest mesh.
    pub fn plan(&self, lx: f64, ly: f64) -> Result<MmsPlan, ConfigError> {
        let mut plan = MmsPlan::standard(&self.sizes);
        let fine = self.sizes.iter().copied().max().unwrap_or(32);
        plan.temporal = self
            .temporal_dt
            .iter()
            .map(|&dt| MmsLevel {
                nx: fine,
                ny: fine + 1,
                dt,
            })
            .collect();
        plan.t_final_spatial = self.t_final_spatial;
        plan.t_final_temporal = self.t_final_temporal;
        plan.amplitude = self.amplitude;
        plan.shift = self.shift;
        plan.nu = self.nu;
        plan.eps = self.eps;
        plan.lx = lx;
        plan.ly = ly;
        plan.potential = catalog(&self.potential).map_err(|e| ConfigError::invalid("mms.potential", e.to_string()))?;
        Ok(plan)
    }
}

/// Fully resolved configuration for every subcommand.
#[derive(Clone, Debug, PartialEq)]
pub struct Bundle {
    pub solver: SolverConfig,
    pub contdep: ContdepSettings,
    pub sweep_eps: Vec<f64>,
    pub sweep_nu: Vec<f64>,
    pub mms: MmsSettings,
}

fn named_graph(name: &str, key: &str) -> Result<ScalarGraph, ConfigError> {
    match name {
        "linear" => Ok(ScalarGraph::linear()),
        "cubic" => Ok(ScalarGraph::cubic()),
        "indicator" => Ok(ScalarGraph::indicator(-1.0, 1.0)),
        "logarithmic" => Ok(ScalarGraph::logarithmic()),
        other => Err(ConfigError::invalid(
            key,
            format!("unknown graph `{other}` (expected linear, cubic, indicator, logarithmic or a list of pieces)"),
        )),
    }
}

fn resolve_potential(section: Option<&PotentialSection>, fallback: &PotentialPair, key: &str) -> Result<PotentialPair, ConfigError> {
    let Some(s) = section else {
        return Ok(fallback.clone());
    };
    let custom = s.graph.is_some() || s.perturbation.is_some() || s.name.is_some();
    match (&s.potential, custom) {
        (Some(_), true) => Err(ConfigError::invalid(
            key,
            "give either `potential` or a custom `graph`, not both",
        )),
        (Some(name), false) => {
            catalog(name).map_err(|e| ConfigError::invalid(&format!("{key}.potential"), e.to_string()))
        }
        (None, _) => {
            let graph_key = format!("{key}.graph");
            let graph = match &s.graph {
                None => return Err(ConfigError::invalid(&graph_key, "a custom potential needs a graph")),
                Some(GraphSpec::Named(n)) => named_graph(n, &graph_key)?,
                Some(GraphSpec::Pieces(p)) => {
                    ScalarGraph::new(p.clone()).map_err(|e| ConfigError::invalid(&graph_key, e.to_string()))?
                }
            };
            let perturbation = s.perturbation.unwrap_or(Perturbation::Zero);
            let name = s.name.clone().unwrap_or_else(|| "custom".to_string());
            PotentialPair::new(name, graph, perturbation).map_err(|e| ConfigError::invalid(&graph_key, e.to_string()))
        }
    }
}

fn check_positive(values: &[f64], key: &str) -> Result<(), ConfigError> {
    if values.is_empty() {
        return Err(ConfigError::invalid(key, "must not be empty"));
    }
    match values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        Some(v) => Err(ConfigError::invalid(key, format!("entries must be positive and finite, got {v}"))),
        None => Ok(()),
    }
}

impl FileConfig {
    pub fn from_toml(text: &str) -> Result<Self, LoadError> {
        toml::from_str(text).map_err(|e| LoadError::Parse(e.to_string()))
    }

    /// Apply defaults and check the value ranges that do not need the solver.
    pub fn resolve(&self) -> Result<Bundle, ConfigError> {
        let base_name = self.potential.as_deref().unwrap_or(DEFAULT_POTENTIAL);
        let base = catalog(base_name).map_err(|e| ConfigError::invalid("potential", e.to_string()))?;
        let bulk = resolve_potential(self.bulk.as_ref(), &base, "bulk")?;
        let boundary = resolve_potential(self.boundary.as_ref(), &base, "boundary")?;
        let m = self.mesh.clone().unwrap_or_default();
        let nx = m.nx.unwrap_or(DEFAULT_NX);
        let ny = m.ny.unwrap_or(DEFAULT_NY);
        let lx = m.lx.unwrap_or(DEFAULT_LX);
        let ly = m.ly.unwrap_or(DEFAULT_LY);
        let mesh = StripMesh::new(nx, ny, lx, ly)?;
        let forcing = self.forcing.clone().unwrap_or_default();
        let solver = SolverConfig {
            mesh,
            nu: self.nu.unwrap_or(DEFAULT_NU),
            eps: self.eps.unwrap_or(DEFAULT_EPS),
            dt: self.dt.unwrap_or(DEFAULT_DT),
            t_final: self.t_final.unwrap_or(DEFAULT_T_FINAL),
            scheme: self.scheme.unwrap_or(Scheme::RegularizedNewton),
            bulk,
            boundary,
            forcing_bulk: forcing.bulk.unwrap_or(ClosedForm::Zero),
            forcing_boundary: forcing.boundary.unwrap_or(ClosedForm::Zero),
            initial: self.initial.clone().unwrap_or(ClosedForm::Zero),
        };
        if !(solver.nu >= 0.0 && solver.nu.is_finite()) {
            return Err(ConfigError::invalid("nu", format!("must be >= 0, got {}", solver.nu)));
        }
        if !(solver.dt > 0.0 && solver.dt.is_finite()) {
            return Err(ConfigError::invalid("dt", format!("must be > 0, got {}", solver.dt)));
        }
        if !(solver.t_final > 0.0 && solver.t_final.is_finite()) {
            return Err(ConfigError::invalid("t_final", format!("must be > 0, got {}", solver.t_final)));
        }
        if !(solver.eps >= 0.0 && solver.eps.is_finite()) {
            return Err(ConfigError::invalid("eps", format!("must be >= 0, got {}", solver.eps)));
        }

        let c = self.contdep.clone().unwrap_or_default();
        let contdep = ContdepSettings {
            datum: c.datum.unwrap_or(Datum::Initial),
            shape: c.shape.unwrap_or(PerturbationShape::Cosine { kx: 2 }),
            amplitudes: c.amplitudes.unwrap_or_else(|| vec![1e-1, 1e-2, 1e-3]),
        };
        if contdep.amplitudes.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(ConfigError::invalid("contdep.amplitudes", "entries must be nonnegative and finite"));
        }
        let sweep_eps = self
            .sweep_eps
            .as_ref()
            .and_then(|s| s.values.clone())
            .unwrap_or_else(|| vec![1e-1, 1e-2, 1e-3, 1e-4]);
        check_positive(&sweep_eps, "sweep_eps.values")?;
        if sweep_eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(ConfigError::invalid("sweep_eps.values", "must be strictly decreasing"));
        }
        let sweep_nu = self
            .sweep_nu
            .as_ref()
            .and_then(|s| s.values.clone())
            .unwrap_or_else(|| vec![1e-1, 1e-2, 1e-3]);
        check_positive(&sweep_nu, "sweep_nu.values")?;

        let s = self.mms.clone().unwrap_or_default();
        let mms = MmsSettings {
            sizes: s.sizes.unwrap_or_else(|| vec![32, 64, 128]),
            temporal_dt: s.temporal_dt.unwrap_or_else(|| vec![4e-3, 2e-3, 1e-3]),
            t_final_spatial: s.t_final_spatial.unwrap_or(0.05),
            t_final_temporal: s.t_final_temporal.unwrap_or(0.1),
            amplitude: s.amplitude.unwrap_or(0.9),
            shift: s.shift.unwrap_or(0.0),
            nu: s.nu.unwrap_or(1.0),
            eps: s.eps.unwrap_or(1e-12),
            potential: s.potential.unwrap_or_else(|| DEFAULT_POTENTIAL.to_string()),
        };
        if mms.sizes.is_empty() || mms.sizes.iter().any(|&n| n < 4) {
            return Err(ConfigError::invalid("mms.sizes", "needs at least one size, each >= 4"));
        }
        check_positive(&mms.temporal_dt, "mms.temporal_dt")?;
        for (key, v) in [("mms.t_final_spatial", mms.t_final_spatial), ("mms.t_final_temporal", mms.t_final_temporal)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::invalid(key, format!("must be > 0, got {v}")));
            }
        }
        if !(mms.nu >= 0.0 && mms.nu.is_finite()) {
            return Err(ConfigError::invalid("mms.nu", format!("must be >= 0, got {}", mms.nu)));
        }
        if !(mms.eps > 0.0 && mms.eps.is_finite()) {
            return Err(ConfigError::invalid("mms.eps", format!("must be > 0, got {}", mms.eps)));
        }
        catalog(&mms.potential).map_err(|e| ConfigError::invalid("mms.potential", e.to_string()))?;

        Ok(Bundle {
            solver,
            contdep,
            sweep_eps,
            sweep_nu,
            mms,
        })
    }
}

fn explicit(p: &PotentialPair) -> PotentialSection {
    PotentialSection {
        potential: None,
        name: Some(p.name.clone()),
        graph: Some(GraphSpec::Pieces(p.graph.pieces().to_vec())),
        perturbation: Some(p.perturbation),
    }
}

impl Bundle {
    /// The bundle as a file with every key explicit.
    pub fn to_file(&self) -> FileConfig {
        let s = &self.solver;
        FileConfig {
            potential: None,
            scheme: Some(s.scheme),
            dt: Some(s.dt),
            t_final: Some(s.t_final),
            eps: Some(s.eps),
            nu: Some(s.nu),
            mesh: Some(MeshSection {
                nx: Some(s.mesh.nx),
                ny: Some(s.mesh.ny),
                lx: Some(s.mesh.lx),
                ly: Some(s.mesh.ly),
            }),
            bulk: Some(explicit(&s.bulk)),
            boundary: Some(explicit(&s.boundary)),
            initial: Some(s.initial.clone()),
            forcing: Some(ForcingSection {
                bulk: Some(s.forcing_bulk.clone()),
                boundary: Some(s.forcing_boundary.clone()),
            }),
            contdep: Some(ContdepSection {
                datum: Some(self.contdep.datum),
                shape: Some(self.contdep.shape),
                amplitudes: Some(self.contdep.amplitudes.clone()),
            }),
            sweep_eps: Some(SweepSection {
                values: Some(self.sweep_eps.clone()),
            }),
            sweep_nu: Some(SweepSection {
                values: Some(self.sweep_nu.clone()),
            }),
            mms: Some(MmsSection {
                sizes: Some(self.mms.sizes.clone()),
                temporal_dt: Some(self.mms.temporal_dt.clone()),
                t_final_spatial: Some(self.mms.t_final_spatial),
                t_final_temporal: Some(self.mms.t_final_temporal),
                amplitude: Some(self.mms.amplitude),
                shift: Some(self.mms.shift),
                nu: Some(self.mms.nu),
                eps: Some(self.mms.eps),
                potential: Some(self.mms.potential.clone()),
            }),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_file()).expect("resolved configs contain only TOML-representable values")
    }

    /// Full solver validation, including the bulk/boundary compatibility check.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.solver.validate().map(|_| ())
    }
}

/// Read a file and resolve defaults without the solver-level checks.
pub fn load_config(path: &Path) -> Result<Bundle, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> Result<Bundle, LoadError> {
    Ok(FileConfig::from_toml(text)?.resolve()?)
}

/// [`load_config`] followed by full validation.
pub fn parse_config(path: &Path) -> Result<Bundle, LoadError> {
    let b = load_config(path)?;
    b.validate()?;
    Ok(b)
}
