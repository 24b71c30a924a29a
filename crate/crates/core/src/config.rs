//! TOML run configuration.
//!
//! ```toml
//! schema = 1
//!
//! [law]
//! kind = "gamma"      # or "table" with `path = "table.csv"`
//! kappa = 1.0
//! gamma = 2.0
//!
//! [data]
//! rho_l = 1.0
//! u1_l = -1.0
//! rho_r = 1.0
//! u1_r = 1.0
//!
//! [grid]
//! a = 5.0
//! nx1 = 400
//! nx2 = 1
//!
//! [sim]
//! t_end = 1.0
//! snapshot_every = 0.1
//!
//! [sim.perturbation]
//! amplitude = 1e-3
//! mode = 2
//! component = "m2"
//! support = 1.5
//! ```

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entropy::{CertifySettings, DEFAULT_REI_CONSTANT, ENERGY_TOL, SIGN_TOL};
use crate::eos::PressureLaw;
use crate::fvm::{Component, Grid, Perturbation, SimConfig, BOUNDARY_TOL, DEFAULT_CFL, DEFAULT_MAX_SNAPSHOTS};
use crate::riemann::RiemannData;

/// The only configuration schema this version reads.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
    #[error("unsupported schema {found}; this build reads schema {SCHEMA_VERSION}")]
    Schema { found: u32 },
    #[error("missing section [{0}]")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LawSpec {
    Gamma { kappa: f64, gamma: f64 },
    /// Two-column `rho,p` CSV, relative to the config file.
    Table { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub a: f64,
    pub nx1: usize,
    #[serde(default = "one")]
    pub nx2: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub amplitude: f64,
    pub mode: u32,
    pub component: Component,
    /// Fixed phase; drawn from `--seed` when absent.
    #[serde(default)]
    pub phase: Option<f64>,
    #[serde(default)]
    pub support: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub t_end: f64,
    /// Defaults to `t_end`.
    #[serde(default)]
    pub snapshot_every: Option<f64>,
    #[serde(default = "default_max_snapshots")]
    pub max_snapshots: usize,
    #[serde(default = "default_boundary_tol")]
    pub boundary_tol: f64,
    #[serde(default)]
    pub perturbation: Option<PerturbationSpec>,
}

fn default_cfl() -> f64 {
    DEFAULT_CFL
}

fn default_max_snapshots() -> usize {
    DEFAULT_MAX_SNAPSHOTS
}

fn default_boundary_tol() -> f64 {
    BOUNDARY_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactSpec {
    #[serde(default = "default_exact_t")]
    pub t: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Snapshot times used by `certify --exact`; defaults to `[0, t/2, t]`.
    #[serde(default)]
    pub times: Option<Vec<f64>>,
}

impl Default for ExactSpec {
    fn default() -> Self {
        ExactSpec { t: default_exact_t(), samples: default_samples(), times: None }
    }
}

fn default_exact_t() -> f64 {
    1.0
}

fn default_samples() -> usize {
    201
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySpec {
    #[serde(default = "default_rei_constant")]
    pub rei_constant: f64,
    #[serde(default = "default_energy_tol")]
    pub energy_tol: f64,
    #[serde(default = "default_sign_tol")]
    pub sign_tol: f64,
}

impl Default for CertifySpec {
    fn default() -> Self {
        CertifySpec {
            rei_constant: DEFAULT_REI_CONSTANT,
            energy_tol: ENERGY_TOL,
            sign_tol: SIGN_TOL,
        }
    }
}

fn default_rei_constant() -> f64 {
    DEFAULT_REI_CONSTANT
}

fn default_energy_tol() -> f64 {
    ENERGY_TOL
}

fn default_sign_tol() -> f64 {
    SIGN_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub law: LawSpec,
    pub data: RiemannData,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub sim: Option<SimSpec>,
    #[serde(default)]
    pub exact: ExactSpec,
    #[serde(default)]
    pub certify: CertifySpec,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse { path: path.display().to_string(), message },
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)
            .map_err(|e| ConfigError::Parse { path: "<config>".into(), message: e.to_string() })?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(ConfigError::Schema { found: cfg.schema });
        }
        cfg.data.check().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let c = &cfg.certify;
        if !(c.rei_constant > 0.0 && c.energy_tol > 0.0 && c.sign_tol > 0.0) {
            return Err(ConfigError::Invalid("certify tolerances must be positive".into()));
        }
        if !(cfg.exact.t > 0.0) || cfg.exact.samples < 2 {
            return Err(ConfigError::Invalid("[exact] needs t > 0 and at least 2 samples".into()));
        }
        Ok(cfg)
    }

    pub fn pressure_law(&self) -> Result<PressureLaw, ConfigError> {
        match &self.law {
            LawSpec::Gamma { kappa, gamma } => {
                PressureLaw::gamma(*kappa, *gamma).map_err(|e| ConfigError::Invalid(e.to_string()))
            }
            LawSpec::Table { path } => {
                PressureLaw::from_csv(&self.base_dir.join(path)).map_err(|e| ConfigError::Invalid(e.to_string()))
            }
        }
    }

    pub fn grid(&self) -> Result<Grid, ConfigError> {
        let g = self.grid.ok_or(ConfigError::Missing("grid"))?;
        Grid::new(g.a, g.nx1, g.nx2).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn certify_settings(&self) -> CertifySettings {
        CertifySettings {
            rei_constant: self.certify.rei_constant,
            energy_tol: self.certify.energy_tol,
            sign_tol: self.certify.sign_tol,
        }
    }

    /// Solver configuration. A perturbation without a fixed phase gets a
    /// phase in `[0, 2 pi)` drawn from `seed` (zero without a seed).
    pub fn sim_config(&self, seed: Option<u64>) -> Result<SimConfig, ConfigError> {
        let sim = self.sim.as_ref().ok_or(ConfigError::Missing("sim"))?;
        let mut cfg = SimConfig::new(self.grid()?, self.pressure_law()?, self.data, sim.t_end);
        cfg.cfl = sim.cfl;
        cfg.snapshot_every = sim.snapshot_every.unwrap_or(sim.t_end);
        cfg.max_snapshots = sim.max_snapshots;
        cfg.boundary_tol = sim.boundary_tol;
        cfg.perturbation = sim.perturbation.map(|p| Perturbation {
            amplitude: p.amplitude,
            mode: p.mode,
            component: p.component,
            phase: p.phase.unwrap_or_else(|| match seed {
                Some(s) => ChaCha8Rng::seed_from_u64(s).gen_range(0.0..std::f64::consts::TAU),
                None => 0.0,
            }),
            support: p.support,
        });
        cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
    }
}

/// List of configs for `--sweep`, resolved relative to the manifest.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepManifest {
    pub configs: Vec<PathBuf>,
}

impl SweepManifest {
    pub fn load(path: &Path) -> Result<Vec<PathBuf>, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        let m: SweepManifest = toml::from_str(&text)
            .map_err(|e| ConfigError::Parse { path: path.display().to_string(), message: e.to_string() })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(m.configs.into_iter().map(|p| base.join(p)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SYMMETRIC: &str = r#"
schema = 1
[law]
kind = "gamma"
kappa = 1.0
gamma = 2.0
[data]
rho_l = 1.0
u1_l = -1.0
rho_r = 1.0
u1_r = 1.0
[grid]
a = 5.0
nx1 = 40
[sim]
t_end = 0.5
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = RunConfig::parse(SYMMETRIC).unwrap();
        let sim = cfg.sim_config(None).unwrap();
        assert_eq!(sim.grid.nx2, 1);
        assert_eq!(sim.cfl, DEFAULT_CFL);
        assert_eq!(sim.snapshot_every, 0.5);
        assert_eq!(cfg.certify.rei_constant, DEFAULT_REI_CONSTANT);
    }

    #[test]
    fn rejects_other_schemas_and_unknown_keys() {
        let text = SYMMETRIC.replace("schema = 1", "schema = 2");
        assert!(matches!(RunConfig::parse(&text), Err(ConfigError::Schema { found: 2 })));
        let text = SYMMETRIC.replace("nx1 = 40", "nx1 = 40\nny = 3");
        assert!(matches!(RunConfig::parse(&text), Err(ConfigError::Parse { .. })));
    }

    #[test]
    fn rejects_unrunnable_settings() {
        let text = SYMMETRIC.replace("nx1 = 40", "nx1 = 41");
        assert!(RunConfig::parse(&text).unwrap().sim_config(None).is_err());
        let text = SYMMETRIC.replace("t_end = 0.5", "t_end = 3.0");
        assert!(RunConfig::parse(&text).unwrap().sim_config(None).is_err());
    }

    #[test]
    fn seeded_phase_is_deterministic() {
        let text = format!(
            "{SYMMETRIC}[sim.perturbation]\namplitude = 1e-3\nmode = 2\ncomponent = \"m2\"\nsupport = 1.0\n"
        );
        let cfg = RunConfig::parse(&text).unwrap();
        let a = cfg.sim_config(Some(7)).unwrap().perturbation.unwrap().phase;
        let b = cfg.sim_config(Some(7)).unwrap().perturbation.unwrap().phase;
        let c = cfg.sim_config(Some(8)).unwrap().perturbation.unwrap().phase;
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(cfg.sim_config(None).unwrap().perturbation.unwrap().phase, 0.0);
    }
}
