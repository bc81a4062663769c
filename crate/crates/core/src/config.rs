//! Run configuration: one TOML file describes one reproducible run.
//!
//! ```toml
//! [material]
//! a = 1.0
//! b = 1.0
//! c = 1.0
//!
//! [scenario]
//! name = "hedgehog"
//! epsilon = 0.1
//! resolution = 64
//!
//! [solver]
//! grad_tol = 1e-4
//!
//! [verify]
//! checks = ["el_residual", "pohozaev"]
//! ```

use crate::defect::DEFAULT_THRESHOLD;
use crate::potential::{MaterialParams, PotentialError};
use crate::scenario::{self, Scenario, ScenarioError};
use crate::solver::{InitStrategy, SolveConfig, SolverError};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid material: {0}")]
    Material(#[from] PotentialError),
    #[error("invalid scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("invalid solver block: {0}")]
    Solver(#[from] SolverError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    Disk,
    DiskTrivial,
    Cylinder,
    Hedgehog,
    TorusSection,
    Torus3d,
    Dumbbell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitName {
    Harmonic,
    Radial,
    Random,
    Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: ScenarioName,
    pub epsilon: f64,
    /// Cells across a length of 2, so `h = 2 / resolution`.
    #[serde(default)]
    pub resolution: Option<usize>,
    /// Alternative to `resolution`: `h = ε / cells_per_epsilon`.
    #[serde(default)]
    pub cells_per_epsilon: Option<f64>,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default = "default_height")]
    pub height: f64,
    /// Dumbbell half-length of the neck.
    #[serde(default = "default_half_length", rename = "L")]
    pub half_length: f64,
    /// Dumbbell neck radius.
    #[serde(default = "default_neck", rename = "r")]
    pub neck_radius: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Overrides the scenario's recommended initialization.
    #[serde(default)]
    pub init: Option<InitName>,
    #[serde(default)]
    pub seed: u64,
}

fn default_k() -> f64 {
    0.5
}
fn default_height() -> f64 {
    1.0
}
fn default_half_length() -> f64 {
    6.0
}
fn default_neck() -> f64 {
    0.3
}
fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

impl ScenarioConfig {
    /// Grid resolution after resolving `cells_per_epsilon`.
    pub fn resolution_for(&self, epsilon: f64) -> Result<usize, ConfigError> {
        match (self.resolution, self.cells_per_epsilon) {
            (Some(r), None) => Ok(r),
            (None, Some(c)) if c > 0.0 => Ok((2.0 * c / epsilon - 1e-9).ceil() as usize),
            (None, None) => Err(ConfigError::Invalid("scenario needs `resolution` or `cells_per_epsilon`".into())),
            _ => Err(ConfigError::Invalid(
                "give exactly one of `resolution` and a positive `cells_per_epsilon`".into(),
            )),
        }
    }

    /// Builds the scenario at the configured or overridden `epsilon`.
    pub fn build(&self, params: &MaterialParams, epsilon: Option<f64>) -> Result<Scenario, ConfigError> {
        let eps = epsilon.unwrap_or(self.epsilon);
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(ConfigError::Invalid(format!("threshold {} must lie in (0, 1)", self.threshold)));
        }
        let res = self.resolution_for(eps)?;
        let mut sc = match self.name {
            ScenarioName::Disk => scenario::disk(self.k, eps, res, params)?,
            ScenarioName::DiskTrivial => scenario::disk_trivial(eps, res, params)?,
            ScenarioName::Cylinder => scenario::cylinder(self.k, eps, res, self.height, params)?,
            ScenarioName::Hedgehog => scenario::hedgehog(eps, res, params)?,
            ScenarioName::TorusSection => scenario::torus_section(eps, res, params)?,
            ScenarioName::Torus3d => scenario::torus_3d(eps, res, params)?,
            ScenarioName::Dumbbell => scenario::dumbbell(self.half_length, self.neck_radius, eps, res, params)?,
        };
        if let Some(init) = self.init {
            sc.init = match init {
                InitName::Harmonic => InitStrategy::HarmonicLikeSmooth,
                InitName::Radial => InitStrategy::RadialFromBoundary,
                InitName::Random => InitStrategy::Random(self.seed),
                InitName::Profile => match self.name {
                    ScenarioName::Disk | ScenarioName::Cylinder => {
                        InitStrategy::Profile(scenario::profile_fn(self.k, eps, params)?)
                    }
                    _ => {
                        return Err(ConfigError::Invalid(
                            "init = \"profile\" needs a disclination scenario".into(),
                        ))
                    }
                },
            };
        }
        Ok(sc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub field: String,
    pub trace: String,
    pub defects: String,
    pub verify: String,
    /// Dump the field every this many iterations; 0 writes the final
    /// field only.
    pub dump_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            field: "field.vtk".into(),
            trace: "trace.csv".into(),
            defects: "defects.csv".into(),
            verify: "verify.csv".into(),
            dump_every: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    ElResidual,
    Pohozaev,
    Monotonicity,
    StarBound,
    StressEnergy,
    LineDensity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub checks: Vec<CheckName>,
    pub center: [f64; 3],
    /// Ball radius for the Pohozaev, star-shaped and density checks.
    pub radius: f64,
    pub radii: Vec<f64>,
    /// Half side of the box about `center` for the stress-energy and
    /// star-shaped checks.
    pub box_half: f64,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            checks: Vec::new(),
            center: [0.0; 3],
            radius: 0.5,
            radii: vec![0.2, 0.3, 0.4, 0.5],
            box_half: 0.5,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Material {
    a: f64,
    b: f64,
    c: f64,
}

impl Default for Material {
    fn default() -> Self {
        Material { a: 1.0, b: 1.0, c: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    material: Material,
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub solver: SolveConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.params()?;
        cfg.solver.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        RunConfig::parse(&text)
    }

    pub fn params(&self) -> Result<MaterialParams, ConfigError> {
        Ok(MaterialParams::new(self.material.a, self.material.b, self.material.c)?)
    }

    /// The fully resolved configuration, defaults included.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[scenario]\nname = \"hedgehog\"\nepsilon = 0.1\nresolution = 40\n";

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.solver, SolveConfig::default());
        assert_eq!(c.params().unwrap(), MaterialParams::default());
        assert_eq!(c.scenario.threshold, DEFAULT_THRESHOLD);
    }

    #[test]
    fn echo_round_trips() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(RunConfig::parse(&c.echo()).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::parse(&format!("{MINIMAL}bogus = 1\n")).is_err());
        assert!(RunConfig::parse(&format!("{MINIMAL}[material]\na = -1.0\nb = 1.0\nc = 1.0\n")).is_err());
        assert!(RunConfig::parse(&format!("{MINIMAL}[solver]\ndt_safety = 2.0\n")).is_err());
    }

    #[test]
    fn coarse_grid_names_the_constraint() {
        let c = RunConfig::parse(&MINIMAL.replace("40", "16")).unwrap();
        let err = c.scenario.build(&c.params().unwrap(), None).unwrap_err();
        assert!(err.to_string().contains("epsilon >= 2h"), "{err}");
    }

    #[test]
    fn cells_per_epsilon_sets_h() {
        let mut c = RunConfig::parse(MINIMAL).unwrap().scenario;
        c.resolution = None;
        c.cells_per_epsilon = Some(2.0);
        assert_eq!(c.resolution_for(0.05).unwrap(), 80);
    }
}
