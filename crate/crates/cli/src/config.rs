//! Run configuration: one JSON file, every default explicit.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use cylab_core::experiments::{ExperimentSettings, Localization, LoopSpec};
use cylab_core::propagator::DEFAULT_DT;
use cylab_core::{CylinderGrid, DriveProtocol, PathPolyline, PhysicsConfig, Ramp};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub eigen: EigenTable,
    #[serde(default)]
    pub experiment: Experiment,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub adiabatic_study: StudyConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub seed: u64,
}

/// Grid without the circumference, which comes from `physics.l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { nx: 32, ny: 256, y_min: -16.0, y_max: 16.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub dt: f64,
    pub ramp: Ramp,
    pub sample_interval: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self { dt: DEFAULT_DT, ramp: Ramp::default(), sample_interval: 0.05 }
    }
}

/// Levels `0..=n_max` and modes `-j_max..=j_max` of the eigenstate table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenTable {
    pub n_max: usize,
    pub j_max: i64,
}

impl Default for EigenTable {
    fn default() -> Self {
        Self { n_max: 2, j_max: 2 }
    }
}

fn default_duration() -> f64 {
    200.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    /// Straight transport once around the cylinder.
    AbLoop {
        #[serde(rename = "T", default = "default_duration")]
        duration: f64,
        #[serde(default)]
        n: usize,
        #[serde(default)]
        localization: Localization,
    },
    /// Any closed polyline ending at `(k l, 0)`.
    GeneralLoop {
        path: PathPolyline,
        #[serde(rename = "T", default = "default_duration")]
        duration: f64,
        #[serde(default)]
        n: usize,
        #[serde(default)]
        localization: Localization,
    },
    /// The two excursion loops of opposite orientation with flux `phi_b`.
    ExcursionPair {
        phi_b: f64,
        #[serde(rename = "T", default = "default_duration")]
        duration: f64,
        #[serde(default)]
        n: usize,
        #[serde(default)]
        localization: Localization,
    },
}

impl Default for Experiment {
    fn default() -> Self {
        Experiment::AbLoop { duration: default_duration(), n: 0, localization: Localization::default() }
    }
}

impl Experiment {
    pub fn loops(&self, cfg: &PhysicsConfig) -> Result<Vec<LoopSpec>> {
        let specs = match self {
            Experiment::AbLoop { duration, n, localization } => {
                vec![LoopSpec::ab_loop(cfg, *n, *duration)?.with_localization(*localization)]
            }
            Experiment::GeneralLoop { path, duration, n, localization } => {
                vec![LoopSpec::general(path.clone(), *n, *duration).with_localization(*localization)]
            }
            Experiment::ExcursionPair { phi_b, duration, n, localization } => vec![
                LoopSpec::excursion(cfg, true, *phi_b, *n, *duration)?.with_localization(*localization),
                LoopSpec::excursion(cfg, false, *phi_b, *n, *duration)?.with_localization(*localization),
            ],
        };
        Ok(specs)
    }
}

/// Flux values: an explicit list or `points` evenly spaced values from
/// `start` to `stop` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FluxGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, points: usize },
}

impl FluxGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            FluxGrid::List(v) => v.clone(),
            FluxGrid::Range { start, stop, points } => match points {
                0 => Vec::new(),
                1 => vec![*start],
                p => (0..*p).map(|k| start + (stop - start) * k as f64 / (p - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub phi: FluxGrid,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { phi: FluxGrid::Range { start: 0.0, stop: 4.0 * PI, points: 17 } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(rename = "T")]
    pub durations: Vec<f64>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self { durations: vec![25.0, 50.0, 100.0, 200.0] }
    }
}

/// Sizes of the randomized checks run by `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub random_states: usize,
    pub oracle_pairs: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { random_states: 8, oracle_pairs: 3 }
    }
}

impl RunConfig {
    /// Reference configuration with `phi0 = pi / 2`.
    pub fn defaults() -> Self {
        Self {
            physics: PhysicsConfig::reference().with_phi0(PI / 2.0),
            grid: GridConfig::default(),
            numerics: Numerics::default(),
            eigen: EigenTable::default(),
            experiment: Experiment::default(),
            sweep: SweepConfig::default(),
            adiabatic_study: StudyConfig::default(),
            verify: VerifyConfig::default(),
            seed: 0,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    /// Parses and validates; errors name the offending field path.
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            if path == "." {
                anyhow!("invalid config: {}", e.inner())
            } else {
                anyhow!("invalid config at `{path}`: {}", e.inner())
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn grid(&self) -> CylinderGrid {
        let g = self.grid;
        CylinderGrid { nx: g.nx, ny: g.ny, y_min: g.y_min, y_max: g.y_max, l: self.physics.l }
    }

    pub fn settings(&self) -> ExperimentSettings {
        ExperimentSettings {
            grid: self.grid(),
            dt: self.numerics.dt,
            ramp: self.numerics.ramp,
            sample_interval: self.numerics.sample_interval,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, e: cylab_core::Error| anyhow!("invalid config at `{name}`: {e}");
        self.physics.validate().map_err(|e| field("physics", e))?;
        self.grid().validate().map_err(|e| field("grid", e))?;
        let n = &self.numerics;
        DriveProtocol::idle(1.0, n.dt).validate(&self.physics).map_err(|e| field("numerics.dt", e))?;
        DriveProtocol::along_path(PathPolyline::from_points(&[(0.0, 0.0), (1.0, 0.0)])?, 1.0, n.dt, n.ramp)
            .validate(&self.physics)
            .map_err(|e| field("numerics.ramp", e))?;
        if !(n.sample_interval.is_finite() && n.sample_interval > 0.0) {
            bail!("invalid config at `numerics.sample_interval`: must be > 0, got {}", n.sample_interval);
        }
        for spec in self.experiment.loops(&self.physics).map_err(|e| anyhow!("invalid config at `experiment`: {e}"))? {
            spec.winding(&self.physics).map_err(|e| field("experiment", e))?;
        }
        let phis = self.sweep.phi.values();
        if phis.iter().any(|p| !p.is_finite()) || phis.windows(2).any(|w| !(w[1] > w[0])) {
            bail!("invalid config at `sweep.phi`: values must be finite and strictly increasing");
        }
        let ts = &self.adiabatic_study.durations;
        if ts.iter().any(|t| !(t.is_finite() && *t > 0.0)) || ts.windows(2).any(|w| !(w[1] > w[0])) {
            bail!("invalid config at `adiabatic_study.T`: values must be positive and strictly increasing");
        }
        if self.eigen.j_max < 0 {
            bail!("invalid config at `eigen.j_max`: must be >= 0");
        }
        Ok(())
    }
}
