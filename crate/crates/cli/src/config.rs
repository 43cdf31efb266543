//! Experiment configuration files.
//!
//! A config is a TOML document (schema in `configs/README.md`). `--config`
//! accepts a path or the name of a bundled preset.

use std::path::{Path, PathBuf};

use mixlab_core::analysis::default_eps_grid;
use mixlab_core::geometry::{
    pullback_family, Cutoff, Density, Euclidean, MetricFamily, Rect, Region, RotatingGyre, ScheduledFamily, Shape,
    SteadyShear, Vortex,
};
use mixlab_core::pde::Grid;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Bundled presets, keyed by file stem.
pub const PRESETS: &[(&str, &str)] = &[
    ("disk_euclidean", include_str!("../../../configs/disk_euclidean.toml")),
    ("disk_eps1e-3", include_str!("../../../configs/disk_eps1e-3.toml")),
    ("shear_disk", include_str!("../../../configs/shear_disk.toml")),
    ("gyre_disk", include_str!("../../../configs/gyre_disk.toml")),
    ("coherence_disk", include_str!("../../../configs/coherence_disk.toml")),
    ("averaging_shear", include_str!("../../../configs/averaging_shear.toml")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Pde,
    Mc,
    Both,
}

impl Backend {
    pub fn pde(self) -> bool {
        matches!(self, Backend::Pde | Backend::Both)
    }
    pub fn mc(self) -> bool {
        matches!(self, Backend::Mc | Backend::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityConfig {
    SteadyShear { rate: f64 },
    Vortex { amplitude: f64, modulation: f64, cutoff: Cutoff },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    Euclidean {
        #[serde(default)]
        density: Density,
    },
    ShearPullback {
        rate: f64,
        cutoff: Option<Cutoff>,
        #[serde(default)]
        density: Density,
    },
    DiagTime {
        cutoff: Option<Cutoff>,
        #[serde(default)]
        density: Density,
    },
    RotatingGyre {
        amplitude: f64,
        modulation: f64,
        cutoff: Cutoff,
        #[serde(default)]
        density: Density,
    },
    /// Pullback under a numerically integrated flow.
    FlowPullback {
        velocity: VelocityConfig,
        #[serde(default)]
        density: Density,
    },
}

impl FamilyConfig {
    pub fn build(&self) -> Result<Box<dyn MetricFamily>, CliError> {
        let density = match self {
            FamilyConfig::Euclidean { density }
            | FamilyConfig::ShearPullback { density, .. }
            | FamilyConfig::DiagTime { density, .. }
            | FamilyConfig::RotatingGyre { density, .. }
            | FamilyConfig::FlowPullback { density, .. } => *density,
        };
        if !density.is_valid() {
            return Err(CliError::Config(format!("invalid density {density:?}")));
        }
        let cutoff_ok = |c: &Option<Cutoff>| c.is_none_or(|c| c.inner >= 0.0 && c.outer > c.inner);
        Ok(match self {
            FamilyConfig::Euclidean { .. } => Box::new(Euclidean { density }),
            FamilyConfig::ShearPullback { rate, cutoff, .. } => {
                if !cutoff_ok(cutoff) || !rate.is_finite() {
                    return Err(CliError::Config("shear_pullback needs a finite rate and 0 <= inner < outer".into()));
                }
                Box::new(ScheduledFamily::shear_pullback(*rate, *cutoff).with_density(density))
            }
            FamilyConfig::DiagTime { cutoff, .. } => {
                if !cutoff_ok(cutoff) {
                    return Err(CliError::Config("diag_time cutoff needs 0 <= inner < outer".into()));
                }
                Box::new(ScheduledFamily::diag_time(*cutoff).with_density(density))
            }
            FamilyConfig::RotatingGyre { amplitude, modulation, cutoff, .. } => {
                if !cutoff_ok(&Some(*cutoff)) {
                    return Err(CliError::Config("rotating_gyre cutoff needs 0 <= inner < outer".into()));
                }
                let mut g = RotatingGyre::new(*amplitude, *modulation, *cutoff);
                g.density = density;
                Box::new(g)
            }
            FamilyConfig::FlowPullback { velocity, .. } => match velocity {
                VelocityConfig::SteadyShear { rate } => Box::new(pullback_family(SteadyShear { rate: *rate }, density)),
                VelocityConfig::Vortex { amplitude, modulation, cutoff } => {
                    Box::new(pullback_family(Vortex::new(*amplitude, *modulation, *cutoff), density))
                }
            },
        })
    }
}

/// Computational rectangle. Either `half_width` (a centred square) or the
/// four bounds must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: Option<f64>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub y_min: Option<f64>,
    pub y_max: Option<f64>,
    pub nx: usize,
    pub ny: Option<usize>,
    /// Indicator subsamples per direction.
    pub subsamples: Option<usize>,
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid, CliError> {
        let rect = match (self.half_width, self.x_min, self.x_max, self.y_min, self.y_max) {
            (Some(h), None, None, None, None) => Rect::centered(h),
            (None, Some(a), Some(b), Some(c), Some(d)) => Rect::new(a, b, c, d),
            _ => return Err(CliError::Config("grid needs either half_width or all of x_min, x_max, y_min, y_max".into())),
        };
        Ok(Grid::new(rect, self.nx, self.ny.unwrap_or(self.nx))?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub paths: usize,
    #[serde(default = "default_mc_steps")]
    pub steps: usize,
}

fn default_mc_steps() -> usize {
    128
}

/// Smooth initial datum for the averaging-order command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AveragingConfig {
    pub bump_center: [f64; 2],
    pub bump_width: f64,
    /// Fixed time step; automatic when absent.
    pub dt: Option<f64>,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Assert the fitted slope is at least this.
    pub min_slope: Option<f64>,
}

fn default_nodes() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub family: FamilyConfig,
    pub region: Shape,
    /// Diffusivities; the default geometric grid when absent.
    pub eps: Option<Vec<f64>>,
    pub backend: Option<Backend>,
    pub grid: Option<GridConfig>,
    pub mc: Option<McConfig>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub averaging: Option<AveragingConfig>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Reads `spec` as a file path, falling back to a bundled preset name.
    pub fn load(spec: &str) -> Result<Self, CliError> {
        let path = Path::new(spec);
        if path.is_file() {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            return Self::parse(&text);
        }
        let stem = spec.strip_suffix(".toml").unwrap_or(spec);
        match PRESETS.iter().find(|(name, _)| *name == stem) {
            Some((_, text)) => Self::parse(text),
            None => Err(CliError::Config(format!(
                "no config file or preset named `{spec}` (presets: {})",
                PRESETS.iter().map(|p| p.0).collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if let Some(eps) = &self.eps {
            if eps.is_empty() || eps.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
                return Err(CliError::Config("eps must be a non-empty list of non-negative numbers".into()));
            }
        }
        if self.backend.is_some_and(|b| b.mc()) && self.seed.is_none() {
            return Err(CliError::Config("a seed is required when the backend includes mc".into()));
        }
        self.family.build()?;
        self.region()?;
        if let Some(g) = &self.grid {
            g.build()?;
        }
        Ok(())
    }

    pub fn region(&self) -> Result<Region, CliError> {
        Region::from_shape(self.region.clone()).map_err(|e| CliError::Config(format!("region: {e}")))
    }

    pub fn eps(&self) -> Vec<f64> {
        self.eps.clone().unwrap_or_else(default_eps_grid)
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        self.grid.as_ref().ok_or_else(|| CliError::Config("this command needs a [grid] section".into()))?.build()
    }

    pub fn mc(&self) -> Result<&McConfig, CliError> {
        self.mc.as_ref().ok_or_else(|| CliError::Config("the mc backend needs an [mc] section".into()))
    }

    /// Backend from the flag, else the config, else `pde`.
    pub fn backend(&self, flag: Option<Backend>) -> Backend {
        flag.or(self.backend).unwrap_or(Backend::Pde)
    }

    /// Seed from the flag, else the config. Required for Monte Carlo runs.
    pub fn seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        flag.or(self.seed).ok_or_else(|| CliError::Config("a seed is required for the mc backend (--seed or `seed`)".into()))
    }
}
