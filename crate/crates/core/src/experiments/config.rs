//! Scenario files: the JSON description of one synthetic experiment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{build_grid, DomainSpec, Point};
use crate::error::{Error, Result};
use crate::field::TimeGrid;
use crate::forward::{DirichletData, NonlinearityFn};
use crate::kernel::KernelConfig;
use crate::observation::SynthesisParams;
use crate::reconstruction::{CurveConfig, ExtensionMethod, ReconstructionConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// Named semilinear terms; observation metadata stores these, never code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FSelector {
    Zero,
    /// `c u`, `c >= 0`.
    Linear { c: f64 },
    /// `max(u, 0)^p`, `p >= 1`.
    Power { p: f64 },
    /// `u / (1 + |u|)`.
    Saturating,
}

impl FSelector {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FSelector::Linear { c } if !(c >= 0.0 && c.is_finite()) => {
                Err(Error::config(format!("linear f needs c >= 0, got {c}")))
            }
            FSelector::Power { p } if !(p >= 1.0 && p.is_finite()) => {
                Err(Error::config(format!("power f needs p >= 1, got {p}")))
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> NonlinearityFn<f64> {
        match *self {
            FSelector::Zero => NonlinearityFn::zero(),
            FSelector::Linear { c } => NonlinearityFn::linear(c),
            FSelector::Power { p } => NonlinearityFn::power(p),
            FSelector::Saturating => NonlinearityFn::saturating(),
        }
    }
}

/// Spatial profile `g(x) >= 0` of the Dirichlet data, in coordinates scaled
/// to the unit box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `g = 1`.
    Uniform,
    /// `g = 1 + x / L_x`.
    LinearX,
    /// `g = 1 + cos(π x / L_x) / 2`.
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiFamily {
    /// `φ = A t g(x)`.
    Ramp,
    /// `φ = A (1 - e^{-r t}) g(x)`.
    Saturating,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSelector {
    pub family: PhiFamily,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub rate: f64,
    #[serde(default = "uniform")]
    pub profile: Profile,
}

fn one() -> f64 {
    1.0
}

fn uniform() -> Profile {
    Profile::Uniform
}

impl PhiSelector {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::config(format!("φ amplitude must be positive, got {}", self.amplitude)));
        }
        if self.family == PhiFamily::Saturating && !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::config(format!("φ rate must be positive, got {}", self.rate)));
        }
        Ok(())
    }

    pub fn build(&self, domain: &DomainSpec<f64>, horizon: f64) -> DirichletData<f64> {
        let lx = domain.length(0);
        let sel = *self;
        DirichletData::new(horizon, move |p: Point<f64>, t: f64| {
            let g = match sel.profile {
                Profile::Uniform => 1.0,
                Profile::LinearX => 1.0 + p.x / lx,
                Profile::Cosine => 1.0 + 0.5 * (std::f64::consts::PI * p.x / lx).cos(),
            };
            let time = match sel.family {
                PhiFamily::Ramp => t,
                PhiFamily::Saturating => 1.0 - (-sel.rate * t).exp(),
            };
            sel.amplitude * time * g
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Cells per axis.
    pub cells: Vec<usize>,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSettings {
    pub k_max: usize,
    pub crossover: Option<f64>,
    pub image_count: usize,
    pub tail_tol: f64,
    pub gauss_points: usize,
}

impl Default for KernelSettings {
    fn default() -> Self {
        let k = KernelConfig::<f64>::default();
        KernelSettings {
            k_max: k.k_max,
            crossover: k.crossover,
            image_count: k.image_count,
            tail_tol: k.tail_tol,
            gauss_points: k.gauss_points,
        }
    }
}

impl From<KernelSettings> for KernelConfig<f64> {
    fn from(k: KernelSettings) -> Self {
        KernelConfig {
            k_max: k.k_max,
            crossover: k.crossover,
            image_count: k.image_count,
            tail_tol: k.tail_tol,
            gauss_points: k.gauss_points,
        }
    }
}

/// Reconstruction settings; `modes` and `window` default by domain and
/// noise level when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructionSettings {
    pub modes: Option<usize>,
    pub extension: ExtensionMethod,
    pub window: Option<usize>,
    pub degree: usize,
    pub bins: usize,
    pub monotone: bool,
    pub quantiles: (f64, f64),
    pub compare_extensions: bool,
    pub kernel: KernelSettings,
}

impl Default for ReconstructionSettings {
    fn default() -> Self {
        ReconstructionSettings {
            modes: None,
            extension: ExtensionMethod::Harmonic,
            window: None,
            degree: 2,
            bins: 32,
            monotone: true,
            quantiles: (0.1, 0.9),
            compare_extensions: true,
            kernel: KernelSettings::default(),
        }
    }
}

/// Differentiation half-width used when the scenario leaves it open.
pub fn default_window(noise: f64) -> usize {
    if noise > 0.0 {
        8
    } else {
        2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub name: String,
    pub domain: DomainSpec<f64>,
    pub horizon: f64,
    /// Grid the forward problem is solved on.
    pub synthesis: GridSpec,
    /// Grid of the reconstruction; must be strictly coarser.
    pub reconstruction_grid: GridSpec,
    pub phi: PhiSelector,
    pub f: FSelector,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub reconstruction: ReconstructionSettings,
    pub output_dir: PathBuf,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| Error::config(format!("invalid scenario: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("scenario serializes")
    }

    pub fn synthesis_params(&self) -> SynthesisParams<f64> {
        SynthesisParams {
            fine_cells: self.synthesis.cells.clone(),
            fine_steps: self.synthesis.steps,
            coarse_cells: self.reconstruction_grid.cells.clone(),
            coarse_steps: self.reconstruction_grid.steps,
            noise: self.noise,
            seed: self.seed,
        }
    }

    pub fn phi(&self) -> DirichletData<f64> {
        self.phi.build(&self.domain, self.horizon)
    }

    pub fn reconstruction_config(&self) -> ReconstructionConfig<f64> {
        let r = &self.reconstruction;
        let mut config = ReconstructionConfig::for_domain(&self.domain, self.reconstruction_grid.cells.clone());
        if let Some(k) = r.modes {
            config.modes = k;
        }
        config.extension = r.extension;
        config.window = r.window.unwrap_or_else(|| default_window(self.noise));
        config.degree = r.degree;
        config.kernel = r.kernel.into();
        config.curve = CurveConfig { bins: r.bins, monotone: r.monotone, quantiles: r.quantiles };
        config.compare_extensions = r.compare_extensions;
        config
    }

    /// Schema, grids, selectors, inverse-crime guard and admissibility of
    /// `f` on `[0, max φ]`.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "scenario schema version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.domain.validate()?;
        let dim = self.domain.dim();
        if self.synthesis.cells.len() != dim || self.reconstruction_grid.cells.len() != dim {
            return Err(Error::config(format!("grids need {dim} cell counts for this domain")));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::config(format!("noise must be nonnegative, got {}", self.noise)));
        }
        self.phi.validate()?;
        self.f.validate()?;
        self.synthesis_params().validate()?;
        self.reconstruction_config().validate()?;
        let grid = build_grid(self.domain, &self.reconstruction_grid.cells)?;
        let time = TimeGrid::new(self.horizon, self.reconstruction_grid.steps)?;
        let phi = self.phi();
        phi.check_admissible(&grid, &time, true)?;
        self.f.build().check_admissible(phi.max_on(&grid, &time))?;
        Ok(())
    }
}

/// Where outputs go: `output_dir` below `$SEMIRECON_OUTPUT_ROOT` when that
/// is set and the directory is relative.
pub fn resolve_output_dir(config: &ScenarioConfig) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_VAR) {
        Some(root) if config.output_dir.is_relative() => PathBuf::from(root).join(&config.output_dir),
        _ => config.output_dir.clone(),
    }
}

pub const OUTPUT_ROOT_VAR: &str = "SEMIRECON_OUTPUT_ROOT";
