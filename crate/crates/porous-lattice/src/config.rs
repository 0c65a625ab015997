//! JSON experiment configuration: schema, defaults, validation, and
//! resolution into model/lab objects.
//!
//! A config has five sections — `model`, `noise`, `integrator`,
//! `experiment`, `output` — all but `model` optional. Site data (`g`, `a`,
//! initial states) is given by named profiles, inline values, or a CSV file
//! of one value per line. Unknown keys are rejected so typos surface as
//! config errors rather than silently applied defaults.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attractor::{CloudSpec, LabSetup};
use crate::dynamics::{IntegrationOptions, ModelParams};
use crate::error::{Error, Result};
use crate::lattice::SiteSequence;
use crate::nonlinearity::PhiSpec;

/// A per-site value profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SiteProfile {
    /// All sites zero.
    Zero,
    /// `amplitude * exp(-(i-center)^2 / (2 width^2))`, optionally truncated
    /// to `|i - center| <= support`.
    GaussianBump {
        amplitude: f64,
        #[serde(default)]
        center: i64,
        width: f64,
        #[serde(default)]
        support: Option<u32>,
    },
    /// `amplitude * ratio^{|i|}` with `|ratio| < 1`.
    GeometricDecay { amplitude: f64, ratio: f64 },
    /// Explicit values for sites `-N..=N`, length `2N+1`.
    Inline { values: Vec<f64> },
    /// One value per line, sites `-N..=N` top to bottom.
    Csv { path: PathBuf },
}

impl Default for SiteProfile {
    fn default() -> Self {
        SiteProfile::Zero
    }
}

impl SiteProfile {
    pub fn resolve(&self, half_width: usize) -> Result<SiteSequence> {
        match self {
            SiteProfile::Zero => Ok(SiteSequence::zeros(half_width)),
            SiteProfile::GaussianBump {
                amplitude,
                center,
                width,
                support,
            } => {
                if !(*width > 0.0) {
                    return Err(Error::Config(format!(
                        "gaussian-bump width must be positive, got {width}"
                    )));
                }
                Ok(SiteSequence::from_fn(half_width, |i| {
                    let d = (i - center) as f64;
                    if support.map_or(false, |s| (i - center).unsigned_abs() > u64::from(s)) {
                        0.0
                    } else {
                        amplitude * (-d * d / (2.0 * width * width)).exp()
                    }
                }))
            }
            SiteProfile::GeometricDecay { amplitude, ratio } => {
                if !(ratio.abs() < 1.0) {
                    return Err(Error::Config(format!(
                        "geometric-decay ratio must satisfy |ratio| < 1, got {ratio}"
                    )));
                }
                Ok(SiteSequence::from_fn(half_width, |i| {
                    amplitude * ratio.powi(i.unsigned_abs() as i32)
                }))
            }
            SiteProfile::Inline { values } => SiteSequence::from_values(half_width, values.clone())
                .map_err(|e| Error::Config(format!("inline profile: {e}"))),
            SiteProfile::Csv { path } => {
                let text = fs::read_to_string(path)?;
                let values: Vec<f64> = text
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(|l| {
                        l.parse::<f64>().map_err(|_| {
                            Error::Config(format!("{}: bad number {l:?}", path.display()))
                        })
                    })
                    .collect::<Result<_>>()?;
                SiteSequence::from_values(half_width, values)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub half_width: usize,
    pub lambda: f64,
    pub p: f64,
    pub alpha: f64,
    #[serde(default)]
    pub g: SiteProfile,
    #[serde(default)]
    pub a: SiteProfile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub seeds: Vec<u64>,
    pub dt: f64,
    /// Backward history kept beyond what experiments consume.
    pub history: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            seeds: vec![1],
            dt: 0.01,
            history: 50.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub tol: f64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self { tol: 1e-8 }
    }
}

/// Overrides for the nonlinearity certificates; unset fields fall back to
/// the suggested constants (and zero offset bound).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsSection {
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub k: Option<f64>,
    pub a: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CloudSection {
    /// Axis sites for deterministic samples; defaults to 0, ±N/2, ±N.
    pub axis_sites: Option<Vec<i64>>,
    pub random_directions: usize,
    pub include_zero: bool,
}

impl Default for CloudSection {
    fn default() -> Self {
        Self {
            axis_sites: None,
            random_directions: 6,
            include_zero: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// Forward horizon of `simulate`.
    pub t_end: f64,
    /// Number of uniform checkpoints recorded per trajectory.
    pub checkpoints: usize,
    /// Initial state of `simulate`.
    pub initial: SiteProfile,
    /// Tail cuts reported in trajectory CSV columns; defaults to N/4, N/2.
    pub tail_cuts: Option<Vec<usize>>,
    /// Ball radius for `absorb`.
    pub ball_radius: f64,
    pub pullback_times: Vec<f64>,
    /// Tail targets for `tails`.
    pub epsilons: Vec<f64>,
    /// Temperedness rates for the `absorb` report.
    pub gammas: Vec<f64>,
    /// Quadrature horizon of the absorbing radius.
    pub quad_horizon: f64,
    /// Cut-off scale for `tails`; defaults to `max(1, N/4)`.
    pub cut: Option<usize>,
    /// Radii of the two balls compared by `pullback`.
    pub pullback_radii: [f64; 2],
    pub cloud: CloudSection,
    pub constants: ConstantsSection,
    /// Forward span of the `ou-diag` path.
    pub diag_horizon: f64,
    /// Temperedness verdict threshold for `ou-diag`.
    pub diag_threshold: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            t_end: 5.0,
            checkpoints: 100,
            initial: SiteProfile::Zero,
            tail_cuts: None,
            ball_radius: 10.0,
            pullback_times: vec![1.0, 2.0, 4.0, 8.0],
            epsilons: vec![1e-1, 1e-2, 1e-3],
            gammas: vec![0.1],
            quad_horizon: 50.0,
            cut: None,
            pullback_radii: [1.0, 10.0],
            cloud: CloudSection::default(),
            constants: ConstantsSection::default(),
            diag_horizon: 200.0,
            diag_threshold: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub emit_plot_data: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            emit_plot_data: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ExperimentConfig {
    /// Parses and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if !(m.lambda > 0.0) || !m.lambda.is_finite() {
            return Err(Error::Config(format!(
                "model.lambda must be positive, got {}",
                m.lambda
            )));
        }
        if !(m.p > 1.0) || !m.p.is_finite() {
            return Err(Error::Config(format!("model.p must exceed 1, got {}", m.p)));
        }
        if !m.alpha.is_finite() {
            return Err(Error::Config("model.alpha must be finite".to_string()));
        }
        let n = &self.noise;
        if n.seeds.is_empty() {
            return Err(Error::Config("noise.seeds must be non-empty".to_string()));
        }
        if !(n.dt > 0.0) || !(n.dt <= 1.0) {
            return Err(Error::Config(format!(
                "noise.dt must lie in (0, 1], got {}",
                n.dt
            )));
        }
        if !(n.history >= 10.0) {
            return Err(Error::Config(format!(
                "noise.history must be at least 10, got {}",
                n.history
            )));
        }
        if !(self.integrator.tol > 0.0) || !(self.integrator.tol <= 1e-2) {
            return Err(Error::Config(format!(
                "integrator.tol must lie in (0, 1e-2], got {}",
                self.integrator.tol
            )));
        }
        let e = &self.experiment;
        if !(e.t_end > 0.0) || e.checkpoints == 0 {
            return Err(Error::Config(
                "experiment.t_end must be positive and checkpoints at least 1".to_string(),
            ));
        }
        if !(e.ball_radius >= 0.0) {
            return Err(Error::Config(format!(
                "experiment.ball_radius must be nonnegative, got {}",
                e.ball_radius
            )));
        }
        if e.pullback_times.is_empty() {
            return Err(Error::Config(
                "experiment.pullback_times must be non-empty".to_string(),
            ));
        }
        let ratio = e.quad_horizon / n.dt;
        if !(e.quad_horizon > 0.0) || (ratio - ratio.round()).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "experiment.quad_horizon must be a positive multiple of noise.dt, got {}",
                e.quad_horizon
            )));
        }
        if let Some(cut) = e.cut {
            if cut == 0 || 2 * cut > m.half_width {
                return Err(Error::Config(format!(
                    "experiment.cut must satisfy 1 <= cut <= half_width/2, got {cut}"
                )));
            }
        }
        if let Some(cuts) = &e.tail_cuts {
            if cuts.iter().any(|&c| c > m.half_width) {
                return Err(Error::Config(
                    "experiment.tail_cuts must not exceed half_width".to_string(),
                ));
            }
        }
        // resolving the profiles exercises their own validity checks
        self.model.g.resolve(m.half_width)?;
        self.model.a.resolve(m.half_width)?;
        e.initial.resolve(m.half_width)?;
        Ok(())
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let m = &self.model;
        ModelParams::new(
            m.half_width,
            m.lambda,
            m.alpha,
            PhiSpec::power_law(m.p)?,
            m.g.resolve(m.half_width)?,
            m.a.resolve(m.half_width)?,
        )
    }

    pub fn lab_setup(&self) -> LabSetup {
        LabSetup {
            noise_dt: self.noise.dt,
            history: self.noise.history,
            tol: self.integrator.tol,
            quad_horizon: self.experiment.quad_horizon,
        }
    }

    pub fn cloud_spec(&self) -> CloudSpec {
        let defaults = CloudSpec::default_for(self.model.half_width);
        CloudSpec {
            axis_sites: self
                .experiment
                .cloud
                .axis_sites
                .clone()
                .unwrap_or(defaults.axis_sites),
            random_directions: self.experiment.cloud.random_directions,
            include_zero: self.experiment.cloud.include_zero,
        }
    }

    pub fn integration_options(&self, t_end: f64) -> IntegrationOptions {
        IntegrationOptions::with_tol(self.integrator.tol)
            .uniform_checkpoints(self.experiment.checkpoints, t_end)
    }

    /// Tail columns for trajectory exports.
    pub fn tail_cuts(&self) -> Vec<usize> {
        self.experiment.tail_cuts.clone().unwrap_or_else(|| {
            let n = self.model.half_width;
            let mut cuts = vec![n / 4, n / 2];
            cuts.retain(|&c| c > 0);
            cuts.dedup();
            cuts
        })
    }

    /// Cut-off scale for the tails experiment.
    pub fn nullity_cut(&self) -> usize {
        self.experiment
            .cut
            .unwrap_or_else(|| (self.model.half_width / 4).max(1))
    }

    /// The exact resolved config as a JSON value, for manifests.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
