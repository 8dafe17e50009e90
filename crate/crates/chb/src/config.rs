//! TOML experiment configuration.
//!
//! Every key is optional except `experiment`; missing keys take the defaults
//! of the named experiment (see [`ExperimentConfig::resolve`]). Unknown keys
//! are rejected.

use std::path::{Path, PathBuf};

use chb_core::material::{Eigenstrain, Endpoints, Mat3, MaterialParams, Mobility, Source};
use chb_core::scheme::SchemeConfig;
use serde::{Deserialize, Serialize};

use crate::experiments::{self, InitialData};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentName {
    Convergence,
    Lshape,
    Tumour,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_time: Option<f64>,
    /// Relative paths are taken below the output root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Write a VTK snapshot every this many steps (0: only at `snapshot_times`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_stride: Option<usize>,
    /// Extra snapshots at the steps nearest to these times.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chl_mode: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialData>,
    #[serde(default, skip_serializing_if = "ParamOverrides::is_empty")]
    pub params: ParamOverrides,
    #[serde(default, skip_serializing_if = "SourceOverrides::is_empty")]
    pub sources: SourceOverrides,
    #[serde(default, skip_serializing_if = "SolverOverrides::is_empty")]
    pub solver: SolverOverrides,
}

/// Overrides of the material parameters; pairs are `[φ = −1, φ = 1]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mobility: Option<MobilitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub biot_modulus: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stiffness_minus: Option<Mat3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stiffness_plus: Option<Mat3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub viscosity_minus: Option<Mat3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub viscosity_plus: Option<Mat3>,
    /// 𝒯(φ) = slope·(φ + shift)·I.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenstrain: Option<EigenstrainSpec>,
}

impl ParamOverrides {
    fn is_empty(&self) -> bool {
        self == &Self::default()
    }

    pub fn apply(&self, p: &mut MaterialParams) {
        if let Some(g) = self.gamma {
            p.gamma = g;
        }
        if let Some(m) = self.mobility {
            p.mobility = m.into();
        }
        let pair = |v: [f64; 2]| Endpoints::new(v[0], v[1]);
        if let Some(v) = self.kappa {
            p.kappa = pair(v);
        }
        if let Some(v) = self.biot_modulus {
            p.biot_modulus = pair(v);
        }
        if let Some(v) = self.alpha {
            p.alpha = pair(v);
        }
        if let Some(c) = self.stiffness_minus {
            p.stiffness.minus = c;
        }
        if let Some(c) = self.stiffness_plus {
            p.stiffness.plus = c;
        }
        if let Some(c) = self.viscosity_minus {
            p.viscosity.minus = c;
        }
        if let Some(c) = self.viscosity_plus {
            p.viscosity.plus = c;
        }
        if let Some(e) = self.eigenstrain {
            p.eigenstrain = Eigenstrain {
                slope: e.slope,
                shift: e.shift,
            };
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MobilitySpec {
    Constant { value: f64 },
    /// floor + scale·(φ² − 1)².
    Degenerate { floor: f64, scale: f64 },
}

impl From<MobilitySpec> for Mobility {
    fn from(m: MobilitySpec) -> Self {
        match m {
            MobilitySpec::Constant { value } => Mobility::Constant(value),
            MobilitySpec::Degenerate { floor, scale } => Mobility::Degenerate { floor, scale },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenstrainSpec {
    pub slope: f64,
    #[serde(default)]
    pub shift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SourceSpec {
    // A struct variant, so that stray keys are rejected.
    Zero {},
    Constant { value: f64 },
    /// rate·(1 − φ²).
    Logistic { rate: f64 },
}

impl From<SourceSpec> for Source {
    fn from(s: SourceSpec) -> Self {
        match s {
            SourceSpec::Zero {} => Source::Zero,
            SourceSpec::Constant { value } => Source::Constant(value),
            SourceSpec::Logistic { rate } => Source::Logistic { rate },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceOverrides {
    /// r in the phase-field equation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<SourceSpec>,
    /// s in the fluid equation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fluid: Option<SourceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_force: Option<[f64; 2]>,
}

impl SourceOverrides {
    fn is_empty(&self) -> bool {
        self == &Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newton_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newton_max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_degree: Option<usize>,
}

impl SolverOverrides {
    fn is_empty(&self) -> bool {
        self == &Self::default()
    }
}

/// A configuration with every default filled in and validated.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub experiment: ExperimentName,
    pub level: usize,
    pub scheme: SchemeConfig,
    pub params: MaterialParams,
    pub initial: InitialData,
    pub output_dir: PathBuf,
    pub snapshot_stride: usize,
    pub snapshot_times: Vec<f64>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if c.experiment.is_none() {
            return Err(Error::Config("missing key `experiment`".into()));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable")
    }

    pub fn named(name: ExperimentName) -> Self {
        Self {
            experiment: Some(name),
            ..Self::default()
        }
    }

    /// Fills in the defaults of the named experiment and validates.
    /// `output_root` prefixes a relative `output_dir`.
    pub fn resolve(&self, output_root: &Path) -> Result<Resolved> {
        let name = self.experiment.ok_or_else(|| Error::Config("missing key `experiment`".into()))?;
        let d = experiments::defaults(name);
        let mut params = d.params;
        self.params.apply(&mut params);
        if let Some(s) = self.sources.phase {
            params.phase_source = s.into();
        }
        if let Some(s) = self.sources.fluid {
            params.fluid_source = s.into();
        }
        if let Some(f) = self.sources.body_force {
            params.body_force = f;
        }
        let mut scheme = SchemeConfig {
            tau: self.tau.unwrap_or(d.tau),
            final_time: self.final_time.unwrap_or(d.final_time),
            chl_mode: self.chl_mode.unwrap_or(false),
            ..SchemeConfig::default()
        };
        let s = &self.solver;
        scheme.newton_tol = s.newton_tol.unwrap_or(scheme.newton_tol);
        scheme.newton_max_iters = s.newton_max_iters.unwrap_or(scheme.newton_max_iters);
        scheme.time_points = s.time_points.unwrap_or(scheme.time_points);
        scheme.quad_degree = s.quad_degree.unwrap_or(scheme.quad_degree);
        scheme.validate()?;
        params.validate()?;
        let initial = match (&self.initial, d.initial) {
            (Some(i), _) => i.clone(),
            (None, Some(i)) => i,
            (None, None) => return Err(Error::Config("a custom experiment needs an [initial] section".into())),
        };
        initial.validate()?;
        let level = self.level.unwrap_or(d.level);
        if level > 10 {
            return Err(Error::Config(format!("mesh level {level} is too fine (at most 10)")));
        }
        let dir = self.output_dir.clone().unwrap_or_else(|| PathBuf::from(d.output_dir));
        Ok(Resolved {
            experiment: name,
            level,
            scheme,
            params,
            initial,
            output_dir: output_root.join(dir),
            snapshot_stride: self.snapshot_stride.unwrap_or(d.snapshot_stride),
            snapshot_times: self.snapshot_times.clone().unwrap_or(d.snapshot_times),
        })
    }
}
