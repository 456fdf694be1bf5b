//! TOML experiment descriptions.

use std::path::Path;

use evtobs_core::dimensions::DEFAULT_Q_GRID;
use evtobs_core::dynsys::SystemSpec;
use evtobs_core::evt::TargetChoice;
use evtobs_core::observables::{Metric, ObservableSpec};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

/// Either a named preset or an explicit system, observable, target and method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default)]
    pub full_scale: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<ObservableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Method {
    Dimension(DimensionParams),
    Ei(EiParams),
    Visits(VisitParams),
    Spectrum(SpectrumParams),
    Embed(EmbedParams),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Dimension(_) => "dimension",
            Method::Ei(_) => "ei",
            Method::Visits(_) => "visits",
            Method::Spectrum(_) => "spectrum",
            Method::Embed(_) => "embed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimensionParams {
    /// Orbit length per trial.
    pub m: usize,
    /// Block size.
    pub n: usize,
    pub trials: usize,
    pub gumbel_constrained: bool,
}

impl Default for DimensionParams {
    fn default() -> Self {
        Self {
            m: 1_000_000,
            n: 1_000,
            trials: 5,
            gumbel_constrained: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EiParams {
    pub m: usize,
    pub quantile: f64,
    /// Truncation order of `theta_K`.
    pub k: usize,
    pub trials: usize,
}

impl Default for EiParams {
    fn default() -> Self {
        Self {
            m: 10_000_000,
            quantile: 0.999,
            k: 5,
            trials: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VisitParams {
    pub t: f64,
    /// Target measure of the ball; the radius is the matching quantile of
    /// `phi` along a pilot orbit. Ignored when `radius` is set.
    pub measure: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    pub orbit_len: usize,
    pub ensemble: usize,
    pub pilot_len: usize,
    /// Longest return searched for the analytic two-preimage law.
    pub max_order: usize,
    /// Pólya-Aeppli parameter; defaults to the analytic extremal index when
    /// one is available.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polya_aeppli_p: Option<f64>,
}

impl Default for VisitParams {
    fn default() -> Self {
        Self {
            t: 30.0,
            measure: 1e-3,
            radius: None,
            orbit_len: 1_000_000,
            ensemble: 10_000,
            pilot_len: 10_000_000,
            max_order: 8,
            polya_aeppli_p: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumParams {
    /// Sample size after burn-in.
    pub points: usize,
    pub burn_in: usize,
    pub q: Vec<f64>,
    /// Largest radius; the grid extends `decades` below it.
    pub r_hi: f64,
    pub decades: f64,
    pub n_ref: usize,
    pub metric: Metric,
    /// Points of the rate-function grid.
    pub s_points: usize,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        Self {
            points: 1_000_000,
            burn_in: 1_000,
            q: DEFAULT_Q_GRID.to_vec(),
            r_hi: 0.1,
            decades: 2.0,
            n_ref: 2_000,
            metric: Metric::Euclidean,
            s_points: 81,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedParams {
    pub k_max: usize,
    pub lag: usize,
    pub m: usize,
    pub n: usize,
    pub trials: usize,
}

impl Default for EmbedParams {
    fn default() -> Self {
        Self {
            k_max: 5,
            lag: 1,
            m: 4_000_000,
            n: 1_000,
            trials: 5,
        }
    }
}

/// The explicit part of a config.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub system: SystemSpec,
    pub observable: ObservableSpec,
    pub target: TargetChoice,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// System, observable and target; a missing target means a point sampled
    /// from the attractor per trial.
    pub fn experiment(&self) -> Result<Experiment> {
        let missing = |what: &str| Error::Config(format!("no {what} given and no preset named"));
        let system = self.system.clone().ok_or_else(|| missing("system"))?;
        let observable = self.observable.clone().ok_or_else(|| missing("observable"))?;
        let target = self.target.clone().unwrap_or(TargetChoice::Sampled {
            metric: Metric::Euclidean,
        });
        observable.validate(system.dim())?;
        Ok(Experiment {
            system,
            observable,
            target,
            seed: self.seed,
        })
    }

    /// The method to run for subcommand `name`: the configured one when it
    /// matches, otherwise defaults.
    pub fn method_for(&self, name: &str) -> Result<Method> {
        match &self.method {
            Some(m) if m.name() == name => Ok(m.clone()),
            Some(m) => Err(Error::Config(format!(
                "config describes a {} run, not {name}",
                m.name()
            ))),
            None => Ok(match name {
                "dimension" => Method::Dimension(DimensionParams::default()),
                "ei" => Method::Ei(EiParams::default()),
                "visits" => Method::Visits(VisitParams::default()),
                "spectrum" => Method::Spectrum(SpectrumParams::default()),
                "embed" => Method::Embed(EmbedParams::default()),
                other => return Err(Error::Config(format!("unknown method {other:?}"))),
            }),
        }
    }
}
