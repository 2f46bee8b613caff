//! Experiment configuration, read from JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sparsecert_core::gaussian::{default_margin, Profile};
use sparsecert_core::{GaussianKernel, HoloParams, Lattice, OmpConfig, ParticleScene, TrainSpec};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: ModelConfig,
    pub signal: SignalConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: OmpConfig,
    #[serde(default)]
    pub outputs: OutputNames,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// Peak trains blurred by a Gaussian, sampled at integer positions
    /// (`oversample` samples per unit).
    Gaussian {
        sigma: f64,
        #[serde(default = "one")]
        oversample: usize,
        /// Window margin around the train; defaults to `4 sigma`.
        #[serde(default)]
        margin: Option<f64>,
        /// Atom scaling. With `unit_peak`, coefficients are peak heights.
        #[serde(default = "unit_peak")]
        profile: Profile,
    },
    /// In-line holograms of opaque disks.
    Fresnel {
        params: HoloParams,
        /// Candidate particle positions; derived from the scene when absent.
        #[serde(default)]
        candidates: Option<Lattice>,
    },
    /// Orthonormal basis of `R^n`.
    Identity { n: usize },
}

fn one() -> usize {
    1
}

fn unit_peak() -> Profile {
    Profile::UnitPeak
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalConfig {
    Train(TrainSpec),
    Particles(ParticleScene),
    /// Explicit `(index, coefficient)` pairs, for the identity model.
    Sparse { coefficients: Vec<(usize, f64)> },
    /// Only the support size and minimal separation are known; certificates
    /// fall back to the worst-case separation bounds.
    Separation {
        rho: f64,
        /// Support size; absent means unbounded.
        #[serde(default)]
        count: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseConfig {
    #[default]
    None,
    /// Additive background counts: each sample gets `Poisson(baseline) -
    /// baseline`.
    Poisson { baseline: f64 },
    /// Counts drawn about the signal itself: `Poisson(v + baseline) -
    /// baseline`.
    PoissonShot { baseline: f64 },
    Gaussian { std: f64 },
}

/// File names inside the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputNames {
    pub clean: String,
    pub noisy: String,
    pub support: String,
    pub hologram: String,
    pub report: String,
    pub certificate: String,
}

impl Default for OutputNames {
    fn default() -> Self {
        Self {
            clean: "clean.dat".into(),
            noisy: "noisy.dat".into(),
            support: "support.dat".into(),
            hologram: "hologram.pgm".into(),
            report: "report.json".into(),
            certificate: "certificate.json".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.solver.validate()?;
        match &self.model {
            ModelConfig::Gaussian {
                sigma,
                oversample,
                margin,
                ..
            } => {
                GaussianKernel::new(*sigma)?;
                if *oversample == 0 {
                    return Err(CliError::Config("oversample must be >= 1".into()));
                }
                if margin.is_some_and(|m| !(m >= 0.0)) {
                    return Err(CliError::Config("margin must be >= 0".into()));
                }
            }
            ModelConfig::Fresnel { params, .. } => params.validate()?,
            ModelConfig::Identity { n } => {
                if *n == 0 {
                    return Err(CliError::Config("identity model needs n >= 1".into()));
                }
            }
        }
        match (&self.model, &self.signal) {
            (ModelConfig::Gaussian { .. }, SignalConfig::Train(t)) => t.validate()?,
            (ModelConfig::Fresnel { .. }, SignalConfig::Particles(s)) => s.validate()?,
            (ModelConfig::Identity { n }, SignalConfig::Sparse { coefficients }) => {
                if coefficients.is_empty() {
                    return Err(CliError::Config("sparse signal needs at least one entry".into()));
                }
                if let Some((i, _)) = coefficients.iter().find(|(i, _)| i >= n) {
                    return Err(CliError::Config(format!("index {i} outside the {n} atoms")));
                }
            }
            (_, SignalConfig::Separation { rho, count }) => {
                if !(*rho > 0.0) || *count == Some(0) {
                    return Err(CliError::Config("separation needs rho > 0 and count >= 1".into()));
                }
            }
            _ => {
                return Err(CliError::Config(
                    "signal kind does not match the model (gaussian/train, fresnel/particles, identity/sparse)".into(),
                ))
            }
        }
        match self.noise {
            NoiseConfig::None => {}
            NoiseConfig::Poisson { baseline } | NoiseConfig::PoissonShot { baseline } => {
                if !(baseline >= 0.0 && baseline.is_finite()) {
                    return Err(CliError::Config("baseline must be finite and >= 0".into()));
                }
            }
            NoiseConfig::Gaussian { std } => {
                if !(std >= 0.0 && std.is_finite()) {
                    return Err(CliError::Config("std must be finite and >= 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Gaussian window margin in lattice units.
    pub fn gaussian_margin(&self) -> Option<f64> {
        match self.model {
            ModelConfig::Gaussian { sigma, margin, .. } => Some(margin.unwrap_or(default_margin(sigma))),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ISOTOPE: &str = r#"{
        "schema_version": 1,
        "model": {"kind": "gaussian", "sigma": 1.125},
        "signal": {"kind": "train", "positions": [0, 5, 10, 15], "heights": [130, 220, 180, 90]},
        "noise": {"kind": "poisson", "baseline": 1.5},
        "seed": 7
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_json(ISOTOPE).unwrap();
        assert_eq!(cfg.noise, NoiseConfig::Poisson { baseline: 1.5 });
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_json(), cfg.to_json());
    }

    #[test]
    fn odd_floats_round_trip_exactly() {
        let mut cfg = ExperimentConfig::from_json(ISOTOPE).unwrap();
        for sigma in [0.1 + 0.2, 1.0 / 3.0, 2.0f64.sqrt(), 1.125e-7, 5e-324] {
            cfg.model = ModelConfig::Gaussian {
                sigma,
                oversample: 1,
                margin: Some(std::f64::consts::PI),
                profile: Profile::UnitPeak,
            };
            let back: ExperimentConfig = serde_json::from_str(&cfg.to_json()).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn rejects_mismatched_signal() {
        let bad = ISOTOPE.replace(r#""kind": "gaussian", "sigma": 1.125"#, r#""kind": "identity", "n": 4"#);
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(CliError::Config(_))));
    }

    #[test]
    fn rejects_unknown_fields_and_versions() {
        let bad = ISOTOPE.replace("\"seed\": 7", "\"seed\": 7, \"sed\": 1");
        assert!(ExperimentConfig::from_json(&bad).is_err());
        let bad = ISOTOPE.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }
}
