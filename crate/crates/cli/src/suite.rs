//! Randomized end-to-end regression runs over both physical models.
//!
//! Every run simulates, recovers and certifies one random instance. A run
//! whose certificate passes without exact recovery is a soundness
//! violation.

use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sparsecert_core::{HoloParams, Lattice, OmpConfig, ParticleScene, TrainSpec};

use crate::config::{ExperimentConfig, ModelConfig, NoiseConfig, OutputNames, SignalConfig, SCHEMA_VERSION};
use crate::error::CliError;
use crate::io::write_json;
use crate::report::{recover, RunReport};
use crate::simulate::simulate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub seed: u64,
    pub gaussian_runs: usize,
    pub fresnel_runs: usize,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            gaussian_runs: 400,
            fresnel_runs: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub run: usize,
    pub model: String,
    pub certified: bool,
    pub exact_recovery: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub schema_version: u32,
    pub spec: SuiteSpec,
    pub runs: usize,
    pub certified: usize,
    pub exact: usize,
    pub errors: usize,
    /// Runs certified without exact recovery.
    pub violations: Vec<usize>,
    pub outcomes: Vec<RunOutcome>,
}

fn rng_for(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

fn pick_noise(rng: &mut impl Rng, scale: f64) -> NoiseConfig {
    match rng.random_range(0..4) {
        0 => NoiseConfig::None,
        1 => NoiseConfig::Poisson {
            baseline: scale * rng.random_range(0.2..5.0),
        },
        2 => NoiseConfig::PoissonShot {
            baseline: scale * rng.random_range(0.2..5.0),
        },
        _ => NoiseConfig::Gaussian {
            std: scale * rng.random_range(0.1..3.0),
        },
    }
}

/// Random peak train: 1 to 5 peaks at least `rho` apart, heights 20 to 200.
pub fn gaussian_config(seed: u64, run: usize) -> ExperimentConfig {
    let mut rng = rng_for(seed, run);
    let sigma = rng.random_range(0.5..2.0);
    let rho: i64 = rng.random_range(1..=10);
    let n = rng.random_range(1..=5);
    let mut positions = vec![0i64];
    while positions.len() < n {
        let last = *positions.last().unwrap();
        positions.push(last + rho + rng.random_range(0..=3));
    }
    let heights = (0..n).map(|_| rng.random_range(20.0..200.0)).collect();
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        model: ModelConfig::Gaussian {
            sigma,
            oversample: 1,
            margin: None,
            profile: sparsecert_core::gaussian::Profile::UnitPeak,
        },
        signal: SignalConfig::Train(TrainSpec { positions, heights }),
        noise: pick_noise(&mut rng, 1.0),
        seed: rng.next_u64(),
        solver: OmpConfig::default(),
        outputs: OutputNames::default(),
    }
}

/// Random row of 2 or 3 particles on a line of candidates, imaged on a
/// coarse sensor so that a run stays cheap.
pub fn fresnel_config(seed: u64, run: usize) -> ExperimentConfig {
    let mut rng = rng_for(seed, run);
    let r = [25.0, 50.0][rng.random_range(0..2)];
    let params = HoloParams {
        pixel_pitch: 25.0,
        field_extent: 1250.0,
        ..HoloParams::new(0.6328, 200_000.0, r)
    };
    let half = (1000.0 / params.delta) as i64;
    let candidates = Lattice::Line {
        origin: -(half as f64) * params.delta,
        spacing: params.delta,
        count: (2 * half + 1) as usize,
    };
    let count = rng.random_range(2..=3);
    let mut steps = vec![rng.random_range(-half..=-half / 2)];
    while steps.len() < count {
        let last = *steps.last().unwrap();
        let gap = rng.random_range(4..=half);
        steps.push((last + gap).min(half));
    }
    steps.dedup();
    let centers: Vec<(f64, f64)> = steps.iter().map(|&k| (k as f64 * params.delta, 0.0)).collect();
    let amplitudes = centers.iter().map(|_| rng.random_range(0.5..2.0)).collect();
    let noise = match rng.random_range(0..3) {
        0 => NoiseConfig::None,
        _ => NoiseConfig::Gaussian {
            std: rng.random_range(0.0005..0.01),
        },
    };
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        model: ModelConfig::Fresnel {
            params,
            candidates: Some(candidates),
        },
        signal: SignalConfig::Particles(ParticleScene { centers, amplitudes }),
        noise,
        seed: rng.next_u64(),
        solver: OmpConfig::default(),
        outputs: OutputNames::default(),
    }
}

fn run_one(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let sim = simulate(cfg)?;
    recover(&sim.problem, &sim.noisy, Some(&sim.problem.clean), &cfg.solver, false)
}

/// Runs the suite and, if `out` is given, writes `run_NNNN/config.json`,
/// `run_NNNN/report.json` and `summary.json` below it.
pub fn run_suite(spec: &SuiteSpec, out: Option<&Path>) -> Result<SuiteSummary, CliError> {
    let total = spec.gaussian_runs + spec.fresnel_runs;
    let configs: Vec<ExperimentConfig> = (0..total)
        .map(|k| {
            if k < spec.gaussian_runs {
                gaussian_config(spec.seed, k)
            } else {
                fresnel_config(spec.seed, k)
            }
        })
        .collect();
    let results: Vec<Result<RunReport, CliError>> = configs.par_iter().map(run_one).collect();

    let mut outcomes = Vec::with_capacity(total);
    for (k, (cfg, res)) in configs.iter().zip(&results).enumerate() {
        let model = match cfg.model {
            ModelConfig::Gaussian { .. } => "gaussian",
            ModelConfig::Fresnel { .. } => "fresnel",
            ModelConfig::Identity { .. } => "identity",
        };
        let outcome = match res {
            Ok(rep) => RunOutcome {
                run: k,
                model: model.into(),
                certified: rep.certified(),
                exact_recovery: rep.exact_recovery,
                error: None,
            },
            Err(e) => RunOutcome {
                run: k,
                model: model.into(),
                certified: false,
                exact_recovery: false,
                error: Some(e.to_string()),
            },
        };
        if let Some(dir) = out {
            let run_dir = dir.join(format!("run_{k:04}"));
            write_json(&run_dir.join("config.json"), cfg)?;
            if let Ok(rep) = res {
                write_json(&run_dir.join("report.json"), rep)?;
            }
        }
        outcomes.push(outcome);
    }
    let summary = SuiteSummary {
        schema_version: SCHEMA_VERSION,
        spec: *spec,
        runs: total,
        certified: outcomes.iter().filter(|o| o.certified).count(),
        exact: outcomes.iter().filter(|o| o.exact_recovery).count(),
        errors: outcomes.iter().filter(|o| o.error.is_some()).count(),
        violations: outcomes
            .iter()
            .filter(|o| o.certified && !o.exact_recovery)
            .map(|o| o.run)
            .collect(),
        outcomes,
    };
    if let Some(dir) = out {
        write_json(&dir.join("summary.json"), &summary)?;
    }
    Ok(summary)
}
