//! Recovery runs and their JSON reports.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use sparsecert_core::certificates::noise_ratio;
use sparsecert_core::{certify, omp, Noise, NoiseToSignal, OmpConfig, RecoveryCertificate};

use crate::config::SCHEMA_VERSION;
use crate::error::CliError;
use crate::simulate::Problem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub solve_ms: f64,
    pub certify_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub true_support: Vec<usize>,
    pub recovered_support: Vec<usize>,
    pub exact_recovery: bool,
    /// `||alpha_hat - alpha||_1` in solver coefficient units.
    pub l1_error: f64,
    pub recovered_coefficients: Vec<f64>,
    /// `||v||` followed by the residual norm after each selection.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// Stopping threshold handed to the solver.
    pub epsilon: f64,
    /// Ratio from the realized noise, `sup_i |<eta, d_i>| / min |alpha_i| ||K e_i||`.
    /// Absent when the clean data was not available.
    pub noise_ratio_exact: Option<f64>,
    /// Certificate at the ratio `epsilon / min |alpha_i| ||K e_i||`.
    pub certificate: Option<RecoveryCertificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate_error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl RunReport {
    pub fn certified(&self) -> bool {
        self.certificate.as_ref().is_some_and(|c| c.passes())
    }
}

/// Runs OMP on `observation` and certifies the true support.
///
/// With the clean data at hand the stopping threshold is the realized noise
/// norm; otherwise `solver.epsilon` is used as given.
pub fn recover(
    problem: &Problem,
    observation: &[f64],
    clean: Option<&[f64]>,
    solver: &OmpConfig,
    timings: bool,
) -> Result<RunReport, CliError> {
    if observation.len() != problem.clean.len() {
        return Err(CliError::Solver(sparsecert_core::Error::DimensionMismatch {
            expected: problem.clean.len(),
            found: observation.len(),
        }));
    }
    let eta: Option<Vec<f64>> = clean.map(|c| observation.iter().zip(c).map(|(a, b)| a - b).collect());
    let epsilon = match &eta {
        Some(e) => e.iter().map(|x| x * x).sum::<f64>().sqrt(),
        None => solver.epsilon,
    };
    let cfg = OmpConfig {
        epsilon,
        ..solver.clone()
    };

    let dict = problem.dict()?;
    let t0 = Instant::now();
    let trace = omp(dict, observation, &cfg)?;
    let solve_ms = t0.elapsed().as_secs_f64() * 1e3;

    let truth = &problem.truth;
    let exact_ratio = match &eta {
        Some(e) => Some(noise_ratio(dict, truth, Noise::Exact(e))?.value),
        None => None,
    };
    let t1 = Instant::now();
    let r = noise_ratio(dict, truth, Noise::Bound(epsilon))?;
    let (certificate, certificate_error) = match certify(dict, truth.support(), &r) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let certify_ms = t1.elapsed().as_secs_f64() * 1e3;

    let recovered = trace.support().indices().to_vec();
    let true_support = truth.support().indices().to_vec();
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        exact_recovery: recovered == true_support,
        l1_error: trace.solution.l1_distance(truth),
        recovered_coefficients: trace.solution.coefficients().to_vec(),
        residual_history: trace.residual_norms.clone(),
        converged: trace.converged,
        epsilon,
        noise_ratio_exact: exact_ratio,
        certificate,
        certificate_error,
        warnings: problem.warnings.clone(),
        timings: timings.then_some(Timings { solve_ms, certify_ms }),
        true_support,
        recovered_support: recovered,
    })
}

/// Report for `certify` on an explicit support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub schema_version: u32,
    pub support: Vec<usize>,
    pub certificate: RecoveryCertificate,
}

/// Report for `certify` when only the separation is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub schema_version: u32,
    pub rho: f64,
    /// Absent for an unbounded support.
    pub count: Option<usize>,
    pub r: NoiseToSignal,
    /// Worst-case bound on the Neumann sums.
    pub lhs: f64,
    pub pass: bool,
    /// Largest ratio at which the bound still passes.
    pub max_ratio: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}
