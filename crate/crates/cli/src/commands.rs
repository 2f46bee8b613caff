//! The CLI verbs, as library calls writing into an output directory.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sparsecert_core::certificates::noise_ratio;
use sparsecert_core::fresnel::fresnel_neumann_bound;
use sparsecert_core::gaussian::{gauss_neumann_bound, mp_localization_curve};
use sparsecert_core::phase::{
    fresnel_boundary_curve, fresnel_lattice, fresnel_min_rho, gauss_boundary_curve, gauss_max_sigma,
};
use sparsecert_core::{certify, Curve, HoloParams, Noise, NoiseToSignal, SupportSize};

use crate::config::{ExperimentConfig, ModelConfig, SignalConfig, SCHEMA_VERSION};
use crate::error::CliError;
use crate::io::{read_values, write_dat, write_json, write_pgm16};
use crate::report::{recover, CertifyReport, RunReport, SeparationReport};
use crate::simulate::{simulate, Problem, Simulation};

/// Bisection tolerance in the swept variable.
pub const BISECTION_TOL: f64 = 1e-4;

/// Writes clean and noisy data, the true support and, for holograms, the
/// noisy image.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<Simulation, CliError> {
    let sim = simulate(cfg)?;
    let p = &sim.problem;
    let names = &cfg.outputs;
    let rows = |values: &[f64]| -> Vec<Vec<f64>> {
        values
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let mut row = p.coords.point(k);
                row.push(v);
                row
            })
            .collect()
    };
    write_dat(&out.join(&names.clean), rows(&p.clean))?;
    write_dat(&out.join(&names.noisy), rows(&sim.noisy))?;
    let support: Vec<Vec<f64>> = p
        .truth
        .iter()
        .map(|(i, a)| {
            let mut row = vec![i as f64];
            if let Some(l) = &p.lattice {
                let (x, y) = l.position(i);
                row.push(x);
                if matches!(cfg.model, ModelConfig::Fresnel { .. }) {
                    row.push(y);
                }
            }
            row.push(a);
            row
        })
        .collect();
    write_dat(&out.join(&names.support), support)?;
    if let Some(img) = &sim.hologram {
        write_pgm16(&out.join(&names.hologram), img)?;
    }
    for w in &p.warnings {
        eprintln!("warning: {w}");
    }
    Ok(sim)
}

/// Recovers from the noisy data file in `out`. The clean file, when present,
/// fixes the stopping threshold at the realized noise norm.
pub fn cmd_recover(cfg: &ExperimentConfig, out: &Path, timings: bool) -> Result<RunReport, CliError> {
    let problem = Problem::build(cfg)?;
    let noisy = read_values(&out.join(&cfg.outputs.noisy))?;
    let clean_path = out.join(&cfg.outputs.clean);
    let clean = if clean_path.exists() {
        Some(read_values(&clean_path)?)
    } else {
        None
    };
    let report = recover(&problem, &noisy, clean.as_deref(), &cfg.solver, timings)?;
    write_json(&out.join(&cfg.outputs.report), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CertifyOutput {
    Support(CertifyReport),
    Separation(SeparationReport),
}

/// Certificate for the configured support, or the worst-case separation
/// bound when only `rho` is configured. The noise ratio is `ratio` if given,
/// else `solver.epsilon` over the weakest configured component.
pub fn cmd_certify(cfg: &ExperimentConfig, out: &Path, ratio: Option<f64>) -> Result<CertifyOutput, CliError> {
    cfg.validate()?;
    if let Some(r) = ratio {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(CliError::Config(format!("noise ratio must be >= 0, got {r}")));
        }
    }
    let report = match &cfg.signal {
        SignalConfig::Separation { rho, count } => {
            let r = ratio.unwrap_or(0.0);
            let n = count.map_or(SupportSize::Infinite, SupportSize::Finite);
            let (bound, warnings) = match &cfg.model {
                ModelConfig::Gaussian { sigma, .. } => {
                    if rho.fract() != 0.0 {
                        return Err(CliError::Config(format!("gaussian separation must be an integer, got {rho}")));
                    }
                    (gauss_neumann_bound(*sigma, *rho as u64, n, r)?, Vec::new())
                }
                ModelConfig::Fresnel { params, .. } => (
                    fresnel_neumann_bound(params, *rho, n, r)?,
                    params.far_field_warning().into_iter().collect(),
                ),
                ModelConfig::Identity { .. } => {
                    let nr = NoiseToSignal::bound(r);
                    let pass = nr.admissible() && 0.0 < nr.budget();
                    let report = SeparationReport {
                        schema_version: SCHEMA_VERSION,
                        rho: *rho,
                        count: *count,
                        r: nr,
                        lhs: 0.0,
                        pass,
                        max_ratio: 0.5,
                        warnings: Vec::new(),
                    };
                    write_json(&out.join(&cfg.outputs.certificate), &report)?;
                    return Ok(CertifyOutput::Separation(report));
                }
            };
            CertifyOutput::Separation(SeparationReport {
                schema_version: SCHEMA_VERSION,
                rho: *rho,
                count: *count,
                r: NoiseToSignal::bound(r),
                lhs: bound.lhs,
                pass: bound.pass,
                max_ratio: bound.max_ratio(),
                warnings,
            })
        }
        _ => {
            let problem = Problem::build(cfg)?;
            let dict = problem.dict()?;
            let r = match ratio {
                Some(r) => NoiseToSignal::bound(r),
                None => noise_ratio(dict, &problem.truth, Noise::Bound(cfg.solver.epsilon))?,
            };
            let support = problem.truth.support();
            CertifyOutput::Support(CertifyReport {
                schema_version: SCHEMA_VERSION,
                support: support.indices().to_vec(),
                certificate: certify(dict, support, &r)?,
            })
        }
    };
    write_json(&out.join(&cfg.outputs.certificate), &report)?;
    Ok(report)
}

/// Linear grid of `steps` points from `lo` to `hi`.
pub fn linear_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps)
            .map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussPhaseSpec {
    pub max_rho: u64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub steps: usize,
    pub support: SupportSize,
    /// Noise ratios at which the maximal sigma is bisected.
    pub ratios: Vec<f64>,
}

/// `ERC_gauss{rho}.dat` with columns `sigma r*` per separation, and
/// `ERC_gauss_boundary.dat` with `rho` followed by the largest passing sigma
/// at each ratio (0 where none passes).
pub fn cmd_phase_gauss(spec: &GaussPhaseSpec, out: &Path) -> Result<Vec<(u64, f64)>, CliError> {
    if spec.max_rho == 0 || spec.steps == 0 || !(spec.sigma_min > 0.0 && spec.sigma_max >= spec.sigma_min) {
        return Err(CliError::Config("need max_rho >= 1, steps >= 1 and 0 < sigma_min <= sigma_max".into()));
    }
    let sigmas = linear_grid(spec.sigma_min, spec.sigma_max, spec.steps);
    let mut boundary = Vec::new();
    let mut first = Vec::new();
    for rho in 1..=spec.max_rho {
        let curve = gauss_boundary_curve(rho, spec.support, &sigmas)?;
        write_dat(&out.join(format!("ERC_gauss{rho}.dat")), curve.iter().map(|&(s, r)| [s, r]))?;
        let mut row = vec![rho as f64];
        for (k, &r) in spec.ratios.iter().enumerate() {
            let s = gauss_max_sigma(rho, spec.support, r, spec.sigma_min, spec.sigma_max, BISECTION_TOL)?;
            row.push(s.unwrap_or(0.0));
            if k == 0 {
                first.push((rho, s.unwrap_or(0.0)));
            }
        }
        boundary.push(row);
    }
    if !spec.ratios.is_empty() {
        write_dat(&out.join("ERC_gauss_boundary.dat"), &boundary)?;
    }
    Ok(first)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FresnelPhaseSpec {
    pub lambda: f64,
    pub z: f64,
    pub radii: Vec<f64>,
    pub max_rho: f64,
    pub support: SupportSize,
    pub ratios: Vec<f64>,
}

/// Name fragment for a radius: integers print without a fraction.
fn radius_tag(r: f64) -> String {
    if r.fract() == 0.0 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

/// `ERC_fresnel{r}.dat` with columns `rho r*` per particle radius, on the
/// lattice `delta = r / 2`, and `ERC_fresnel_boundary.dat` with the radius
/// followed by the smallest passing separation at each ratio (0 where none
/// passes up to `max_rho`).
pub fn cmd_phase_fresnel(spec: &FresnelPhaseSpec, out: &Path) -> Result<Vec<(f64, Curve)>, CliError> {
    if spec.radii.is_empty() || !(spec.max_rho > 0.0) {
        return Err(CliError::Config("need at least one radius and max_rho > 0".into()));
    }
    let params: Vec<HoloParams> = spec.radii.iter().map(|&r| HoloParams::new(spec.lambda, spec.z, r)).collect();
    for p in &params {
        p.validate()?;
        if let Some(w) = p.far_field_warning() {
            eprintln!("warning: r = {}: {w}", p.r);
        }
    }
    let curves: Vec<Vec<(f64, f64)>> = params
        .iter()
        .map(|p| fresnel_boundary_curve(p, spec.support, &fresnel_lattice(p, 0.0, spec.max_rho)))
        .collect::<Result<_, _>>()?;
    let mut boundary = Vec::new();
    for (p, curve) in params.iter().zip(&curves) {
        write_dat(&out.join(format!("ERC_fresnel{}.dat", radius_tag(p.r))), curve.iter().map(|&(a, b)| [a, b]))?;
        let mut row = vec![p.r];
        let mins: Vec<f64> = spec
            .ratios
            .par_iter()
            .map(|&r| fresnel_min_rho(p, spec.support, r, spec.max_rho).map(|m| m.unwrap_or(0.0)))
            .collect::<Result<_, _>>()?;
        row.extend(mins);
        boundary.push(row);
    }
    if !spec.ratios.is_empty() {
        write_dat(&out.join("ERC_fresnel_boundary.dat"), &boundary)?;
    }
    Ok(spec.radii.iter().copied().zip(curves).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpSpec {
    pub alpha0: f64,
    pub alpha1: f64,
    pub x1: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub steps: usize,
}

impl Default for MpSpec {
    fn default() -> Self {
        Self {
            alpha0: 2.0,
            alpha1: 1.0,
            x1: 1.0,
            sigma_min: 0.1,
            sigma_max: 10f64.powf(-0.5),
            steps: 100,
        }
    }
}

/// `sigma_delta.dat` with columns `sigma error`, log-spaced in sigma.
pub fn cmd_mp_localization(spec: &MpSpec, out: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    if !(spec.alpha0 > spec.alpha1 && spec.alpha1 >= 0.0) {
        return Err(CliError::Config("need alpha0 > alpha1 >= 0".into()));
    }
    if !(spec.sigma_min > 0.0 && spec.sigma_max >= spec.sigma_min) || spec.steps == 0 {
        return Err(CliError::Config("need 0 < sigma_min <= sigma_max and steps >= 1".into()));
    }
    let curve = mp_localization_curve(spec.sigma_min, spec.sigma_max, spec.steps, spec.alpha0, spec.alpha1, spec.x1)?;
    write_dat(&out.join("sigma_delta.dat"), curve.iter().map(|&(s, e)| [s, e]))?;
    Ok(curve)
}
