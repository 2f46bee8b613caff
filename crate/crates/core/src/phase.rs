//! Boundary curves of the separation conditions.
//!
//! The admissible noise ratio at a parameter point is
//! `r* = (1 - lhs) / 2` clipped to `[0, 1/2)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fresnel::{fresnel_neumann_bound, separation_steps, HoloParams};
use crate::gaussian::{gauss_neumann_bound, SupportSize};

/// `r*(sigma)` for fixed separation, one point per entry of `sigmas`.
pub fn gauss_boundary_curve(rho: u64, n: SupportSize, sigmas: &[f64]) -> Result<Vec<(f64, f64)>> {
    sigmas
        .par_iter()
        .map(|&s| gauss_neumann_bound(s, rho, n, 0.0).map(|b| (s, b.max_ratio())))
        .collect()
}

/// Largest `sigma` in `[lo, hi]` at which the Gaussian condition passes at
/// noise ratio `r`, to within `tol`. The left-hand side grows with sigma.
/// Returns `None` if the condition already fails at `lo`.
pub fn gauss_max_sigma(rho: u64, n: SupportSize, r: f64, lo: f64, hi: f64, tol: f64) -> Result<Option<f64>> {
    let pass = |s: f64| gauss_neumann_bound(s, rho, n, r).map(|b| b.pass);
    if !pass(lo)? {
        return Ok(None);
    }
    if pass(hi)? {
        return Ok(Some(hi));
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let m = 0.5 * (a + b);
        if pass(m)? {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(Some(a))
}

/// `r*(rho)` for the Fresnel condition at the given separations, each of
/// which must lie on the lattice of `p.delta`.
pub fn fresnel_boundary_curve(p: &HoloParams, n: SupportSize, rhos: &[f64]) -> Result<Vec<(f64, f64)>> {
    rhos.par_iter()
        .map(|&rho| fresnel_neumann_bound(p, rho, n, 0.0).map(|b| (rho, b.max_ratio())))
        .collect()
}

/// Lattice separations `k * delta` with `k` from 2 up to `max_rho / delta`.
pub fn fresnel_lattice(p: &HoloParams, min_rho: f64, max_rho: f64) -> Vec<f64> {
    let first = ((min_rho / p.delta).ceil() as u64).max(2);
    let last = (max_rho / p.delta).floor() as u64;
    (first..=last).map(|k| k as f64 * p.delta).collect()
}

/// Smallest lattice separation up to `max_rho` at which the Fresnel
/// condition passes at noise ratio `r`. Scans upward since the left-hand
/// side need not be monotone between lattice points.
pub fn fresnel_min_rho(p: &HoloParams, n: SupportSize, r: f64, max_rho: f64) -> Result<Option<f64>> {
    for rho in fresnel_lattice(p, 2.0 * p.delta, max_rho) {
        separation_steps(p, rho)?;
        if fresnel_neumann_bound(p, rho, n, r)?.pass {
            return Ok(Some(rho));
        }
    }
    Ok(None)
}

/// `(parameter, r*)` pairs.
pub type Curve = Vec<(f64, f64)>;

/// `(sigma, r*)` curves for each separation `1..=max_rho`.
pub fn gauss_phase_diagram(max_rho: u64, n: SupportSize, sigmas: &[f64]) -> Result<Vec<(u64, Curve)>> {
    if max_rho == 0 {
        return Err(Error::InvalidConfig("max_rho must be >= 1".into()));
    }
    (1..=max_rho)
        .map(|rho| gauss_boundary_curve(rho, n, sigmas).map(|c| (rho, c)))
        .collect()
}
