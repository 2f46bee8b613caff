//! Deconvolution of Dirac trains blurred by a Gaussian kernel.
//!
//! With `kappa(x) = pi^{-1/4} sigma^{-1/2} exp(-x^2 / 2 sigma^2)` the atoms
//! `kappa(. - i)` are unit-normed in `L^2` and
//! `<kappa(. - i), kappa(. - j)> = exp(-(i - j)^2 / 4 sigma^2)`.
//! The infinite sums below are Jacobi theta values; they are evaluated by
//! direct summation with a `1e-16` tail cutoff.

use serde::{Deserialize, Serialize};

use crate::dictionary::{Dictionary, Lattice};
use crate::error::{Error, Result};

/// Terms smaller than this end an infinite sum.
pub const TAIL_CUTOFF: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianKernel {
    sigma: f64,
}

impl GaussianKernel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidModelParams(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        Ok(Self { sigma })
    }

    /// Skips validation; used to test the validating paths.
    pub fn unchecked(sigma: f64) -> Self {
        Self { sigma }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `kappa(x)`, unit `L^2` norm.
    pub fn eval(&self, x: f64) -> f64 {
        let s = self.sigma;
        (-x * x / (2.0 * s * s)).exp() / (std::f64::consts::PI.powf(0.25) * s.sqrt())
    }

    /// Peak-normalized profile `exp(-x^2 / 2 sigma^2)`.
    pub fn peak_profile(&self, x: f64) -> f64 {
        (-x * x / (2.0 * self.sigma * self.sigma)).exp()
    }

    pub fn correlation(&self, distance: f64) -> f64 {
        gauss_correlation(self.sigma, distance)
    }
}

/// `exp(-d^2 / 4 sigma^2)`.
pub fn gauss_correlation(sigma: f64, distance: f64) -> f64 {
    (-distance * distance / (4.0 * sigma * sigma)).exp()
}

/// Sparsity level entering the separation bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportSize {
    Finite(usize),
    /// Unknown cardinality; the sums run to infinity.
    Infinite,
}

impl SupportSize {
    /// `floor(N / 2)`, or `None` for an unbounded support.
    pub fn half(&self) -> Option<u64> {
        match *self {
            SupportSize::Finite(n) => Some((n / 2) as u64),
            SupportSize::Infinite => None,
        }
    }
}

/// Peak train on integer positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    pub positions: Vec<i64>,
    pub heights: Vec<f64>,
}

impl TrainSpec {
    pub fn new(positions: Vec<i64>, heights: Vec<f64>) -> Result<Self> {
        let t = Self { positions, heights };
        t.validate()?;
        Ok(t)
    }

    /// `count` peaks starting at `start`, `rho` apart.
    pub fn equispaced(start: i64, rho: i64, heights: Vec<f64>) -> Result<Self> {
        let positions = (0..heights.len() as i64).map(|k| start + k * rho).collect();
        Self::new(positions, heights)
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.is_empty() || self.positions.len() != self.heights.len() {
            return Err(Error::InvalidConfig(
                "train needs one height per position and at least one peak".into(),
            ));
        }
        if self.heights.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(Error::InvalidConfig("peak heights must be positive".into()));
        }
        let mut p = self.positions.clone();
        p.sort_unstable();
        if p.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("duplicate peak position".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Minimal pairwise distance, `None` for a single peak.
    pub fn rho(&self) -> Option<u64> {
        let mut p = self.positions.clone();
        p.sort_unstable();
        p.windows(2).map(|w| w[0].abs_diff(w[1])).min()
    }

    /// Integer window covering the peaks plus `margin` on both sides.
    pub fn window(&self, margin: f64) -> (i64, i64) {
        let m = margin.ceil() as i64;
        let lo = *self.positions.iter().min().expect("non-empty train");
        let hi = *self.positions.iter().max().expect("non-empty train");
        (lo - m, hi + m)
    }
}

/// Default window margin `4 sigma`.
pub fn default_margin(sigma: f64) -> f64 {
    4.0 * sigma
}

/// Left-hand side of a separation condition and its verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeumannBound {
    pub lhs: f64,
    pub pass: bool,
}

impl NeumannBound {
    pub(crate) fn new(lhs: f64, r: f64) -> Self {
        Self {
            lhs,
            pass: (0.0..0.5).contains(&r) && lhs < 1.0 - 2.0 * r,
        }
    }

    /// Largest noise ratio the bound admits, `(1 - lhs) / 2` clipped to `[0, 1/2)`.
    pub fn max_ratio(&self) -> f64 {
        ((1.0 - self.lhs) / 2.0).clamp(0.0, 0.5 - f64::EPSILON)
    }
}

/// `sum_{j=first}^{last} term(j)` for a term non-increasing in `j`.
/// Unbounded sums stop at the first term below [`TAIL_CUTOFF`]; bounded
/// ones stop once terms underflow.
fn decreasing_sum(first: u64, last: Option<u64>, term: impl Fn(f64) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut j = first;
    loop {
        if last.is_some_and(|l| j > l) {
            break;
        }
        let t = term(j as f64);
        sum += t;
        let done = match last {
            None => t < TAIL_CUTOFF,
            Some(_) => t == 0.0,
        };
        if done {
            break;
        }
        j += 1;
    }
    sum
}

/// Closed-form upper bound on `neumann_in + neumann_out` over all supports
/// of `n` peaks with minimal separation `rho`.
///
/// For `rho >= 2`:
/// `2 sum_{j=1}^{N/2} e(j rho) + max_{1<=i<rho} sum_{|j|<=N/2} e(i - j rho)`,
/// and for `rho = 1`: `2 sum_{j=1}^{N/2} e(j) + 2 sum_{j=1}^{N/2+1} e(j)`,
/// with `e(d) = exp(-d^2 / 4 sigma^2)` and `N/2` rounded down.
pub fn gauss_neumann_bound(sigma: f64, rho: u64, n: SupportSize, r: f64) -> Result<NeumannBound> {
    GaussianKernel::new(sigma)?;
    if rho == 0 {
        return Err(Error::InvalidSeparation {
            rho: 0.0,
            delta: 1.0,
        });
    }
    let e = |d: f64| gauss_correlation(sigma, d);
    let h = n.half();
    let rf = rho as f64;
    let same = 2.0 * decreasing_sum(1, h, |j| e(j * rf));
    let lhs = if rho == 1 {
        same + 2.0 * decreasing_sum(1, h.map(|h| h + 1), e)
    } else {
        (1..rho)
            .map(|i| {
                let i = i as f64;
                // j <= 0 gives distances i + |j| rho, j >= 1 gives j rho - i
                decreasing_sum(0, h, |k| e(i + k * rf))
                    + match h {
                        Some(0) => 0.0,
                        _ => decreasing_sum(1, h, |j| e(j * rf - i)),
                    }
            })
            .fold(0.0, f64::max)
            + same
    };
    Ok(NeumannBound::new(lhs, r))
}

/// Whether the closed-form bound dominates the Gram sums of a concrete
/// support on an integer lattice.
pub fn gauss_bound_dominates(dict: &Dictionary, lattice: &Lattice, positions: &[i64], sigma: f64) -> Result<bool> {
    let support: Vec<usize> = positions
        .iter()
        .map(|&p| {
            lattice
                .index_of(p as f64, 0.0)
                .ok_or_else(|| Error::InvalidSupport(format!("position {p} not on the lattice")))
        })
        .collect::<Result<_>>()?;
    let support = crate::dictionary::SupportSet::new(support)?;
    let sums = crate::certificates::neumann_sums(dict, &support)?;
    let train_rho = {
        let mut p = positions.to_vec();
        p.sort_unstable();
        p.windows(2).map(|w| w[0].abs_diff(w[1])).min()
    };
    // a lone atom admits any separation, so the tightest lattice spacing applies
    let rho = train_rho.unwrap_or(1);
    let lhs = gauss_neumann_bound(sigma, rho, SupportSize::Finite(positions.len()), 0.0)?.lhs;
    Ok(lhs + 1e-12 >= sums.total())
}

/// Error of the first continuous matching pursuit step for two Gaussian
/// peaks at `0` and `x1` with weights `alpha0 > alpha1 >= 0`.
///
/// Returns `|x*|` for the root `x*` of
/// `g(x) = alpha0 x e^{-x^2/4s^2} + alpha1 (x - x1) e^{-(x-x1)^2/4s^2}`
/// nearest to zero. `g < 0` on `(-inf, 0]` and `g(x1/2) > 0`, so the root
/// lies in `(0, x1/2]`.
pub fn continuous_mp_error(sigma: f64, alpha0: f64, alpha1: f64, x1: f64) -> Result<f64> {
    if !(sigma > 0.0 && x1 > 0.0 && alpha1 >= 0.0 && alpha0 > alpha1) {
        return Err(Error::InvalidModelParams(format!(
            "need sigma > 0, x1 > 0 and alpha0 > alpha1 >= 0 (got {sigma}, {x1}, {alpha0}, {alpha1})"
        )));
    }
    if alpha1 == 0.0 {
        return Ok(0.0);
    }
    let s2 = 4.0 * sigma * sigma;
    // g(x) e^{x^2/4s^2}, same sign as g and free of underflow near 0
    let g = |x: f64| alpha0 * x + alpha1 * (x - x1) * ((2.0 * x * x1 - x1 * x1) / s2).exp();
    let dg = |x: f64| {
        let w = ((2.0 * x * x1 - x1 * x1) / s2).exp();
        alpha0 + alpha1 * w * (1.0 + (x - x1) * 2.0 * x1 / s2)
    };

    // first sign change on a grid from 0 to x1/2
    const STEPS: usize = 4096;
    let h = 0.5 * x1 / STEPS as f64;
    let mut lo = 0.0;
    let mut hi = None;
    for k in 1..=STEPS {
        let x = k as f64 * h;
        if g(x) >= 0.0 {
            hi = Some(x);
            break;
        }
        lo = x;
    }
    let mut hi = hi.ok_or(Error::NoRootBracketed)?;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = dg(x);
        if d == 0.0 {
            break;
        }
        let next = x - g(x) / d;
        if !(next >= lo && next <= hi) {
            break;
        }
        x = next;
    }
    Ok(x.abs())
}

/// `(sigma, error)` pairs over `count` log-spaced widths in `[lo, hi]`.
pub fn mp_localization_curve(
    lo: f64,
    hi: f64,
    count: usize,
    alpha0: f64,
    alpha1: f64,
    x1: f64,
) -> Result<Vec<(f64, f64)>> {
    log_grid(lo, hi, count)
        .into_iter()
        .map(|s| continuous_mp_error(s, alpha0, alpha1, x1).map(|e| (s, e)))
        .collect()
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

/// How sampled atoms are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `kappa(x) sqrt(h)`: Euclidean products approximate `L^2` products and
    /// atom norms are close to one.
    #[default]
    L2,
    /// `exp(-x^2 / 2 sigma^2)`: coefficients are peak heights.
    UnitPeak,
}

/// Uniform sample points `start + k * step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl SampleGrid {
    /// Integer window `lo..=hi` sampled `oversample` times per unit.
    pub fn over_window(lo: i64, hi: i64, oversample: usize) -> Self {
        let step = 1.0 / oversample.max(1) as f64;
        Self {
            start: lo as f64,
            step,
            len: ((hi - lo) as usize) * oversample.max(1) + 1,
        }
    }

    pub fn point(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }
}

/// Dictionary of Gaussian atoms centered on `lattice`, sampled on `grid`.
pub fn sampled_dictionary(
    kernel: &GaussianKernel,
    lattice: &Lattice,
    grid: &SampleGrid,
    profile: Profile,
) -> Result<Dictionary> {
    GaussianKernel::new(kernel.sigma())?;
    let scale = grid.step.sqrt();
    let samples: Vec<Vec<f64>> = (0..lattice.len())
        .map(|i| {
            let c = lattice.position(i).0;
            (0..grid.len)
                .map(|k| {
                    let x = grid.point(k) - c;
                    match profile {
                        Profile::L2 => kernel.eval(x) * scale,
                        Profile::UnitPeak => kernel.peak_profile(x),
                    }
                })
                .collect()
        })
        .collect();
    Dictionary::build_from_samples(&samples)
}
