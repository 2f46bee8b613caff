//! In-line holography of opaque disks in the far field.
//!
//! All lengths are in micrometres. A disk of radius `r` at depth `z`
//! illuminated at wavelength `lambda` produces the linearized intensity
//! `1 - 2 alpha (chi * Re h_z)`, whose radial profile in the far field is
//!
//! ```text
//! a(R) = (r / R) J1(2 pi r R / (lambda z)) sin(pi R^2 / (lambda z)),   ||a||^2 ~ pi r^2 / 2.
//! ```
//!
//! Two closed forms for the correlation of unit atoms at distance `rho` are
//! provided. [`fresnel_correlation`] and the majorant built on it are the
//! textbook expressions used for the separation condition.
//! [`far_field_correlation`] is the signed far-field value obtained from
//! `Re h_z * Re h_z = (delta + Re h_{2z}) / 2`, which evaluates the disk
//! spectrum at `rho / (2 lambda z)`; it is what sampled atoms reproduce and
//! is used for kernel-built dictionaries.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dictionary::{Dictionary, Lattice};
use crate::error::{Error, Result};
use crate::gaussian::{NeumannBound, SupportSize};
use crate::specfun::{bessel_j1, hurwitz_zeta, jinc, sinc};

/// Landau constant `b_L` in `|J_1(x)| <= b_L`.
pub const LANDAU_B: f64 = 0.6748;
/// Landau constant `c_L` in `|J_1(x)| <= c_L x^{-1/3}`.
pub const LANDAU_C: f64 = 0.7857;

/// Far-field numbers `(2r)^2 / (lambda z)` at or above this trigger a warning.
pub const FAR_FIELD_LIMIT: f64 = 0.05;

/// First positive zero of `J_1`.
pub const J1_FIRST_ZERO: f64 = 3.831_705_970_207_512;

fn default_pixel_pitch() -> f64 {
    10.0
}

fn default_field_extent() -> f64 {
    2560.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoloParams {
    pub lambda: f64,
    pub z: f64,
    pub r: f64,
    /// Spacing of the candidate-position lattice.
    pub delta: f64,
    #[serde(default = "default_pixel_pitch")]
    pub pixel_pitch: f64,
    /// Half-width of the simulated sensor.
    #[serde(default = "default_field_extent")]
    pub field_extent: f64,
}

impl HoloParams {
    /// Lattice refinement `r / 2`, 10 um pixels.
    pub fn new(lambda: f64, z: f64, r: f64) -> Self {
        Self {
            lambda,
            z,
            r,
            delta: r / 2.0,
            pixel_pitch: default_pixel_pitch(),
            field_extent: default_field_extent(),
        }
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Self { delta, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("lambda", self.lambda),
            ("z", self.z),
            ("r", self.r),
            ("delta", self.delta),
            ("pixel_pitch", self.pixel_pitch),
            ("field_extent", self.field_extent),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidModelParams(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// `lambda z`.
    pub fn lz(&self) -> f64 {
        self.lambda * self.z
    }

    /// `(2r)^2 / (lambda z)`.
    pub fn far_field_number(&self) -> f64 {
        4.0 * self.r * self.r / self.lz()
    }

    pub fn far_field_warning(&self) -> Option<String> {
        let f = self.far_field_number();
        (f >= FAR_FIELD_LIMIT).then(|| {
            format!("far-field number (2r)^2/(lambda z) = {f:.3e} is not small; atom formulas are approximate")
        })
    }

    /// `||a|| = r sqrt(pi / 2)` for the raw atom.
    pub fn atom_norm(&self) -> f64 {
        self.r * (PI / 2.0).sqrt()
    }

    /// Radius of the first dark ring of the disk's diffraction envelope.
    pub fn first_jinc_zero_radius(&self) -> f64 {
        J1_FIRST_ZERO * self.lz() / (2.0 * PI * self.r)
    }

    /// Default window margin: three first-zero radii.
    pub fn default_margin(&self) -> f64 {
        3.0 * self.first_jinc_zero_radius()
    }
}

/// Area of the intersection of two radius-`r` disks at center distance `rho`.
pub fn circle_intersection(rho: f64, r: f64) -> f64 {
    let rho = rho.abs();
    if rho >= 2.0 * r {
        return 0.0;
    }
    2.0 * r * r * (rho / (2.0 * r)).acos() - 0.5 * rho * (4.0 * r * r - rho * rho).sqrt()
}

/// Raw far-field atom `(r/R) J1(2 pi r R / lambda z) sin(pi R^2 / lambda z)`.
pub fn raw_atom_profile(p: &HoloParams, radius: f64) -> f64 {
    let a = 2.0 * PI * p.r / p.lz();
    p.r * a * jinc(a * radius) * (PI * radius * radius / p.lz()).sin()
}

/// Unit-normed atom `sqrt(2/pi) (1/R) J1(2 pi r R / lambda z) sin(pi R^2 / lambda z)`.
pub fn atom_profile(p: &HoloParams, radius: f64) -> f64 {
    raw_atom_profile(p, radius) / p.atom_norm()
}

/// `C(rho)/(pi r^2) + J1(2 pi r rho / lambda z)^2 |sinc(rho^2 / 2 lambda z)| / 4`.
pub fn fresnel_correlation(p: &HoloParams, rho: f64) -> f64 {
    let j = bessel_j1(2.0 * PI * p.r * rho / p.lz());
    circle_intersection(rho, p.r) / (PI * p.r * p.r) + 0.25 * j * j * sinc(rho * rho / (2.0 * p.lz())).abs()
}

/// Signed far-field correlation
/// `C(rho)/(pi r^2) + J1(pi r rho / lambda z)^2 sinc(rho^2 / 2 lambda z)`.
pub fn far_field_correlation(p: &HoloParams, rho: f64) -> f64 {
    let j = bessel_j1(PI * p.r * rho / p.lz());
    circle_intersection(rho, p.r) / (PI * p.r * p.r) + j * j * sinc(rho * rho / (2.0 * p.lz()))
}

/// `min{b_L, c_L x^{-1/3}}`.
pub fn landau_bound(x: f64) -> f64 {
    LANDAU_B.min(LANDAU_C * x.abs().powf(-1.0 / 3.0))
}

/// Monotone majorant of `J1^2 |sinc|` at separation `rho`:
/// `min{b^2, c^2 (lambda z / 2 pi r)^{2/3} rho^{-2/3}} min{1, (2 lambda z / pi) rho^{-2}}`.
fn oscillation_majorant(p: &HoloParams, rho: f64) -> f64 {
    let k1 = (p.lz() / (2.0 * PI * p.r)).powf(2.0 / 3.0);
    let k2 = 2.0 * p.lz() / PI;
    if rho == 0.0 {
        return LANDAU_B * LANDAU_B;
    }
    let bessel = (LANDAU_B * LANDAU_B).min(LANDAU_C * LANDAU_C * k1 * rho.powf(-2.0 / 3.0));
    let chirp = 1f64.min(k2 / (rho * rho));
    bessel * chirp
}

/// Monotone non-increasing majorant of [`fresnel_correlation`].
pub fn fresnel_correlation_bound(p: &HoloParams, rho: f64) -> f64 {
    circle_intersection(rho, p.r) / (PI * p.r * p.r) + 0.25 * oscillation_majorant(p, rho)
}

/// `sum_{k=0}^{count-1} bound(a + k rho)`, all of `k >= 0` when `count` is
/// `None`.
///
/// Past `p*` the disk overlap vanishes and both minima take their power-law
/// branches, so the terms are `c^2 K1 K2 / 4 (a + k rho)^{-8/3}` and the
/// remainder is a difference of Hurwitz zeta values.
fn lattice_sum(p: &HoloParams, a: f64, rho: f64, count: Option<u64>) -> f64 {
    let k1 = (p.lz() / (2.0 * PI * p.r)).powf(2.0 / 3.0);
    let k2 = 2.0 * p.lz() / PI;
    let c2 = LANDAU_C * LANDAU_C;
    let start = (c2 * k1 / (LANDAU_B * LANDAU_B))
        .powf(1.5)
        .max(k2.sqrt())
        .max(2.0 * p.r);
    let mut sum = 0.0;
    let mut k = 0u64;
    loop {
        if count.is_some_and(|n| k >= n) {
            return sum;
        }
        let x = a + k as f64 * rho;
        if x >= start {
            break;
        }
        sum += fresnel_correlation_bound(p, x);
        k += 1;
    }
    const S: f64 = 8.0 / 3.0;
    let q = a / rho + k as f64;
    let mut zeta = hurwitz_zeta(S, q);
    if let Some(n) = count {
        zeta -= hurwitz_zeta(S, a / rho + n as f64);
    }
    sum + 0.25 * c2 * k1 * k2 * rho.powf(-S) * zeta
}

/// Separation condition for disks on a line of candidate positions with
/// spacing `delta`: same-support term
/// `sum_{j=1}^{N/2} 2 bound(j rho)` plus the worst lattice offset
/// `max_{1<=i<rho/delta} sum_{|j|<=N/2} bound(|j rho - i delta|)`.
pub fn fresnel_neumann_bound(p: &HoloParams, rho: f64, n: SupportSize, r: f64) -> Result<NeumannBound> {
    p.validate()?;
    let steps = separation_steps(p, rho)?;
    let h = n.half();
    let same = 2.0 * lattice_sum(p, rho, rho, h);
    let cross = (1..steps)
        .into_par_iter()
        .map(|i| {
            let off = i as f64 * p.delta;
            // j <= 0 at distances off + |j| rho, j >= 1 at (rho - off) + (j - 1) rho
            lattice_sum(p, off, rho, h.map(|h| h + 1)) + lattice_sum(p, rho - off, rho, h)
        })
        .reduce(|| 0.0, f64::max);
    Ok(NeumannBound::new(same + cross, r))
}

/// `rho / delta` as an integer, rejecting off-lattice or too small separations.
pub fn separation_steps(p: &HoloParams, rho: f64) -> Result<u64> {
    let k = rho / p.delta;
    let kr = k.round();
    if !(rho > p.delta) || (k - kr).abs() > 1e-9 * k.max(1.0) {
        return Err(Error::InvalidSeparation {
            rho,
            delta: p.delta,
        });
    }
    Ok(kr as u64)
}

/// Disks in one plane, with positive amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleScene {
    pub centers: Vec<(f64, f64)>,
    pub amplitudes: Vec<f64>,
}

impl ParticleScene {
    pub fn new(centers: Vec<(f64, f64)>, amplitudes: Vec<f64>) -> Result<Self> {
        let s = Self { centers, amplitudes };
        s.validate()?;
        Ok(s)
    }

    /// `count` particles on the x axis, `rho` apart, centered on the origin.
    pub fn jet(count: usize, rho: f64, amplitude: f64) -> Result<Self> {
        let x0 = -((count.max(1) - 1) as f64) * rho / 2.0;
        Self::new(
            (0..count).map(|k| (x0 + k as f64 * rho, 0.0)).collect(),
            vec![amplitude; count],
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.centers.len() != self.amplitudes.len() {
            return Err(Error::InvalidConfig("one amplitude per particle required".into()));
        }
        if self.amplitudes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidConfig("amplitudes must be positive".into()));
        }
        for (k, a) in self.centers.iter().enumerate() {
            if self.centers[..k].iter().any(|b| a == b) {
                return Err(Error::InvalidConfig("duplicate particle center".into()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Minimal pairwise center distance.
    pub fn rho(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (k, a) in self.centers.iter().enumerate() {
            for b in &self.centers[..k] {
                let d = (a.0 - b.0).hypot(a.1 - b.1);
                best = Some(best.map_or(d, |m| m.min(d)));
            }
        }
        best
    }
}

/// Pixel centers `origin + (ix, iy) * pitch`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorGrid {
    pub origin: (f64, f64),
    pub pitch: f64,
    pub nx: usize,
    pub ny: usize,
}

impl SensorGrid {
    /// Square grid centered on the optical axis covering `[-extent, extent]`.
    pub fn centered(pitch: f64, extent: f64) -> Self {
        let half = (extent / pitch).floor() as usize;
        let n = 2 * half + 1;
        let o = -(half as f64) * pitch;
        Self {
            origin: (o, o),
            pitch,
            nx: n,
            ny: n,
        }
    }

    pub fn for_params(p: &HoloParams) -> Self {
        Self::centered(p.pixel_pitch, p.field_extent)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pixel(&self, k: usize) -> (f64, f64) {
        (
            self.origin.0 + (k % self.nx) as f64 * self.pitch,
            self.origin.1 + (k / self.nx) as f64 * self.pitch,
        )
    }
}

/// Row-major intensity image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }
}

/// Linearized hologram `1 - 2 sum_j alpha_j a(|x - x_j|)` with unit
/// reference intensity.
pub fn render_hologram(p: &HoloParams, scene: &ParticleScene, grid: &SensorGrid) -> Result<Image> {
    p.validate()?;
    scene.validate()?;
    if let Some(&(x, y)) = scene
        .centers
        .iter()
        .find(|c| c.0.abs() > p.field_extent || c.1.abs() > p.field_extent)
    {
        return Err(Error::OutOfField { x, y });
    }
    let mut data = vec![1.0; grid.len()];
    data.par_chunks_mut(grid.nx).enumerate().for_each(|(iy, row)| {
        let y = grid.origin.1 + iy as f64 * grid.pitch;
        for (ix, px) in row.iter_mut().enumerate() {
            let x = grid.origin.0 + ix as f64 * grid.pitch;
            for (c, a) in scene.centers.iter().zip(&scene.amplitudes) {
                *px -= 2.0 * a * raw_atom_profile(p, (x - c.0).hypot(y - c.1));
            }
        }
    });
    Ok(Image {
        width: grid.nx,
        height: grid.ny,
        data,
    })
}

/// Contrast `(1 - I) * pitch` of a hologram as a signal-space vector; in the
/// dictionary of [`sampled_dictionary`] its coefficients are `2 alpha_j`.
pub fn contrast_samples(image: &Image, grid: &SensorGrid) -> Vec<f64> {
    image.data.iter().map(|v| (1.0 - v) * grid.pitch).collect()
}

/// Dictionary of raw atoms centered on `lattice`, sampled on `grid` and
/// scaled by the pitch so that Euclidean products approximate `L^2` ones.
pub fn sampled_dictionary(p: &HoloParams, lattice: &Lattice, grid: &SensorGrid) -> Result<Dictionary> {
    p.validate()?;
    let samples: Vec<Vec<f64>> = (0..lattice.len())
        .into_par_iter()
        .map(|i| {
            let c = lattice.position(i);
            (0..grid.len())
                .map(|k| {
                    let (x, y) = grid.pixel(k);
                    raw_atom_profile(p, (x - c.0).hypot(y - c.1)) * grid.pitch
                })
                .collect()
        })
        .collect();
    Dictionary::build_from_samples(&samples)
}

/// `||a||^2` of a centered raw atom summed over a square grid of the given
/// pitch and half-width, without storing the image.
pub fn atom_norm_sq_on_grid(p: &HoloParams, pitch: f64, half_width: f64) -> f64 {
    let m = (half_width / pitch).floor() as i64;
    // quadrant symmetry: axis samples weigh 2, the center 1, the rest 4
    let rows: Vec<f64> = (0..=m)
        .into_par_iter()
        .map(|iy| {
            let y = iy as f64 * pitch;
            let wy = if iy == 0 { 1.0 } else { 2.0 };
            let mut acc = 0.0;
            for ix in 0..=m {
                let x = ix as f64 * pitch;
                let wx = if ix == 0 { 1.0 } else { 2.0 };
                let v = raw_atom_profile(p, x.hypot(y));
                acc += wx * v * v;
            }
            wy * acc
        })
        .collect();
    // summed in order so the result does not depend on the thread count
    rows.iter().sum::<f64>() * pitch * pitch
}
