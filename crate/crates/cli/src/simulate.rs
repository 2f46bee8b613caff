//! Forward simulation: dictionary, ground truth, clean and noisy data.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use sparsecert_core::fresnel::{self, contrast_samples, render_hologram, Image};
use sparsecert_core::gaussian::{self, SampleGrid};
use sparsecert_core::linalg::Matrix;
use sparsecert_core::{
    Dictionary, GaussianKernel, HoloParams, Lattice, ParticleScene, SensorGrid, SparseSignal,
};

use std::sync::OnceLock;

use crate::config::{ExperimentConfig, ModelConfig, NoiseConfig, SignalConfig};
use crate::error::CliError;

/// Where the entries of an observation vector live.
#[derive(Debug, Clone, PartialEq)]
pub enum Coords {
    Line(SampleGrid),
    Sensor(SensorGrid),
    Index(usize),
}

impl Coords {
    pub fn len(&self) -> usize {
        match self {
            Coords::Line(g) => g.len,
            Coords::Sensor(g) => g.len(),
            Coords::Index(n) => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Leading columns of row `k` in a data file.
    pub fn point(&self, k: usize) -> Vec<f64> {
        match self {
            Coords::Line(g) => vec![g.point(k)],
            Coords::Sensor(g) => {
                let (x, y) = g.pixel(k);
                vec![x, y]
            }
            Coords::Index(_) => vec![k as f64],
        }
    }
}

/// Everything needed to simulate and recover one configured experiment.
#[derive(Debug, Clone)]
pub struct Problem {
    /// Built on first use for holograms, where it is large and simulation
    /// does not need it.
    dict: OnceLock<Dictionary>,
    pub lattice: Option<Lattice>,
    pub coords: Coords,
    /// Coefficients the solver should return. For holograms these are twice
    /// the particle amplitudes.
    pub truth: SparseSignal,
    pub clean: Vec<f64>,
    pub holo: Option<(HoloParams, ParticleScene)>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub problem: Problem,
    pub noisy: Vec<f64>,
    /// Rendered noisy hologram intensity, for image output.
    pub hologram: Option<Image>,
}

impl Simulation {
    pub fn noise(&self) -> Vec<f64> {
        self.noisy.iter().zip(&self.problem.clean).map(|(a, b)| a - b).collect()
    }
}

impl Problem {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        cfg.validate()?;
        match (&cfg.model, &cfg.signal) {
            (ModelConfig::Gaussian { sigma, oversample, profile, .. }, SignalConfig::Train(train)) => {
                let kernel = GaussianKernel::new(*sigma)?;
                let margin = cfg.gaussian_margin().expect("gaussian model");
                let (lo, hi) = train.window(margin);
                let lattice = Lattice::integers(lo, hi);
                let grid = SampleGrid::over_window(lo, hi, *oversample);
                let dict = gaussian::sampled_dictionary(&kernel, &lattice, &grid, *profile)?;
                let truth = SparseSignal::new(train.positions.iter().zip(&train.heights).map(|(&p, &h)| {
                    ((p - lo) as usize, h)
                }))?;
                let clean = dict.synthesize(&truth)?;
                Ok(Problem {
                    dict: OnceLock::from(dict),
                    lattice: Some(lattice),
                    coords: Coords::Line(grid),
                    truth,
                    clean,
                    holo: None,
                    warnings: Vec::new(),
                })
            }
            (ModelConfig::Fresnel { params, candidates }, SignalConfig::Particles(scene)) => {
                let lattice = match candidates {
                    Some(l) => l.clone(),
                    None => candidates_around(params, scene),
                };
                let grid = SensorGrid::for_params(params);
                let mut pairs = Vec::with_capacity(scene.len());
                for (&(x, y), &a) in scene.centers.iter().zip(&scene.amplitudes) {
                    let i = lattice.index_of(x, y).ok_or_else(|| {
                        CliError::Config(format!("particle ({x}, {y}) is not on the candidate lattice"))
                    })?;
                    pairs.push((i, 2.0 * a));
                }
                let truth = SparseSignal::new(pairs)?;
                let image = render_hologram(params, scene, &grid)?;
                let clean = contrast_samples(&image, &grid);
                Ok(Problem {
                    dict: OnceLock::new(),
                    lattice: Some(lattice),
                    coords: Coords::Sensor(grid),
                    truth,
                    clean,
                    holo: Some((*params, scene.clone())),
                    warnings: params.far_field_warning().into_iter().collect(),
                })
            }
            (ModelConfig::Identity { n }, SignalConfig::Sparse { coefficients }) => {
                let dict = Dictionary::from_columns(Matrix::identity(*n, *n))?;
                let truth = SparseSignal::new(coefficients.iter().copied())?;
                let clean = dict.synthesize(&truth)?;
                Ok(Problem {
                    dict: OnceLock::from(dict),
                    lattice: None,
                    coords: Coords::Index(*n),
                    truth,
                    clean,
                    holo: None,
                    warnings: Vec::new(),
                })
            }
            (_, SignalConfig::Separation { .. }) => Err(CliError::Config(
                "a separation-only signal cannot be simulated; give the support explicitly".into(),
            )),
            _ => unreachable!("validated config"),
        }
    }

    pub fn dict(&self) -> Result<&Dictionary, CliError> {
        if let Some(d) = self.dict.get() {
            return Ok(d);
        }
        let (Some((params, _)), Some(lattice), Coords::Sensor(grid)) = (&self.holo, &self.lattice, &self.coords) else {
            unreachable!("only hologram dictionaries are deferred")
        };
        let d = fresnel::sampled_dictionary(params, lattice, grid)?;
        Ok(self.dict.get_or_init(|| d))
    }

    /// Pixel pitch for holograms, 1 otherwise.
    fn intensity_scale(&self) -> f64 {
        match &self.coords {
            Coords::Sensor(g) => g.pitch,
            _ => 1.0,
        }
    }
}

/// Lattice of spacing `delta` over the bounding box of the scene, two steps
/// wider on each side, anchored at the first particle.
pub fn candidates_around(p: &HoloParams, scene: &ParticleScene) -> Lattice {
    let (x0, y0) = scene.centers.first().copied().unwrap_or((0.0, 0.0));
    let steps = |v: f64, o: f64| ((v - o) / p.delta).round() as i64;
    let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (0i64, 0i64, 0i64, 0i64);
    for &(x, y) in &scene.centers {
        lo_x = lo_x.min(steps(x, x0));
        hi_x = hi_x.max(steps(x, x0));
        lo_y = lo_y.min(steps(y, y0));
        hi_y = hi_y.max(steps(y, y0));
    }
    Lattice::Grid {
        origin: (x0 + (lo_x - 2) as f64 * p.delta, y0 + (lo_y - 2) as f64 * p.delta),
        spacing: p.delta,
        nx: (hi_x - lo_x + 5) as usize,
        ny: (hi_y - lo_y + 5) as usize,
    }
}

/// Adds configured noise to `clean`. Noise is drawn in intensity units and
/// multiplied by `scale` (the pixel pitch for hologram contrast, else 1).
/// The stream is a pure function of `seed`.
pub fn add_noise(clean: &[f64], noise: NoiseConfig, seed: u64, scale: f64) -> Result<Vec<f64>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poisson = |rng: &mut ChaCha8Rng, lambda: f64| -> Result<f64, CliError> {
        if lambda <= 0.0 {
            return Ok(0.0);
        }
        let d = Poisson::new(lambda).map_err(|e| CliError::Config(format!("poisson rate {lambda}: {e}")))?;
        Ok(d.sample(rng))
    };
    match noise {
        NoiseConfig::None => Ok(clean.to_vec()),
        NoiseConfig::Poisson { baseline } => clean
            .iter()
            .map(|&v| Ok(v + scale * (poisson(&mut rng, baseline)? - baseline)))
            .collect(),
        NoiseConfig::PoissonShot { baseline } => clean
            .iter()
            .map(|&v| {
                let counts = poisson(&mut rng, v / scale + baseline)?;
                Ok(scale * (counts - baseline))
            })
            .collect(),
        NoiseConfig::Gaussian { std } => {
            let d = Normal::new(0.0, std).map_err(|e| CliError::Config(e.to_string()))?;
            Ok(clean.iter().map(|&v| v + scale * d.sample(&mut rng)).collect())
        }
    }
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Simulation, CliError> {
    let problem = Problem::build(cfg)?;
    let noisy = add_noise(&problem.clean, cfg.noise, cfg.seed, problem.intensity_scale())?;
    let hologram = match (&problem.coords, &problem.holo) {
        (Coords::Sensor(g), Some(_)) => Some(Image {
            width: g.nx,
            height: g.ny,
            // contrast back to intensity
            data: noisy.iter().map(|c| 1.0 - c / g.pitch).collect(),
        }),
        _ => None,
    };
    Ok(Simulation {
        problem,
        noisy,
        hologram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn isotope(noise: NoiseConfig) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{"schema_version": 1,
                "model": {{"kind": "gaussian", "sigma": 1.125}},
                "signal": {{"kind": "train", "positions": [0, 5, 10, 15], "heights": [130, 220, 180, 90]}},
                "noise": {},
                "seed": 3}}"#,
            serde_json::to_string(&noise).unwrap()
        ))
        .unwrap()
    }

    #[test]
    fn unit_peak_samples_match_heights() {
        let sim = simulate(&isotope(NoiseConfig::None)).unwrap();
        let Coords::Line(g) = &sim.problem.coords else { panic!() };
        assert_eq!(g.start, -5.0);
        // sample at x = 5 sits on the 220 peak
        let k = 10;
        assert_eq!(g.point(k), 5.0);
        let mut want = 220.0;
        for (p, h) in [(0.0, 130.0), (10.0, 180.0), (15.0, 90.0)] {
            want += h * (-(5.0f64 - p).powi(2) / (2.0 * 1.125 * 1.125)).exp();
        }
        assert!((sim.problem.clean[k] - want).abs() < 1e-9);
        assert_eq!(sim.noisy, sim.problem.clean);
    }

    #[test]
    fn noise_is_seeded() {
        let cfg = isotope(NoiseConfig::Poisson { baseline: 1.5 });
        let a = simulate(&cfg).unwrap().noisy;
        let b = simulate(&cfg).unwrap().noisy;
        assert_eq!(a, b);
        let mut other = cfg.clone();
        other.seed += 1;
        assert_ne!(simulate(&other).unwrap().noisy, a);
    }

    #[test]
    fn background_noise_has_integer_offsets() {
        let sim = simulate(&isotope(NoiseConfig::Poisson { baseline: 1.5 })).unwrap();
        for e in sim.noise() {
            let k = e + 1.5;
            assert!((k - k.round()).abs() < 1e-9 && k.round() >= 0.0);
        }
    }

    #[test]
    fn candidates_cover_the_scene() {
        let p = HoloParams::new(0.6328, 200_000.0, 50.0);
        let scene = ParticleScene::jet(3, 100.0, 5.0).unwrap();
        let l = candidates_around(&p, &scene);
        for &(x, y) in &scene.centers {
            assert!(l.index_of(x, y).is_some());
        }
        assert_eq!(l.len(), 13 * 5);
    }
}
