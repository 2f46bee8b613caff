#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparsecert_core::gaussian::{sampled_dictionary, Profile, SampleGrid};
use sparsecert_core::{Dictionary, GaussianKernel, Lattice, SparseSignal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal draw by Box-Muller, enough for test fixtures.
pub fn normal(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Columns `e_i + t g_i` in `R^m` with Gaussian `g_i`: nearly orthonormal
/// for small `t`, increasingly coherent as `t` grows.
pub fn perturbed_identity(rng: &mut impl Rng, m: usize, n: usize, t: f64) -> Dictionary {
    let samples: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..m)
                .map(|k| if k == i { 1.0 } else { 0.0 } + t * normal(rng))
                .collect()
        })
        .collect();
    Dictionary::build_from_samples(&samples).unwrap()
}

/// Random support of size `k` in `0..n` with coefficients of random sign
/// and magnitude in `[lo, hi]`.
pub fn random_signal(rng: &mut impl Rng, n: usize, k: usize, lo: f64, hi: f64) -> SparseSignal {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    SparseSignal::new(idx[..k].iter().map(|&i| {
        let a: f64 = rng.random_range(lo..=hi);
        (i, if rng.random::<bool>() { a } else { -a })
    }))
    .unwrap()
}

/// `L^2`-sampled Gaussian dictionary on `lo..=hi` with `oversample`
/// samples per unit and a `4 sigma` margin.
pub fn gaussian_dictionary(sigma: f64, lo: i64, hi: i64, oversample: usize) -> (Dictionary, Lattice) {
    let k = GaussianKernel::new(sigma).unwrap();
    let lattice = Lattice::integers(lo, hi);
    let m = (4.0 * sigma).ceil() as i64;
    let grid = SampleGrid::over_window(lo - m, hi + m, oversample);
    (sampled_dictionary(&k, &lattice, &grid, Profile::L2).unwrap(), lattice)
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
