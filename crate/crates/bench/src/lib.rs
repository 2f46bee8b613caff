//! Shared fixtures for the benchmarks.

use sparsecert_core::gaussian::{sampled_dictionary, Profile, SampleGrid};
use sparsecert_core::{Dictionary, GaussianKernel, Lattice, SparseSignal};

/// Gaussian dictionary on `0..n` with unit sampling and a `4 sigma` margin.
pub fn gaussian_dictionary(sigma: f64, n: i64) -> Dictionary {
    let k = GaussianKernel::new(sigma).expect("positive width");
    let m = (4.0 * sigma).ceil() as i64;
    let grid = SampleGrid::over_window(-m, n - 1 + m, 1);
    sampled_dictionary(&k, &Lattice::integers(0, n - 1), &grid, Profile::UnitPeak)
        .expect("valid dictionary")
}

/// Peaks of alternating heights `rho` apart starting at `rho`.
pub fn train(n_atoms: i64, rho: i64) -> SparseSignal {
    SparseSignal::new(
        (1..)
            .map(|k| k * rho)
            .take_while(|&p| p < n_atoms - rho)
            .enumerate()
            .map(|(k, p)| (p as usize, if k % 2 == 0 { 100.0 } else { 60.0 })),
    )
    .expect("nonzero heights")
}
