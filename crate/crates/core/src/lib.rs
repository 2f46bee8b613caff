//! Sparse deconvolution with orthogonal matching pursuit and a priori
//! recovery certificates.
//!
//! * [`dictionary`]: finite dictionaries of unit atoms and their Gram matrices.
//! * [`omp`]: the greedy solver.
//! * [`certificates`]: exact recovery conditions, with and without noise.
//! * [`gaussian`] and [`fresnel`]: closed forms for two physical kernels.
//! * [`phase`]: boundary curves of the separation conditions.

// `!(x < y)` is used on purpose so that NaN takes the failing branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod dictionary;
pub mod error;
pub mod fresnel;
pub mod gaussian;
pub mod linalg;
pub mod omp;
pub mod phase;
pub mod specfun;

pub use certificates::{
    certify, NeumannSums, Noise, NoiseToSignal, RatioMode, RecoveryCertificate, Verdicts,
};
pub use dictionary::{AtomIndex, Dictionary, KernelModel, Lattice, SparseSignal, SupportSet};
pub use error::{Error, Result};
pub use fresnel::{HoloParams, ParticleScene, SensorGrid};
pub use gaussian::{GaussianKernel, NeumannBound, SupportSize, TrainSpec};
pub use phase::Curve;

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;
pub use omp::{omp, womp, OmpConfig, OmpTrace};
