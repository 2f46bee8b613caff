//! Small dense symmetric positive definite solves on support sub-grams.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Dense matrix type used throughout the crate.
pub type Matrix = DMatrix<f64>;
/// Dense column vector type used throughout the crate.
pub type Vector = DVector<f64>;

/// Sub-grams with a 2-norm condition number above this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Cholesky factor of a support sub-gram, accepted only when well conditioned.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
    condition: f64,
    min_eigenvalue: f64,
}

impl SpdFactor {
    pub fn new(gram: DMatrix<f64>) -> Result<Self> {
        let n = gram.nrows();
        if n == 0 {
            return Ok(Self {
                chol: Cholesky::new(gram).expect("empty matrix factors"),
                condition: 1.0,
                min_eigenvalue: f64::INFINITY,
            });
        }
        let eig = SymmetricEigen::new(gram.clone());
        let lo = eig.eigenvalues.min();
        let hi = eig.eigenvalues.max();
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            return Err(Error::SingularProjection { condition });
        }
        let chol = Cholesky::new(gram).ok_or(Error::SingularProjection { condition })?;
        Ok(Self {
            chol,
            condition,
            min_eigenvalue: lo,
        })
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }

    pub fn solve_matrix(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(rhs)
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }
}
