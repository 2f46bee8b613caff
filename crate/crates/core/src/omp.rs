//! Orthogonal matching pursuit and its weak variant.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dictionary::{AtomIndex, Dictionary, SparseSignal, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::SpdFactor;

/// Relative residual floor used for `epsilon = 0` when no explicit
/// `zero_tolerance` is configured.
pub const DEFAULT_ZERO_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OmpConfig {
    /// Stop as soon as `||r^k|| <= epsilon`.
    pub epsilon: f64,
    /// Defaults to the number of atoms.
    pub max_iterations: Option<usize>,
    /// 1 is plain OMP; smaller values accept any atom within this factor of
    /// the best correlation.
    pub weakness_omega: f64,
    /// Absolute residual floor standing in for zero when `epsilon = 0`.
    /// Defaults to `1e-10 * ||v||`.
    pub zero_tolerance: Option<f64>,
}

impl Default for OmpConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            max_iterations: None,
            weakness_omega: 1.0,
            zero_tolerance: None,
        }
    }
}

impl OmpConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be finite and >= 0, got {}",
                self.epsilon
            )));
        }
        if !(self.weakness_omega > 0.0 && self.weakness_omega <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "weakness_omega must lie in (0, 1], got {}",
                self.weakness_omega
            )));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if let Some(t) = self.zero_tolerance {
            if !(t >= 0.0) {
                return Err(Error::InvalidConfig("zero_tolerance must be >= 0".into()));
            }
        }
        Ok(())
    }

    fn stopping_threshold(&self, observation_norm: f64) -> f64 {
        if self.epsilon > 0.0 {
            self.epsilon
        } else {
            self.zero_tolerance
                .unwrap_or(DEFAULT_ZERO_TOLERANCE * observation_norm)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmpTrace {
    /// Atoms in selection order.
    pub picked: Vec<AtomIndex>,
    /// `||r^0|| = ||v||` followed by the residual norm after each pick.
    pub residual_norms: Vec<f64>,
    /// Source coefficients `alpha_i` on the picked support.
    pub solution: SparseSignal,
    /// False when the iteration cap was hit before the residual dropped to
    /// the threshold, or no atom correlated with the residual.
    pub converged: bool,
}

impl OmpTrace {
    pub fn support(&self) -> &SupportSet {
        self.solution.support()
    }

    pub fn iterations(&self) -> usize {
        self.picked.len()
    }
}

/// Plain OMP: `cfg.weakness_omega` is ignored and taken as 1.
pub fn omp(dict: &Dictionary, observation: &[f64], cfg: &OmpConfig) -> Result<OmpTrace> {
    let cfg = OmpConfig {
        weakness_omega: 1.0,
        ..cfg.clone()
    };
    womp(dict, observation, &cfg)
}

/// Weak OMP. Each step picks the lowest index whose correlation magnitude is
/// at least `omega` times the largest one.
pub fn womp(dict: &Dictionary, observation: &[f64], cfg: &OmpConfig) -> Result<OmpTrace> {
    cfg.validate()?;
    let atoms = dict.atoms().ok_or(Error::MissingSamples)?;
    let v = DVector::from_column_slice(observation);
    if v.len() != atoms.nrows() {
        return Err(Error::DimensionMismatch {
            expected: atoms.nrows(),
            found: v.len(),
        });
    }
    let n = dict.n_atoms();
    let max_iter = cfg.max_iterations.unwrap_or(n).min(n);
    let v_norm = v.norm();
    let threshold = cfg.stopping_threshold(v_norm);
    // <v, d_i>, reused for every projection
    let v_corr = atoms.tr_mul(&v);

    let mut picked: Vec<AtomIndex> = Vec::new();
    let mut is_picked = vec![false; n];
    let mut residual = v.clone();
    let mut residual_norms = vec![v_norm];
    let mut beta = DVector::zeros(0);
    let mut stalled = false;

    while residual_norms[residual_norms.len() - 1] > threshold && picked.len() < max_iter {
        let corr = atoms.tr_mul(&residual);
        let Some(next) = select(&corr, &is_picked, cfg.weakness_omega) else {
            stalled = true;
            break;
        };
        picked.push(next);
        is_picked[next] = true;

        let (b, r) = project(dict, &v, &v_corr, &picked)?;
        beta = b;
        residual = r;
        residual_norms.push(residual.norm());
    }

    let converged = !stalled && residual_norms[residual_norms.len() - 1] <= threshold;
    let solution = to_signal(dict, &picked, &beta);
    Ok(OmpTrace {
        picked,
        residual_norms,
        solution,
        converged,
    })
}

fn select(corr: &DVector<f64>, is_picked: &[bool], omega: f64) -> Option<AtomIndex> {
    let mut best = 0.0f64;
    let mut best_idx = None;
    for (i, c) in corr.iter().enumerate() {
        if !is_picked[i] && c.abs() > best {
            best = c.abs();
            best_idx = Some(i);
        }
    }
    if omega >= 1.0 || best_idx.is_none() {
        return best_idx;
    }
    let cut = omega * best;
    (0..corr.len()).find(|&i| !is_picked[i] && corr[i].abs() >= cut)
}

/// Least-squares coefficients `beta` of `v` in the unit atoms on `support`,
/// and the residual. One step of iterative refinement keeps the residual
/// orthogonal to the selected atoms at the level of rounding.
fn project(
    dict: &Dictionary,
    v: &DVector<f64>,
    v_corr: &DVector<f64>,
    support: &[AtomIndex],
) -> Result<(DVector<f64>, DVector<f64>)> {
    let atoms = dict.atoms().ok_or(Error::MissingSamples)?;
    let factor = SpdFactor::new(dict.sub_gram(support))?;
    let rhs = DVector::from_iterator(support.len(), support.iter().map(|&i| v_corr[i]));
    let mut beta = factor.solve(&rhs);
    let mut residual = residual_of(atoms, v, support, &beta);
    let back =
        DVector::from_iterator(support.len(), support.iter().map(|&i| atoms.column(i).dot(&residual)));
    beta += factor.solve(&back);
    residual = residual_of(atoms, v, support, &beta);
    Ok((beta, residual))
}

fn residual_of(
    atoms: &nalgebra::DMatrix<f64>,
    v: &DVector<f64>,
    support: &[AtomIndex],
    beta: &DVector<f64>,
) -> DVector<f64> {
    let mut r = v.clone();
    for (k, &i) in support.iter().enumerate() {
        r.axpy(-beta[k], &atoms.column(i), 1.0);
    }
    r
}

fn to_signal(dict: &Dictionary, support: &[AtomIndex], beta: &DVector<f64>) -> SparseSignal {
    let norms = dict.atom_norms();
    let mut pairs: Vec<_> = support
        .iter()
        .zip(beta.iter())
        .map(|(&i, &b)| (i, b / norms[i]))
        .collect();
    pairs.sort_by_key(|p| p.0);
    let (idx, coef): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    SparseSignal::from_parts(
        SupportSet::new(idx).expect("solver never repeats an atom"),
        coef,
    )
}

/// Least-squares source coefficients of `observation` on a fixed support.
pub fn project_on_support(
    dict: &Dictionary,
    observation: &[f64],
    support: &SupportSet,
) -> Result<SparseSignal> {
    if support.is_empty() {
        return Err(Error::InvalidSupport("empty support".into()));
    }
    support.check_bounds(dict.n_atoms())?;
    let atoms = dict.atoms().ok_or(Error::MissingSamples)?;
    if observation.len() != atoms.nrows() {
        return Err(Error::DimensionMismatch {
            expected: atoms.nrows(),
            found: observation.len(),
        });
    }
    let v = DVector::from_column_slice(observation);
    let v_corr = atoms.tr_mul(&v);
    let (beta, _) = project(dict, &v, &v_corr, support.indices())?;
    Ok(to_signal(dict, support.indices(), &beta))
}
