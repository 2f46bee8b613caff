//! Exact recovery conditions for OMP and their noisy counterparts.
//!
//! All quantities are read off the Gram matrix. For a support `I` with
//! sub-gram `G_II`:
//!
//! * `erc_value = max_{d not in I} ||G_II^{-1} g_{I,d}||_1`, the exact value of
//!   `sup ||(D P_I)^+ d||_1` when the support atoms are linearly independent.
//! * `neumann_in = max_{i in I} sum_{j in I, j != i} |G_ij|` and
//!   `neumann_out = max_{i not in I} sum_{j in I} |G_ij|`.
//! * `mu1(m)` is the cumulative coherence. The supremum over index sets of
//!   size `m` is attained by the `m` largest off-diagonal magnitudes of a
//!   single row, so each row is partially sorted and the best row wins.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dictionary::{AtomIndex, Dictionary, SparseSignal, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::SpdFactor;

/// Largest support for which the error-bound constant is enumerated exactly.
pub const EXACT_ERROR_BOUND_MAX_SUPPORT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioMode {
    /// From a known noise realization.
    Exact,
    /// From a noise norm bound `epsilon`.
    Bound,
}

/// Noise-to-signal ratio `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseToSignal {
    pub value: f64,
    pub mode: RatioMode,
}

impl NoiseToSignal {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            mode: RatioMode::Bound,
        }
    }

    pub fn bound(value: f64) -> Self {
        Self {
            value,
            mode: RatioMode::Bound,
        }
    }

    /// Right-hand side `1 - 2r` of the noisy conditions.
    pub fn budget(&self) -> f64 {
        1.0 - 2.0 * self.value
    }

    /// Below one half, the necessary range for any noisy guarantee.
    pub fn admissible(&self) -> bool {
        self.value >= 0.0 && self.value < 0.5
    }
}

/// Noise description for [`noise_ratio`].
#[derive(Debug, Clone, Copy)]
pub enum Noise<'a> {
    Exact(&'a [f64]),
    Bound(f64),
}

/// `min_{i in I} |alpha_i| ||K e_i||`, the weakest scaled source.
pub fn weakest_component(dict: &Dictionary, signal: &SparseSignal) -> f64 {
    let norms = dict.atom_norms();
    signal
        .iter()
        .map(|(i, a)| a.abs() * norms[i])
        .fold(f64::INFINITY, f64::min)
}

pub fn noise_ratio(dict: &Dictionary, signal: &SparseSignal, noise: Noise<'_>) -> Result<NoiseToSignal> {
    if signal.is_empty() {
        return Err(Error::InvalidSupport("empty support".into()));
    }
    signal.support().check_bounds(dict.n_atoms())?;
    let denom = weakest_component(dict, signal);
    match noise {
        Noise::Bound(eps) => Ok(NoiseToSignal {
            value: eps / denom,
            mode: RatioMode::Bound,
        }),
        Noise::Exact(eta) => {
            let corr = dict.correlate(eta)?;
            let sup = corr.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            Ok(NoiseToSignal {
                value: sup / denom,
                mode: RatioMode::Exact,
            })
        }
    }
}

/// Gram rows of the support atoms, `rows[k][j] = G_{I_k, j}`.
fn support_rows(dict: &Dictionary, support: &SupportSet) -> Vec<Vec<f64>> {
    support.iter().map(|i| dict.gram_row(i).into_owned()).collect()
}

fn validated(dict: &Dictionary, support: &SupportSet) -> Result<()> {
    support.check_bounds(dict.n_atoms())
}

pub fn erc_value(dict: &Dictionary, support: &SupportSet) -> Result<f64> {
    validated(dict, support)?;
    let rows = support_rows(dict, support);
    erc_from_rows(dict, support, &rows)
}

fn erc_from_rows(dict: &Dictionary, support: &SupportSet, rows: &[Vec<f64>]) -> Result<f64> {
    if support.is_empty() {
        return Ok(0.0);
    }
    let k = support.len();
    let idx = support.indices();
    let g = DMatrix::from_fn(k, k, |a, b| rows[a][idx[b]]);
    let factor = SpdFactor::new(g)?;
    let outside = support.complement(dict.n_atoms());
    let value = outside
        .par_iter()
        .map(|&d| {
            let rhs = DVector::from_fn(k, |a, _| rows[a][d]);
            factor.solve(&rhs).lp_norm(1)
        })
        .reduce(|| 0.0, f64::max);
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeumannSums {
    pub neumann_in: f64,
    pub neumann_out: f64,
}

impl NeumannSums {
    pub fn total(&self) -> f64 {
        self.neumann_in + self.neumann_out
    }

    /// `neumann_in + neumann_out < 1 - 2r`.
    pub fn passes(&self, r: f64) -> bool {
        self.total() < 1.0 - 2.0 * r
    }
}

pub fn neumann_sums(dict: &Dictionary, support: &SupportSet) -> Result<NeumannSums> {
    validated(dict, support)?;
    let rows = support_rows(dict, support);
    Ok(neumann_from_rows(dict, support, &rows))
}

fn neumann_from_rows(dict: &Dictionary, support: &SupportSet, rows: &[Vec<f64>]) -> NeumannSums {
    let idx = support.indices();
    let neumann_in = rows
        .iter()
        .enumerate()
        .map(|(a, row)| {
            idx.iter()
                .enumerate()
                .filter(|&(b, _)| b != a)
                .map(|(_, &j)| row[j].abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    let neumann_out = support
        .complement(dict.n_atoms())
        .into_iter()
        .map(|d| rows.iter().map(|row| row[d].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    NeumannSums {
        neumann_in,
        neumann_out,
    }
}

/// Neumann ERC: returns the sums and whether `in + out < 1`.
pub fn neumann_erc(dict: &Dictionary, support: &SupportSet) -> Result<(NeumannSums, bool)> {
    let s = neumann_sums(dict, support)?;
    Ok((s, s.passes(0.0)))
}

/// Cumulative coherence `mu1(m)`; `m` is clamped to `n_atoms - 1` and
/// `mu1(0) = 0`.
pub fn cumulative_coherence(dict: &Dictionary, m: usize) -> f64 {
    cumulative_coherences(dict, &[m])[0]
}

/// `mu1(m)` for several `m` in one pass over the Gram rows.
pub fn cumulative_coherences(dict: &Dictionary, ms: &[usize]) -> Vec<f64> {
    let n = dict.n_atoms();
    if n < 2 {
        return vec![0.0; ms.len()];
    }
    let ms: Vec<usize> = ms.iter().map(|&m| m.min(n - 1)).collect();
    let top = ms.iter().copied().max().unwrap_or(0);
    if top == 0 {
        return vec![0.0; ms.len()];
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let row = dict.gram_row(i);
            let mut mags: Vec<f64> = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, g)| g.abs())
                .collect();
            if top < mags.len() {
                mags.select_nth_unstable_by(top - 1, |a, b| b.total_cmp(a));
                mags.truncate(top);
            }
            mags.sort_unstable_by(|a, b| b.total_cmp(a));
            let mut prefix = vec![0.0; top + 1];
            for (k, v) in mags.iter().enumerate() {
                prefix[k + 1] = prefix[k] + v;
            }
            ms.iter().map(|&m| prefix[m]).collect::<Vec<_>>()
        })
        .reduce(
            || vec![0.0; ms.len()],
            |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
        )
}

/// `1 - 2r / (1 - neumann_in)`, the ERC threshold under noise.
pub fn noisy_erc_threshold(neumann_in: f64, r: f64) -> Result<f64> {
    if r == 0.0 {
        return Ok(1.0);
    }
    if !(neumann_in < 1.0) {
        return Err(Error::HypothesisViolated { neumann_in });
    }
    Ok(1.0 - 2.0 * r / (1.0 - neumann_in))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErcNoise {
    pub threshold: f64,
    pub erc_value: f64,
    pub pass: bool,
}

/// εERC: `erc_value < 1 - 2r / (1 - neumann_in)`.
///
/// At `r = 0` this is the plain ERC and the hypothesis on `neumann_in` is
/// not needed.
pub fn erc_noise(dict: &Dictionary, support: &SupportSet, r: &NoiseToSignal) -> Result<ErcNoise> {
    validated(dict, support)?;
    let rows = support_rows(dict, support);
    let sums = neumann_from_rows(dict, support, &rows);
    let threshold = noisy_erc_threshold(sums.neumann_in, r.value)?;
    let erc_value = erc_from_rows(dict, support, &rows)?;
    Ok(ErcNoise {
        threshold,
        erc_value,
        pass: r.admissible() && erc_value < threshold,
    })
}

pub fn neumann_erc_noise(dict: &Dictionary, support: &SupportSet, r: &NoiseToSignal) -> Result<bool> {
    let s = neumann_sums(dict, support)?;
    Ok(r.admissible() && s.passes(r.value))
}

/// `mu1(N - 1) + mu1(N) < 1 - 2r`.
pub fn coherence_condition(dict: &Dictionary, n: usize, r: &NoiseToSignal) -> bool {
    let mu = cumulative_coherences(dict, &[n.saturating_sub(1), n]);
    r.admissible() && mu[0] + mu[1] < r.budget()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBound {
    /// `C` with `||alpha_hat - alpha||_1 <= C * epsilon` once the support is
    /// recovered.
    pub value: f64,
    /// False when the support was too large to enumerate and `value` is the
    /// upper bound `sqrt(N) / sigma_min(A)`.
    pub exact: bool,
}

/// Operator norm `||A^+||_{2->1}` of the pseudoinverse of
/// `A: alpha -> sum_i alpha_i K e_i` on the support.
///
/// `||A^+||_{2->1} = max_s ||A^+^T s||_2` over sign vectors, and
/// `||A^+^T s||^2 = s^T (A^T A)^{-1} s`. The sign vectors are walked in Gray
/// code order so that each step is a rank-one update.
pub fn error_bound_constant(dict: &Dictionary, support: &SupportSet) -> Result<ErrorBound> {
    validated(dict, support)?;
    if support.is_empty() {
        return Ok(ErrorBound {
            value: 0.0,
            exact: true,
        });
    }
    let norms = dict.atom_norms();
    let idx = support.indices();
    let n = idx.len();
    let ata = DMatrix::from_fn(n, n, |a, b| {
        norms[idx[a]] * dict.gram(idx[a], idx[b]) * norms[idx[b]]
    });
    let factor = SpdFactor::new(ata)?;
    if n > EXACT_ERROR_BOUND_MAX_SUPPORT {
        return Ok(ErrorBound {
            value: (n as f64).sqrt() / factor.min_eigenvalue().sqrt(),
            exact: false,
        });
    }
    let m = factor.inverse();
    Ok(ErrorBound {
        value: max_sign_quadratic(&m).sqrt(),
        exact: true,
    })
}

/// `max_{s in {-1,1}^n} s^T M s` for symmetric `M`.
pub fn max_sign_quadratic(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    // s and -s give the same value, so s_0 = +1 is fixed
    let total: u64 = 1 << (n - 1);
    const CHUNK: u64 = 1 << 12;
    let chunks = total.div_ceil(CHUNK);
    let best_code = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(total);
            let mut s = signs_of(gray(start), n);
            let mut w = m * &s;
            let mut q = s.dot(&w);
            let mut best = (q, gray(start));
            for k in start + 1..end {
                let j = (k.trailing_zeros() + 1) as usize;
                let sj = s[j];
                q += -4.0 * sj * w[j] + 4.0 * m[(j, j)];
                w.axpy(-2.0 * sj, &m.column(j), 1.0);
                s[j] = -sj;
                if q > best.0 {
                    best = (q, gray(k));
                }
            }
            best
        })
        .reduce(
            || (f64::NEG_INFINITY, 0),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    let s = signs_of(best_code.1, n);
    s.dot(&(m * &s))
}

fn gray(k: u64) -> u64 {
    k ^ (k >> 1)
}

/// Bit `b` of `code` set means `s_{b+1} = -1`.
fn signs_of(code: u64, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |i, _| {
        if i > 0 && (code >> (i - 1)) & 1 == 1 {
            -1.0
        } else {
            1.0
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdicts {
    pub erc: bool,
    pub neumann: bool,
    pub coherence: bool,
    pub erc_noise: bool,
    pub neumann_noise: bool,
    pub coherence_noise: bool,
}

/// All conditions evaluated on one support at one noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryCertificate {
    pub support_size: usize,
    pub erc_value: f64,
    pub neumann_in: f64,
    pub neumann_out: f64,
    pub mu1_n_minus_1: f64,
    pub mu1_n: f64,
    pub r: NoiseToSignal,
    /// Absent when `neumann_in >= 1` and `r > 0`.
    pub erc_noise_threshold: Option<f64>,
    pub verdicts: Verdicts,
}

impl RecoveryCertificate {
    /// Verdict of the sharpest noisy condition.
    pub fn passes(&self) -> bool {
        self.verdicts.erc_noise
    }
}

pub fn certify(dict: &Dictionary, support: &SupportSet, r: &NoiseToSignal) -> Result<RecoveryCertificate> {
    validated(dict, support)?;
    let rows = support_rows(dict, support);
    let sums = neumann_from_rows(dict, support, &rows);
    let erc_value = erc_from_rows(dict, support, &rows)?;
    let n = support.len();
    let mu = cumulative_coherences(dict, &[n.saturating_sub(1), n]);
    let threshold = noisy_erc_threshold(sums.neumann_in, r.value).ok();
    let ok = r.admissible();
    let verdicts = Verdicts {
        erc: erc_value < 1.0,
        neumann: sums.passes(0.0),
        coherence: mu[0] + mu[1] < 1.0,
        erc_noise: ok && threshold.is_some_and(|t| erc_value < t),
        neumann_noise: ok && sums.passes(r.value),
        coherence_noise: ok && mu[0] + mu[1] < r.budget(),
    };
    Ok(RecoveryCertificate {
        support_size: n,
        erc_value,
        neumann_in: sums.neumann_in,
        neumann_out: sums.neumann_out,
        mu1_n_minus_1: mu[0],
        mu1_n: mu[1],
        r: *r,
        erc_noise_threshold: threshold,
        verdicts,
    })
}

/// Atom outside the support with the largest `||G_II^{-1} g_{I,d}||_1`.
pub fn erc_maximizer(dict: &Dictionary, support: &SupportSet) -> Result<Option<(AtomIndex, f64)>> {
    validated(dict, support)?;
    let rows = support_rows(dict, support);
    let k = support.len();
    if k == 0 {
        return Ok(None);
    }
    let idx = support.indices();
    let factor = SpdFactor::new(DMatrix::from_fn(k, k, |a, b| rows[a][idx[b]]))?;
    Ok(support
        .complement(dict.n_atoms())
        .into_iter()
        .map(|d| {
            let rhs = DVector::from_fn(k, |a, _| rows[a][d]);
            (d, factor.solve(&rhs).lp_norm(1))
        })
        .fold(None, |best: Option<(AtomIndex, f64)>, c| match best {
            Some(b) if b.1 >= c.1 => Some(b),
            _ => Some(c),
        }))
}

/// Coefficients on `support` for which noiseless OMP picks a wrong atom
/// first, when `erc_value > 1`.
///
/// With `x = G_II^{-1} g_{I,d}` for the worst atom `d`, the source
/// `beta = G_II^{-1} sign(x)` has correlation `+-1` with every support atom
/// and `||x||_1 > 1` with `d`. Returns `None` when the ERC holds.
pub fn necessity_witness(dict: &Dictionary, support: &SupportSet) -> Result<Option<SparseSignal>> {
    let Some((d, value)) = erc_maximizer(dict, support)? else {
        return Ok(None);
    };
    if !(value > 1.0) {
        return Ok(None);
    }
    let idx = support.indices();
    let k = idx.len();
    let factor = SpdFactor::new(dict.sub_gram(idx))?;
    let g = DVector::from_fn(k, |a, _| dict.gram(idx[a], d));
    let x = factor.solve(&g);
    let s = x.map(|v| if v < 0.0 { -1.0 } else { 1.0 });
    let beta = factor.solve(&s);
    let norms = dict.atom_norms();
    let pairs: Vec<_> = idx
        .iter()
        .zip(beta.iter())
        .filter(|(_, b)| **b != 0.0)
        .map(|(&i, &b)| (i, b / norms[i]))
        .collect();
    if pairs.len() != k {
        return Ok(None);
    }
    SparseSignal::new(pairs).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn r4() -> Dictionary {
        let s = FRAC_1_SQRT_2;
        Dictionary::build_from_samples(&[
            vec![1.0, 0.0, 0.0, 0.0],
            vec![s, s, 0.0, 0.0],
            vec![s, 0.0, s, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap()
    }

    fn identity(n: usize) -> Dictionary {
        Dictionary::from_columns(DMatrix::identity(n, n)).unwrap()
    }

    fn sup(v: &[usize]) -> SupportSet {
        SupportSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn r4_remark_values() {
        let d = r4();
        let i = sup(&[0, 1, 2]);
        assert!(erc_value(&d, &i).unwrap().abs() < 1e-12);
        let (s, pass) = neumann_erc(&d, &i).unwrap();
        assert!((s.neumann_in - SQRT_2).abs() < 1e-12);
        assert_eq!(s.neumann_out, 0.0);
        assert!(!pass);
        assert!((cumulative_coherence(&d, 1) - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn orthonormal_dictionary_passes_everything() {
        let d = identity(6);
        let i = sup(&[1, 4]);
        assert_eq!(erc_value(&d, &i).unwrap(), 0.0);
        assert_eq!(neumann_erc(&d, &i).unwrap(), (NeumannSums { neumann_in: 0.0, neumann_out: 0.0 }, true));
        for m in 0..6 {
            assert_eq!(cumulative_coherence(&d, m), 0.0);
        }
        let c = certify(&d, &i, &NoiseToSignal::zero()).unwrap();
        assert!(c.verdicts.erc && c.verdicts.neumann && c.verdicts.coherence && c.passes());
    }

    #[test]
    fn noisy_threshold_arithmetic() {
        let d = identity(4);
        let e = erc_noise(&d, &sup(&[0]), &NoiseToSignal::bound(0.25)).unwrap();
        assert_eq!(e.threshold, 0.5);
        assert!(e.pass);
        let e = erc_noise(&d, &sup(&[0]), &NoiseToSignal::bound(0.5)).unwrap();
        assert!(!e.pass);
        assert!(!neumann_erc_noise(&d, &sup(&[0]), &NoiseToSignal::bound(0.5)).unwrap());
    }

    #[test]
    fn hypothesis_violation_only_with_noise() {
        let d = r4();
        let i = sup(&[0, 1, 2]);
        let e = erc_noise(&d, &i, &NoiseToSignal::zero()).unwrap();
        assert_eq!(e.threshold, 1.0);
        assert!(e.pass);
        assert!(matches!(
            erc_noise(&d, &i, &NoiseToSignal::bound(0.1)),
            Err(Error::HypothesisViolated { .. })
        ));
        let c = certify(&d, &i, &NoiseToSignal::bound(0.1)).unwrap();
        assert_eq!(c.erc_noise_threshold, None);
        assert!(!c.verdicts.erc_noise);
    }

    #[test]
    fn bound_mode_ratio() {
        let d = identity(4);
        let sig = SparseSignal::new([(0, 130.0), (1, -90.0)]).unwrap();
        let r = noise_ratio(&d, &sig, Noise::Bound(9.0)).unwrap();
        assert!((r.value - 0.1).abs() < 1e-15);
        let r = noise_ratio(&d, &sig, Noise::Exact(&[0.0; 4])).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.mode, RatioMode::Exact);
    }

    #[test]
    fn error_bound_on_orthonormal_atoms() {
        let d = identity(10);
        for n in 1..=8 {
            let i = SupportSet::new((0..n).collect()).unwrap();
            let c = error_bound_constant(&d, &i).unwrap();
            assert!(c.exact);
            assert!((c.value - (n as f64).sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn gray_walk_matches_brute_force() {
        // deterministic symmetric positive definite matrix
        let n = 7;
        let b = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.4);
        let m = &b * b.transpose() + DMatrix::identity(n, n) * 0.3;
        let mut brute = f64::NEG_INFINITY;
        for code in 0u32..(1 << n) {
            let s = DVector::from_fn(n, |i, _| if (code >> i) & 1 == 1 { -1.0 } else { 1.0 });
            brute = brute.max(s.dot(&(&m * &s)));
        }
        assert!((max_sign_quadratic(&m) - brute).abs() < 1e-12 * brute);
    }

    #[test]
    fn cumulative_coherence_is_subadditive_in_m() {
        let d = r4();
        let mu1 = cumulative_coherence(&d, 1);
        for m in 1..4 {
            assert!(cumulative_coherence(&d, m) <= m as f64 * mu1 + 1e-15);
        }
        // clamps past n - 1
        assert_eq!(cumulative_coherence(&d, 10), cumulative_coherence(&d, 3));
    }

    #[test]
    fn witness_makes_omp_pick_a_wrong_atom() {
        // a fourth atom leaning equally on three orthonormal ones
        let d = Dictionary::build_from_samples(&[
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.5, 0.5, 0.5, 0.5],
        ])
        .unwrap();
        let i = sup(&[0, 1, 2]);
        assert!(erc_value(&d, &i).unwrap() > 1.0);
        let w = necessity_witness(&d, &i).unwrap().unwrap();
        let v = d.synthesize(&w).unwrap();
        let trace = crate::omp::omp(&d, &v, &crate::omp::OmpConfig::default()).unwrap();
        assert_eq!(trace.picked[0], 3);
        assert!(necessity_witness(&identity(4), &sup(&[0, 1])).unwrap().is_none());
    }

    #[test]
    fn maximizer_reports_worst_atom() {
        let d = r4();
        let (_, v) = erc_maximizer(&d, &sup(&[0])).unwrap().unwrap();
        assert!((v - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((erc_value(&d, &sup(&[0])).unwrap() - v).abs() < 1e-15);
    }
}
