//! Finite dictionaries of unit-normed atoms `d_i = K e_i / ||K e_i||` and
//! their Gram matrices.
//!
//! A dictionary is either realized from sampled atoms (so that residual
//! correlations can be computed) or from a shift-invariant kernel model on an
//! index lattice, in which case Gram entries come from the model's closed
//! form and no samples exist.

use std::borrow::Cow;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fresnel::HoloParams;
use crate::gaussian::GaussianKernel;

/// Index of an atom. For 2-D lattices this is the row-major flattening of
/// the lattice position.
pub type AtomIndex = usize;

/// Atoms with a norm below this are rejected as zero.
pub const ZERO_ATOM_NORM: f64 = 1e-14;

/// Allowed deviation of a Gram diagonal entry from one.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-12;

/// Dense Gram storage is used up to this many atoms for kernel dictionaries.
pub const DENSE_GRAM_MAX_ATOMS: usize = 4096;

/// Upper bound on `n^2 * m` work for computing a sampled Gram eagerly.
const DENSE_SAMPLED_GRAM_WORK: f64 = 4e9;

/// Strictly increasing set of atom indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SupportSet(Vec<AtomIndex>);

impl SupportSet {
    /// Builds a support from arbitrary-order indices. Duplicates are an error.
    pub fn new(mut indices: Vec<AtomIndex>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSupport("duplicate atom index".into()));
        }
        Ok(Self(indices))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[AtomIndex] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = AtomIndex> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, index: AtomIndex) -> bool {
        self.0.binary_search(&index).is_ok()
    }

    /// Indices in `0..n_atoms` not in the support.
    pub fn complement(&self, n_atoms: usize) -> Vec<AtomIndex> {
        (0..n_atoms).filter(|i| !self.contains(*i)).collect()
    }

    pub fn check_bounds(&self, n_atoms: usize) -> Result<()> {
        match self.0.last() {
            Some(&last) if last >= n_atoms => Err(Error::InvalidSupport(format!(
                "index {last} out of range for {n_atoms} atoms"
            ))),
            _ => Ok(()),
        }
    }
}

impl TryFrom<Vec<usize>> for SupportSet {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SupportSet> for Vec<usize> {
    fn from(s: SupportSet) -> Self {
        s.0
    }
}

/// Source coefficients `alpha_i` on an explicit support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSignal {
    support: SupportSet,
    coefficients: Vec<f64>,
}

impl SparseSignal {
    /// Pairs are sorted by index; all coefficients must be nonzero.
    pub fn new(pairs: impl IntoIterator<Item = (AtomIndex, f64)>) -> Result<Self> {
        let mut pairs: Vec<_> = pairs.into_iter().collect();
        pairs.sort_by_key(|p| p.0);
        if pairs.iter().any(|p| p.1 == 0.0 || !p.1.is_finite()) {
            return Err(Error::InvalidSupport(
                "coefficients must be finite and nonzero".into(),
            ));
        }
        let (idx, coefficients): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        Ok(Self {
            support: SupportSet::new(idx)?,
            coefficients,
        })
    }

    /// Used by the solver, whose least-squares coefficients are nonzero
    /// except on a measure-zero set.
    pub(crate) fn from_parts(support: SupportSet, coefficients: Vec<f64>) -> Self {
        debug_assert_eq!(support.len(), coefficients.len());
        Self {
            support,
            coefficients,
        }
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (AtomIndex, f64)> + '_ {
        self.support.iter().zip(self.coefficients.iter().copied())
    }

    /// Coefficient at `index`, zero off the support.
    pub fn get(&self, index: AtomIndex) -> f64 {
        match self.support.indices().binary_search(&index) {
            Ok(k) => self.coefficients[k],
            Err(_) => 0.0,
        }
    }

    /// `sum |a_i - b_i|` over the union of both supports.
    pub fn l1_distance(&self, other: &SparseSignal) -> f64 {
        let mut all: Vec<_> = self.support.iter().chain(other.support.iter()).collect();
        all.sort_unstable();
        all.dedup();
        all.into_iter()
            .map(|i| (self.get(i) - other.get(i)).abs())
            .sum()
    }
}

/// Finite window of atom positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Lattice {
    /// `count` points `origin + k * spacing` on the x axis.
    Line {
        origin: f64,
        spacing: f64,
        count: usize,
    },
    /// `nx * ny` points, index `iy * nx + ix`.
    Grid {
        origin: (f64, f64),
        spacing: f64,
        nx: usize,
        ny: usize,
    },
}

impl Lattice {
    /// Integer positions `lo..=hi`.
    pub fn integers(lo: i64, hi: i64) -> Self {
        assert!(hi >= lo);
        Lattice::Line {
            origin: lo as f64,
            spacing: 1.0,
            count: (hi - lo + 1) as usize,
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            Lattice::Line { count, .. } => count,
            Lattice::Grid { nx, ny, .. } => nx * ny,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> f64 {
        match *self {
            Lattice::Line { spacing, .. } | Lattice::Grid { spacing, .. } => spacing,
        }
    }

    pub fn position(&self, index: AtomIndex) -> (f64, f64) {
        match *self {
            Lattice::Line {
                origin, spacing, ..
            } => (origin + index as f64 * spacing, 0.0),
            Lattice::Grid {
                origin,
                spacing,
                nx,
                ..
            } => {
                let (ix, iy) = (index % nx, index / nx);
                (
                    origin.0 + ix as f64 * spacing,
                    origin.1 + iy as f64 * spacing,
                )
            }
        }
    }

    pub fn distance(&self, i: AtomIndex, j: AtomIndex) -> f64 {
        let (a, b) = (self.position(i), self.position(j));
        (a.0 - b.0).hypot(a.1 - b.1)
    }

    /// Index of the lattice point at `(x, y)`, if it is one.
    pub fn index_of(&self, x: f64, y: f64) -> Option<AtomIndex> {
        let snap = |v: f64, o: f64, h: f64, n: usize| -> Option<usize> {
            let k = (v - o) / h;
            let r = k.round();
            ((k - r).abs() < 1e-6 && r >= 0.0 && (r as usize) < n).then_some(r as usize)
        };
        match *self {
            Lattice::Line {
                origin,
                spacing,
                count,
            } => {
                if y.abs() > 1e-9 * spacing {
                    return None;
                }
                snap(x, origin, spacing, count)
            }
            Lattice::Grid {
                origin,
                spacing,
                nx,
                ny,
            } => {
                let ix = snap(x, origin.0, spacing, nx)?;
                let iy = snap(y, origin.1, spacing, ny)?;
                Some(iy * nx + ix)
            }
        }
    }
}

/// Physical kernel with a closed-form normalized correlation that depends
/// only on the distance between atom centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelModel {
    Gaussian(GaussianKernel),
    Fresnel(HoloParams),
}

impl KernelModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelModel::Gaussian(k) => GaussianKernel::new(k.sigma()).map(|_| ()),
            KernelModel::Fresnel(p) => p.validate(),
        }
    }

    /// `<d_i, d_j>` for atoms whose centers are `distance` apart.
    pub fn correlation(&self, distance: f64) -> f64 {
        match self {
            KernelModel::Gaussian(k) => k.correlation(distance),
            KernelModel::Fresnel(p) => crate::fresnel::far_field_correlation(p, distance),
        }
    }

    /// `||K e_i||` in the model's continuous signal space.
    pub fn atom_norm(&self) -> f64 {
        match self {
            KernelModel::Gaussian(_) => 1.0,
            KernelModel::Fresnel(p) => p.atom_norm(),
        }
    }
}

#[derive(Debug, Clone)]
enum GramStore {
    Dense(DMatrix<f64>),
    Kernel { model: KernelModel, lattice: Lattice },
    Samples,
}

/// Finite dictionary with unit-normed atoms and a Gram oracle.
///
/// Immutable after construction and safe to share between threads.
#[derive(Debug, Clone)]
pub struct Dictionary {
    atom_norms: Vec<f64>,
    gram: GramStore,
    /// Unit-norm atoms as columns.
    atoms: Option<DMatrix<f64>>,
}

impl Dictionary {
    /// Normalizes the given atom samples to unit Euclidean norm.
    pub fn build_from_samples(samples: &[Vec<f64>]) -> Result<Self> {
        let n = samples.len();
        let m = samples.first().map_or(0, Vec::len);
        if let Some(bad) = samples.iter().find(|s| s.len() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: bad.len(),
            });
        }
        let matrix = DMatrix::from_fn(m, n, |r, c| samples[c][r]);
        Self::from_columns(matrix)
    }

    /// Same as [`Dictionary::build_from_samples`] with atoms given as matrix columns.
    pub fn from_columns(mut atoms: DMatrix<f64>) -> Result<Self> {
        let n = atoms.ncols();
        let mut atom_norms = Vec::with_capacity(n);
        for (index, mut col) in atoms.column_iter_mut().enumerate() {
            let norm = col.norm();
            if !(norm >= ZERO_ATOM_NORM) {
                return Err(Error::ZeroAtom { index, norm });
            }
            col /= norm;
            atom_norms.push(norm);
        }
        let work = (n * n) as f64 * atoms.nrows() as f64;
        let gram = if work <= DENSE_SAMPLED_GRAM_WORK {
            GramStore::Dense(symmetric_gram(&atoms))
        } else {
            GramStore::Samples
        };
        let dict = Self {
            atom_norms,
            gram,
            atoms: Some(atoms),
        };
        dict.check_unit_diagonal()?;
        Ok(dict)
    }

    /// Gram entries from the model's closed-form correlation on the lattice.
    pub fn build_from_kernel(model: &KernelModel, lattice: &Lattice) -> Result<Self> {
        model.validate()?;
        let n = lattice.len();
        let gram = if n <= DENSE_GRAM_MAX_ATOMS {
            let mut g = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = model.correlation(lattice.distance(i, j));
                    g[(i, j)] = v;
                    g[(j, i)] = v;
                }
            }
            GramStore::Dense(g)
        } else {
            GramStore::Kernel {
                model: model.clone(),
                lattice: lattice.clone(),
            }
        };
        let dict = Self {
            atom_norms: vec![model.atom_norm(); n],
            gram,
            atoms: None,
        };
        dict.check_unit_diagonal()?;
        Ok(dict)
    }

    fn check_unit_diagonal(&self) -> Result<()> {
        for i in 0..self.n_atoms() {
            let value = self.gram(i, i);
            if (value - 1.0).abs() > UNIT_NORM_TOLERANCE {
                return Err(Error::NotUnitNorm { index: i, value });
            }
        }
        Ok(())
    }

    pub fn n_atoms(&self) -> usize {
        self.atom_norms.len()
    }

    /// `||K e_i||` for each atom.
    pub fn atom_norms(&self) -> &[f64] {
        &self.atom_norms
    }

    /// Unit atoms as matrix columns, if the dictionary was built from samples.
    pub fn atoms(&self) -> Option<&DMatrix<f64>> {
        self.atoms.as_ref()
    }

    /// Length of signal-space vectors, if sampled.
    pub fn signal_len(&self) -> Option<usize> {
        self.atoms.as_ref().map(DMatrix::nrows)
    }

    pub fn has_dense_gram(&self) -> bool {
        matches!(self.gram, GramStore::Dense(_))
    }

    pub fn gram(&self, i: AtomIndex, j: AtomIndex) -> f64 {
        match &self.gram {
            GramStore::Dense(g) => g[(i, j)],
            GramStore::Kernel { model, lattice } => model.correlation(lattice.distance(i, j)),
            GramStore::Samples => {
                let a = self.atoms.as_ref().expect("sampled gram without samples");
                a.column(i).dot(&a.column(j))
            }
        }
    }

    /// Row `i` of the Gram matrix, computed on demand for lazy storage.
    pub fn gram_row(&self, i: AtomIndex) -> Cow<'_, [f64]> {
        match &self.gram {
            GramStore::Dense(g) => {
                // symmetric: column i is row i, and columns are contiguous
                let n = g.nrows();
                Cow::Borrowed(&g.as_slice()[i * n..(i + 1) * n])
            }
            GramStore::Kernel { model, lattice } => Cow::Owned(
                (0..self.n_atoms())
                    .into_par_iter()
                    .map(|j| model.correlation(lattice.distance(i, j)))
                    .collect(),
            ),
            GramStore::Samples => {
                let a = self.atoms.as_ref().expect("sampled gram without samples");
                let col = a.column(i);
                Cow::Owned(
                    (0..self.n_atoms())
                        .into_par_iter()
                        .map(|j| a.column(j).dot(&col))
                        .collect(),
                )
            }
        }
    }

    /// Gram matrix restricted to rows and columns in `indices`.
    pub fn sub_gram(&self, indices: &[AtomIndex]) -> DMatrix<f64> {
        let k = indices.len();
        DMatrix::from_fn(k, k, |a, b| self.gram(indices[a], indices[b]))
    }

    /// Full dense Gram matrix (materialized if stored lazily).
    pub fn gram_matrix(&self) -> Cow<'_, DMatrix<f64>> {
        match &self.gram {
            GramStore::Dense(g) => Cow::Borrowed(g),
            _ => {
                let n = self.n_atoms();
                let rows: Vec<Vec<f64>> = (0..n)
                    .into_par_iter()
                    .map(|i| self.gram_row(i).into_owned())
                    .collect();
                Cow::Owned(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
            }
        }
    }

    fn sampled_atoms(&self) -> Result<&DMatrix<f64>> {
        self.atoms.as_ref().ok_or(Error::MissingSamples)
    }

    /// `<residual, d_i>` for every atom.
    pub fn correlate(&self, residual: &[f64]) -> Result<Vec<f64>> {
        let a = self.sampled_atoms()?;
        if residual.len() != a.nrows() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: residual.len(),
            });
        }
        let r = DVector::from_column_slice(residual);
        Ok(a.tr_mul(&r).as_slice().to_vec())
    }

    /// Signal-space vector `sum_i alpha_i ||K e_i|| d_i`.
    pub fn synthesize(&self, signal: &SparseSignal) -> Result<Vec<f64>> {
        let a = self.sampled_atoms()?;
        signal.support().check_bounds(self.n_atoms())?;
        let mut v = DVector::zeros(a.nrows());
        for (i, alpha) in signal.iter() {
            v.axpy(alpha * self.atom_norms[i], &a.column(i), 1.0);
        }
        Ok(v.as_slice().to_vec())
    }
}

fn symmetric_gram(atoms: &DMatrix<f64>) -> DMatrix<f64> {
    let n = atoms.ncols();
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let cj = atoms.column(j);
            (0..=j).map(|i| atoms.column(i).dot(&cj)).collect()
        })
        .collect();
    let mut g = DMatrix::zeros(n, n);
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    pub(crate) fn r4_example() -> Dictionary {
        let s = FRAC_1_SQRT_2;
        Dictionary::build_from_samples(&[
            vec![1.0, 0.0, 0.0, 0.0],
            vec![s, s, 0.0, 0.0],
            vec![s, 0.0, s, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn r4_gram_entries() {
        let d = r4_example();
        assert!((d.gram(0, 1) - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((d.gram(1, 2) - 0.5).abs() < 1e-15);
        assert_eq!(d.gram(0, 3), 0.0);
    }

    #[test]
    fn identity_columns_give_identity_gram() {
        let d = Dictionary::from_columns(DMatrix::identity(5, 5)).unwrap();
        assert_eq!(*d.gram_matrix(), DMatrix::<f64>::identity(5, 5));
        assert!(d.atom_norms().iter().all(|&n| n == 1.0));
    }

    #[test]
    fn identical_columns_are_perfectly_coherent() {
        let d = Dictionary::build_from_samples(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert!((d.gram(0, 1) - 1.0).abs() < 1e-15);
        assert!((d.atom_norms()[0] - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_atom_is_rejected() {
        let err = Dictionary::build_from_samples(&[vec![1.0, 0.0], vec![0.0, 1e-15]]).unwrap_err();
        assert!(matches!(err, Error::ZeroAtom { index: 1, .. }));
    }

    #[test]
    fn ragged_samples_are_rejected() {
        let err = Dictionary::build_from_samples(&[vec![1.0, 0.0], vec![1.0]]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn correlate_examples() {
        let d = r4_example();
        let d3: Vec<f64> = d.atoms().unwrap().column(3).iter().copied().collect();
        let c = d.correlate(&d3).unwrap();
        assert_eq!(c[3], 1.0);
        assert!(d.correlate(&[0.0; 4]).unwrap().iter().all(|&x| x == 0.0));

        // hand dot products: d1 + d2 (0-based 0 and 1) = (1 + s, s, 0, 0)
        let s = FRAC_1_SQRT_2;
        let c = d.correlate(&[1.0 + s, s, 0.0, 0.0]).unwrap();
        assert!((c[1] - (1.0 + s)).abs() < 1e-15);
        assert!((c[0] - (1.0 + s)).abs() < 1e-15);
    }

    #[test]
    fn kernel_dictionary_has_no_samples() {
        let model = KernelModel::Gaussian(GaussianKernel::new(1.0).unwrap());
        let d = Dictionary::build_from_kernel(&model, &Lattice::integers(0, 4)).unwrap();
        assert_eq!(d.correlate(&[0.0; 5]), Err(Error::MissingSamples));
        assert_eq!(d.gram(2, 2), 1.0);
    }

    #[test]
    fn invalid_kernel_parameters() {
        let bad = KernelModel::Gaussian(GaussianKernel::unchecked(-1.0));
        assert!(matches!(
            Dictionary::build_from_kernel(&bad, &Lattice::integers(0, 3)),
            Err(Error::InvalidModelParams(_))
        ));
    }

    #[test]
    fn support_rejects_duplicates_and_sorts() {
        assert!(SupportSet::new(vec![3, 1, 3]).is_err());
        assert_eq!(SupportSet::new(vec![3, 1, 2]).unwrap().indices(), &[1, 2, 3]);
        assert!(SparseSignal::new([(0, 1.0), (2, 0.0)]).is_err());
    }

    #[test]
    fn grid_lattice_round_trips_positions() {
        let l = Lattice::Grid {
            origin: (-50.0, 25.0),
            spacing: 25.0,
            nx: 4,
            ny: 3,
        };
        for i in 0..l.len() {
            let (x, y) = l.position(i);
            assert_eq!(l.index_of(x, y), Some(i));
        }
        assert_eq!(l.index_of(-40.0, 25.0), None);
        assert!((l.distance(0, 5) - 25.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lazy_and_dense_rows_agree() {
        let atoms = DMatrix::from_fn(7, 5, |r, c| ((r * 3 + c * 5) % 7) as f64 + 0.5);
        let dense = Dictionary::from_columns(atoms.clone()).unwrap();
        let mut lazy = dense.clone();
        lazy.gram = GramStore::Samples;
        for i in 0..5 {
            let a = dense.gram_row(i);
            let b = lazy.gram_row(i);
            for j in 0..5 {
                assert!((a[j] - b[j]).abs() < 1e-14);
            }
        }
    }
}
