use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{norm2, Matrix};

/// Allowed deviation of an atom's l2 norm from 1.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-9;

/// `N x K` matrix of unit-norm atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atoms: Matrix,
}

impl Dictionary {
    /// Wraps an atom matrix, rejecting any column that is not unit norm.
    pub fn new(atoms: Matrix) -> Result<Self> {
        if atoms.cols() == 0 || atoms.rows() == 0 {
            return Err(Error::Dimension("dictionary needs at least one atom".into()));
        }
        if !atoms.is_finite() {
            return Err(Error::NonFinite("dictionary atoms".into()));
        }
        for (k, col) in atoms.columns().enumerate() {
            let norm = norm2(col);
            if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
                return Err(Error::NotUnitNorm { atom: k, norm });
            }
        }
        Ok(Self { atoms })
    }

    /// Scales every column to unit norm. Zero columns are an error.
    pub fn normalized(mut atoms: Matrix) -> Result<Self> {
        for k in 0..atoms.cols() {
            let col = atoms.col_mut(k);
            let norm = norm2(col);
            if norm == 0.0 || !norm.is_finite() {
                return Err(Error::NotUnitNorm { atom: k, norm });
            }
            col.iter_mut().for_each(|v| *v /= norm);
        }
        Self::new(atoms)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            atoms: Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 }),
        }
    }

    /// Atom length `N`.
    #[inline]
    pub fn atom_len(&self) -> usize {
        self.atoms.rows()
    }

    /// Atom count `K`.
    #[inline]
    pub fn atom_count(&self) -> usize {
        self.atoms.cols()
    }

    pub fn is_overcomplete(&self) -> bool {
        self.atom_count() > self.atom_len()
    }

    #[inline]
    pub fn atom(&self, k: usize) -> &[f64] {
        self.atoms.col(k)
    }

    pub fn atoms(&self) -> &Matrix {
        &self.atoms
    }

    pub fn into_atoms(self) -> Matrix {
        self.atoms
    }

    /// Dictionary made of the atoms at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&k) = indices.iter().find(|&&k| k >= self.atom_count()) {
            return Err(Error::Dimension(format!(
                "atom {k} out of range for {} atoms",
                self.atom_count()
            )));
        }
        Self::new(self.atoms.select_columns(indices))
    }

    /// Overwrites atom `k` with `values / ||values||`.
    pub(crate) fn set_atom_normalized(&mut self, k: usize, values: &[f64]) {
        let norm = norm2(values);
        debug_assert!(norm > 0.0);
        for (dst, v) in self.atoms.col_mut(k).iter_mut().zip(values) {
            *dst = v / norm;
        }
    }
}

/// Seeded dictionary initialisation from data columns.
///
/// Picks `K` distinct non-zero columns without replacement. When fewer than
/// `K` usable columns exist, the columns are cycled and every repeat gets a
/// Gaussian jitter so that no two atoms coincide.
pub fn init_dictionary(x: &Matrix, atom_count: usize, seed: u64) -> Result<Dictionary> {
    if atom_count == 0 {
        return Err(Error::InvalidArgument("atom count must be at least 1".into()));
    }
    if x.cols() == 0 {
        return Err(Error::DegenerateData("no data columns".into()));
    }
    let usable: Vec<usize> = (0..x.cols()).filter(|&m| norm2(x.col(m)) > 0.0).collect();
    if usable.is_empty() {
        return Err(Error::DegenerateData("all data columns are zero".into()));
    }
    let n = x.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut atoms = Matrix::zeros(n, atom_count);
    let mut filled = 0;
    let mut round = 0usize;
    while filled < atom_count {
        let take = (atom_count - filled).min(usable.len());
        let picks = sample(&mut rng, usable.len(), take);
        for p in picks.iter() {
            let src = x.col(usable[p]);
            let scale = norm2(src);
            let dst = atoms.col_mut(filled);
            for (d, s) in dst.iter_mut().zip(src) {
                *d = s / scale;
            }
            if round > 0 {
                // repeats are perturbed by ~5% of their norm
                let sd = 0.05 / (n as f64).sqrt();
                for d in dst.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *d += sd * z;
                }
            }
            let norm = norm2(dst);
            dst.iter_mut().for_each(|v| *v /= norm);
            filled += 1;
        }
        round += 1;
    }
    Dictionary::new(atoms)
}
