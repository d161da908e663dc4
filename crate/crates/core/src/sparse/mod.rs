//! Sparse decomposition `X ~ D A`: unit-norm dictionaries, column-sparse
//! codes, error-tolerance orthogonal matching pursuit and K-SVD learning.

mod codes;
mod dictionary;
mod ksvd;
mod omp;

pub use codes::{SparseCodes, SparseColumn};
pub use dictionary::{init_dictionary, Dictionary, UNIT_NORM_TOLERANCE};
pub use ksvd::{ksvd_learn, ksvd_refine, update_atom, AtomUpdate, LearnOutcome};
pub use omp::{encode_all, omp_encode, EncodeOutcome, OmpCode, StopReason};

use crate::error::{Error, Result};
use crate::linalg::{axpy, Matrix};

/// Parameters of the sparse decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseConfig {
    /// Per-pixel RMS error tolerance; pursuit stops once
    /// `||x - D a||_2 <= epsilon * sqrt(N)`.
    pub epsilon: f64,
    /// Optional cap on the support size of each code.
    pub max_support: Option<usize>,
    /// Number of K-SVD sweeps.
    pub learn_iters: usize,
    pub seed: u64,
}

impl Default for SparseConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            max_support: None,
            learn_iters: 12,
            seed: 0,
        }
    }
}

impl SparseConfig {
    pub fn validate(&self, atom_count: usize) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be finite and non-negative, got {}",
                self.epsilon
            )));
        }
        if let Some(cap) = self.max_support {
            if cap == 0 || cap > atom_count {
                return Err(Error::InvalidArgument(format!(
                    "max_support {cap} outside [1, {atom_count}]"
                )));
            }
        }
        Ok(())
    }

    /// Residual norm below which a length-`n` signal counts as represented.
    pub fn residual_tolerance(&self, n: usize) -> f64 {
        self.epsilon * (n as f64).sqrt()
    }
}

/// Dense product `D A`.
pub fn reconstruct(dict: &Dictionary, codes: &SparseCodes) -> Result<Matrix> {
    reconstruct_with(dict.atoms(), codes)
}

/// `atoms * codes` for any atom matrix whose column count matches the code rows.
pub(crate) fn reconstruct_with(atoms: &Matrix, codes: &SparseCodes) -> Result<Matrix> {
    if atoms.cols() != codes.rows() {
        return Err(Error::Dimension(format!(
            "{} atoms but codes have {} rows",
            atoms.cols(),
            codes.rows()
        )));
    }
    let mut out = Matrix::zeros(atoms.rows(), codes.cols());
    for m in 0..codes.cols() {
        let (idx, vals) = codes.column(m);
        let dst = out.col_mut(m);
        for (&k, &v) in idx.iter().zip(vals) {
            axpy(v, atoms.col(k), dst);
        }
    }
    Ok(out)
}
