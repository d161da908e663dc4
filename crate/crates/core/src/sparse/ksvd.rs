use log::warn;

use super::{encode_all, init_dictionary, Dictionary, SparseCodes, SparseConfig};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2, Matrix};

const POWER_TOLERANCE: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 1000;

#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub dictionary: Dictionary,
    /// Codes of the training data on the final dictionary.
    pub codes: SparseCodes,
    pub residual_norms: Vec<f64>,
    /// `||X - D A||_F` after the coding stage of each sweep, then after the
    /// final coding.
    pub sweep_errors: Vec<f64>,
    /// Atoms re-seeded from badly represented columns because nothing used them.
    pub replaced_atoms: usize,
    /// More atoms than training columns.
    pub underdetermined: bool,
    /// Final columns whose residual is above tolerance (support cap hit).
    pub capped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomUpdate {
    /// Atom and its coefficient row were replaced by the dominant singular
    /// pair of the restricted residual.
    Refit { singular_value: f64 },
    /// No column uses the atom.
    Unused,
}

/// K-SVD dictionary learning.
///
/// Alternates error-tolerance OMP over all columns with a sequential sweep
/// of rank-1 atom updates. Atoms that no column uses are replaced by the
/// currently worst represented data columns.
pub fn ksvd_learn(x: &Matrix, atom_count: usize, cfg: &SparseConfig) -> Result<LearnOutcome> {
    if x.cols() == 0 {
        return Err(Error::DegenerateData("no training columns".into()));
    }
    if atom_count == 0 {
        return Err(Error::InvalidArgument("atom count must be at least 1".into()));
    }
    cfg.validate(atom_count)?;
    if atom_count > x.cols() {
        warn!(
            "learning {atom_count} atoms from only {} columns is under-determined",
            x.cols()
        );
    }
    let dict = init_dictionary(x, atom_count, cfg.seed)?;
    ksvd_refine(x, dict, cfg, true)
}

/// K-SVD sweeps starting from a given dictionary. With `replace_unused`
/// off, atoms nobody uses are left untouched instead of being re-seeded.
pub fn ksvd_refine(
    x: &Matrix,
    initial: Dictionary,
    cfg: &SparseConfig,
    replace_unused: bool,
) -> Result<LearnOutcome> {
    if x.cols() == 0 {
        return Err(Error::DegenerateData("no training columns".into()));
    }
    if x.rows() != initial.atom_len() {
        return Err(Error::Dimension(format!(
            "data rows {} differ from atom length {}",
            x.rows(),
            initial.atom_len()
        )));
    }
    let atom_count = initial.atom_count();
    cfg.validate(atom_count)?;
    let underdetermined = atom_count > x.cols();

    let mut dict = initial;
    let mut sweep_errors = Vec::with_capacity(cfg.learn_iters + 1);
    let mut replaced_atoms = 0;

    for _ in 0..cfg.learn_iters {
        let coded = encode_all(&dict, x, cfg)?;
        sweep_errors.push(coded.frobenius_error());
        let mut codes = coded.codes;
        let users = codes.row_positions();

        let mut worst: Vec<usize> = (0..x.cols()).collect();
        worst.sort_by(|&a, &b| {
            coded.residual_norms[b]
                .total_cmp(&coded.residual_norms[a])
                .then(a.cmp(&b))
        });
        let mut worst = worst
            .into_iter()
            .filter(|&m| coded.residual_norms[m] > 0.0 && norm2(x.col(m)) > 0.0);

        for (k, positions) in users.iter().enumerate() {
            if positions.is_empty() {
                if !replace_unused {
                    continue;
                }
                if let Some(m) = worst.next() {
                    dict.set_atom_normalized(k, x.col(m));
                    replaced_atoms += 1;
                }
            } else {
                refit_atom(x, &mut dict, &mut codes, k, positions);
            }
        }
    }

    let coded = encode_all(&dict, x, cfg)?;
    sweep_errors.push(coded.frobenius_error());
    Ok(LearnOutcome {
        dictionary: dict,
        codes: coded.codes,
        residual_norms: coded.residual_norms,
        sweep_errors,
        replaced_atoms,
        underdetermined,
        capped: coded.capped,
    })
}

/// One K-SVD atom update with the supports of `codes` held fixed.
///
/// The new atom and coefficients are the best rank-1 approximation of the
/// residual restricted to the columns that use atom `k`, so
/// `||X - D A||_F` never increases.
pub fn update_atom(
    x: &Matrix,
    dict: &mut Dictionary,
    codes: &mut SparseCodes,
    k: usize,
) -> Result<AtomUpdate> {
    if x.rows() != dict.atom_len() || x.cols() != codes.cols() {
        return Err(Error::Dimension(format!(
            "data is {}x{}, dictionary atoms have length {}, codes have {} columns",
            x.rows(),
            x.cols(),
            dict.atom_len(),
            codes.cols()
        )));
    }
    if codes.rows() != dict.atom_count() || k >= dict.atom_count() {
        return Err(Error::Dimension(format!(
            "atom {k} with {} atoms and {} code rows",
            dict.atom_count(),
            codes.rows()
        )));
    }
    let positions = codes.row_positions().swap_remove(k);
    if positions.is_empty() {
        return Ok(AtomUpdate::Unused);
    }
    let s = refit_atom(x, dict, codes, k, &positions);
    Ok(AtomUpdate::Refit { singular_value: s })
}

/// Rank-1 refit of atom `k` on the columns in `users`. Returns the
/// dominant singular value of the restricted residual.
fn refit_atom(
    x: &Matrix,
    dict: &mut Dictionary,
    codes: &mut SparseCodes,
    k: usize,
    users: &[(usize, usize)],
) -> f64 {
    let n = dict.atom_len();
    // restricted residual E_k, one column per user
    let mut e = Matrix::zeros(n, users.len());
    for (j, &(m, _)) in users.iter().enumerate() {
        let col = e.col_mut(j);
        col.copy_from_slice(x.col(m));
        let (idx, vals) = codes.column(m);
        for (&a, &v) in idx.iter().zip(vals) {
            if a != k {
                axpy(-v, dict.atom(a), col);
            }
        }
    }

    let gram = outer_gram(&e);
    let u = dominant_eigenvector(&gram, dict.atom(k)).or_else(|| {
        // current atom is orthogonal to every residual column
        let best = (0..e.cols()).max_by(|&a, &b| norm2(e.col(a)).total_cmp(&norm2(e.col(b))))?;
        dominant_eigenvector(&gram, e.col(best))
    });

    match u {
        Some(u) => {
            dict.set_atom_normalized(k, &u);
            let mut s2 = 0.0;
            for (j, &(_, pos)) in users.iter().enumerate() {
                let beta = dot(dict.atom(k), e.col(j));
                s2 += beta * beta;
                codes.set_value_at(pos, beta);
            }
            s2.sqrt()
        }
        None => {
            // E_k = 0: the other atoms already explain these columns
            for &(_, pos) in users {
                codes.set_value_at(pos, 0.0);
            }
            0.0
        }
    }
}

/// `E E^T`, symmetric `N x N`.
fn outer_gram(e: &Matrix) -> Matrix {
    let n = e.rows();
    let mut g = Matrix::zeros(n, n);
    for col in e.columns() {
        for j in 0..n {
            let cj = col[j];
            if cj == 0.0 {
                continue;
            }
            axpy(cj, col, g.col_mut(j));
        }
    }
    g
}

/// Power iteration on a symmetric PSD matrix from `start`. The Rayleigh
/// quotient is non-decreasing along the iterates, so the result is never a
/// worse rank-1 direction than `start`. `None` when `G start = 0`.
fn dominant_eigenvector(g: &Matrix, start: &[f64]) -> Option<Vec<f64>> {
    let n = g.rows();
    let mut u: Vec<f64> = start.to_vec();
    let norm = norm2(&u);
    if norm == 0.0 {
        return None;
    }
    u.iter_mut().for_each(|v| *v /= norm);
    let mut lambda = 0.0;
    let mut v = vec![0.0; n];
    for _ in 0..POWER_MAX_ITERS {
        v.iter_mut().for_each(|t| *t = 0.0);
        for (j, &uj) in u.iter().enumerate() {
            axpy(uj, g.col(j), &mut v);
        }
        let next_lambda = dot(&u, &v);
        let v_norm = norm2(&v);
        if v_norm == 0.0 || !v_norm.is_finite() {
            return if lambda > 0.0 { Some(u) } else { None };
        }
        v.iter().zip(u.iter_mut()).for_each(|(a, b)| *b = a / v_norm);
        let converged = (next_lambda - lambda).abs() <= POWER_TOLERANCE * next_lambda.abs();
        lambda = next_lambda;
        if converged {
            break;
        }
    }
    Some(u)
}
