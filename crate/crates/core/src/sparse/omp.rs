use rayon::prelude::*;

use super::{Dictionary, SparseCodes, SparseColumn, SparseConfig};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2, Matrix};

/// Residuals smaller than this fraction of `||x||` count as exact.
const EXACT_FLOOR: f64 = 1e-12;
/// Minimum squared distance of a new atom from the span of the selected ones.
const INDEPENDENCE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Residual met the error tolerance.
    Tolerance,
    /// Support reached `max_support` before the tolerance was met.
    SupportCap,
    /// No remaining atom can reduce the residual (only reported when a
    /// support cap is configured; otherwise it is an error).
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmpCode {
    pub column: SparseColumn,
    pub residual_norm: f64,
    pub stop: StopReason,
}

/// Orthogonal matching pursuit under an error tolerance.
///
/// Each step adds the atom most correlated with the current residual (ties go
/// to the lower index) and refits all selected coefficients by least squares,
/// so the residual stays orthogonal to the selected atoms. The Gram matrix of
/// the support is kept as an incrementally grown Cholesky factor.
pub fn omp_encode(dict: &Dictionary, x: &[f64], cfg: &SparseConfig) -> Result<OmpCode> {
    let n = dict.atom_len();
    let k_total = dict.atom_count();
    if x.len() != n {
        return Err(Error::Dimension(format!(
            "signal of length {} for atoms of length {n}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("signal to encode".into()));
    }
    cfg.validate(k_total)?;

    let x_norm = norm2(x);
    let tolerance = cfg.residual_tolerance(n).max(EXACT_FLOOR * x_norm);
    if x_norm <= tolerance {
        return Ok(OmpCode {
            column: SparseColumn::default(),
            residual_norm: x_norm,
            stop: StopReason::Tolerance,
        });
    }

    let natural_limit = n.min(k_total);
    let limit = cfg.max_support.map_or(natural_limit, |c| c.min(natural_limit));

    let mut support: Vec<usize> = Vec::with_capacity(limit);
    let mut selected = vec![false; k_total];
    // rows of the lower Cholesky factor of D_S^T D_S
    let mut chol: Vec<Vec<f64>> = Vec::with_capacity(limit);
    let mut rhs: Vec<f64> = Vec::with_capacity(limit);
    let mut coef: Vec<f64> = Vec::new();
    let mut residual = x.to_vec();
    let mut r_norm = x_norm;

    let stop = loop {
        if support.len() >= limit {
            break if support.len() == cfg.max_support.unwrap_or(usize::MAX) {
                StopReason::SupportCap
            } else {
                StopReason::Stalled
            };
        }

        let mut best: Option<(usize, f64)> = None;
        for (k, _) in selected.iter().enumerate().filter(|(_, &used)| !used) {
            let c = dot(dict.atom(k), &residual).abs();
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((k, c));
            }
        }
        let Some((atom, corr)) = best else {
            break StopReason::Stalled;
        };
        if corr <= EXACT_FLOOR * r_norm {
            break StopReason::Stalled;
        }

        let d_new = dict.atom(atom);
        let g: Vec<f64> = support.iter().map(|&s| dot(dict.atom(s), d_new)).collect();
        let w = forward_substitute(&chol, &g);
        let delta = 1.0 - dot(&w, &w);
        if delta <= INDEPENDENCE_FLOOR {
            break StopReason::Stalled;
        }
        let mut row = w;
        row.push(delta.sqrt());
        chol.push(row);
        support.push(atom);
        selected[atom] = true;
        rhs.push(dot(d_new, x));

        let y = forward_substitute(&chol, &rhs);
        coef = backward_substitute(&chol, &y);

        residual.copy_from_slice(x);
        for (&s, &a) in support.iter().zip(&coef) {
            axpy(-a, dict.atom(s), &mut residual);
        }
        r_norm = norm2(&residual);
        if r_norm <= tolerance {
            break StopReason::Tolerance;
        }
    };

    if stop == StopReason::Stalled && cfg.max_support.is_none() {
        return Err(Error::PursuitExhausted {
            support: support.len(),
            residual: r_norm,
            tolerance,
        });
    }

    let column = SparseColumn::from_pairs(support.into_iter().zip(coef).collect())?;
    Ok(OmpCode {
        column,
        residual_norm: r_norm,
        stop,
    })
}

/// Solves `L y = b` for lower-triangular `L` given by rows.
fn forward_substitute(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let mut y = Vec::with_capacity(b.len());
    for (i, row) in l.iter().enumerate().take(b.len()) {
        let s = b[i] - dot(&row[..i], &y[..i]);
        y.push(s / row[i]);
    }
    y
}

/// Solves `L^T a = y`.
fn backward_substitute(l: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut a = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in i + 1..n {
            s -= l[j][i] * a[j];
        }
        a[i] = s / l[i][i];
    }
    a
}

/// Codes of a whole data matrix plus per-column diagnostics.
#[derive(Debug, Clone)]
pub struct EncodeOutcome {
    pub codes: SparseCodes,
    pub residual_norms: Vec<f64>,
    /// Columns whose residual is still above tolerance (support cap or stall).
    pub capped: usize,
}

impl EncodeOutcome {
    /// `||X - D A||_F`.
    pub fn frobenius_error(&self) -> f64 {
        self.residual_norms.iter().map(|r| r * r).sum::<f64>().sqrt()
    }
}

/// Column-wise [`omp_encode`]. Columns are independent and coded in parallel;
/// the result does not depend on processing order. The first failing column
/// (lowest index) is reported.
pub fn encode_all(dict: &Dictionary, x: &Matrix, cfg: &SparseConfig) -> Result<EncodeOutcome> {
    if x.rows() != dict.atom_len() {
        return Err(Error::Dimension(format!(
            "data rows {} vs atom length {}",
            x.rows(),
            dict.atom_len()
        )));
    }
    let results: Vec<Result<OmpCode>> = (0..x.cols())
        .into_par_iter()
        .map(|m| omp_encode(dict, x.col(m), cfg))
        .collect();
    let mut columns = Vec::with_capacity(results.len());
    let mut residual_norms = Vec::with_capacity(results.len());
    let mut capped = 0;
    for (m, r) in results.into_iter().enumerate() {
        let code = r.map_err(|e| e.in_column(m))?;
        if code.stop != StopReason::Tolerance {
            capped += 1;
        }
        residual_norms.push(code.residual_norm);
        columns.push(code.column);
    }
    Ok(EncodeOutcome {
        codes: SparseCodes::from_columns(dict.atom_count(), columns)?,
        residual_norms,
        capped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::reconstruct;
    use std::f64::consts::SQRT_2;

    fn exact() -> SparseConfig {
        SparseConfig {
            epsilon: 0.0,
            ..SparseConfig::default()
        }
    }

    #[test]
    fn canonical_basis() {
        let code = omp_encode(&Dictionary::identity(2), &[3.0, 0.0], &exact()).unwrap();
        assert_eq!(code.column.indices, vec![0]);
        assert_eq!(code.column.values, vec![3.0]);
        assert_eq!(code.stop, StopReason::Tolerance);
    }

    #[test]
    fn zero_signal_needs_no_atoms() {
        let code = omp_encode(&Dictionary::identity(3), &[0.0; 3], &exact()).unwrap();
        assert_eq!(code.column.support_size(), 0);
    }

    #[test]
    fn diagonal_atom_wins_single_step() {
        let s = 1.0 / SQRT_2;
        let d = Dictionary::new(
            Matrix::from_col_major(2, 3, vec![1.0, 0.0, 0.0, 1.0, s, s]).unwrap(),
        )
        .unwrap();
        let cfg = SparseConfig {
            epsilon: 1e-9,
            ..SparseConfig::default()
        };
        let code = omp_encode(&d, &[1.0, 1.0], &cfg).unwrap();
        assert_eq!(code.column.indices, vec![2]);
        assert!((code.column.values[0] - SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn outside_span_without_cap_is_an_error() {
        // two atoms in R^3 cannot represent e3
        let d = Dictionary::new(
            Matrix::from_col_major(3, 2, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap(),
        )
        .unwrap();
        let err = omp_encode(&d, &[1.0, 1.0, 1.0], &exact()).unwrap_err();
        assert!(matches!(err, Error::PursuitExhausted { support: 2, .. }));

        let capped = SparseConfig {
            max_support: Some(1),
            ..exact()
        };
        let code = omp_encode(&d, &[1.0, 1.0, 1.0], &capped).unwrap();
        assert_eq!(code.stop, StopReason::SupportCap);
        assert_eq!(code.column.support_size(), 1);
    }

    #[test]
    fn tolerance_is_per_pixel_rms() {
        // residual after one atom is 1 in norm; sqrt(4) * 0.5 = 1 accepts it
        let cfg = SparseConfig {
            epsilon: 0.5,
            ..SparseConfig::default()
        };
        let code = omp_encode(&Dictionary::identity(4), &[5.0, 1.0, 0.0, 0.0], &cfg).unwrap();
        assert_eq!(code.column.indices, vec![0]);
        assert!((code.residual_norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn input_validation() {
        let d = Dictionary::identity(2);
        assert!(omp_encode(&d, &[1.0], &exact()).is_err());
        assert!(omp_encode(&d, &[f64::NAN, 1.0], &exact()).is_err());
    }

    #[test]
    fn atoms_code_themselves() {
        let s = 1.0 / SQRT_2;
        let d = Dictionary::new(
            Matrix::from_col_major(2, 3, vec![1.0, 0.0, 0.0, 1.0, s, s]).unwrap(),
        )
        .unwrap();
        let x = d.atoms().clone();
        let out = encode_all(&d, &x, &exact()).unwrap();
        for m in 0..3 {
            let (idx, vals) = out.codes.column(m);
            assert_eq!(idx, &[m]);
            assert!((vals[0] - 1.0).abs() < 1e-12);
        }
        let rec = reconstruct(&d, &out.codes).unwrap();
        assert!(rec.sub(&x).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn encode_all_reports_failing_column() {
        let d = Dictionary::new(
            Matrix::from_col_major(3, 2, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap(),
        )
        .unwrap();
        let x = Matrix::from_columns(3, &[[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 2.0]])
            .unwrap();
        match encode_all(&d, &x, &exact()) {
            Err(Error::Column { column, .. }) => assert_eq!(column, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn triangular_solves() {
        let l = vec![vec![2.0], vec![1.0, 3.0]];
        let y = forward_substitute(&l, &[4.0, 11.0]);
        assert_eq!(y, vec![2.0, 3.0]);
        let a = backward_substitute(&l, &[5.0, 6.0]);
        // L^T = [2 1; 0 3]
        assert_eq!(a, vec![1.5, 2.0]);
    }
}
