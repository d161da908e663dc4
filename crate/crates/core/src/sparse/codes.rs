use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Non-zero entries of one code vector, with strictly increasing atom indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseColumn {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseColumn {
    /// Builds a column from `(atom, value)` pairs in any order. Exact zeros
    /// are dropped so that the stored support is the l0 norm.
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Result<Self> {
        pairs.sort_by_key(|p| p.0);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("duplicate atom index in code".into()));
        }
        let (indices, values) = pairs.into_iter().filter(|p| p.1 != 0.0).unzip();
        Ok(Self { indices, values })
    }

    pub fn support_size(&self) -> usize {
        self.indices.len()
    }

    pub fn to_dense(&self, rows: usize) -> Vec<f64> {
        let mut out = vec![0.0; rows];
        for (&k, &v) in self.indices.iter().zip(&self.values) {
            out[k] = v;
        }
        out
    }
}

/// `K x M` coefficient matrix stored by columns (compressed sparse column).
///
/// Column `m` is the code of patch `m`; row `k` is the usage profile of
/// atom `k` across all patches.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCodes {
    rows: usize,
    col_ptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseCodes {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            col_ptr: vec![0; cols + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_columns(rows: usize, columns: Vec<SparseColumn>) -> Result<Self> {
        let nnz = columns.iter().map(|c| c.indices.len()).sum();
        let mut col_ptr = Vec::with_capacity(columns.len() + 1);
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        col_ptr.push(0);
        for (m, c) in columns.into_iter().enumerate() {
            if c.indices.len() != c.values.len() {
                return Err(Error::Dimension(format!(
                    "column {m}: {} indices but {} values",
                    c.indices.len(),
                    c.values.len()
                )));
            }
            if c.indices.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "column {m}: atom indices must be strictly increasing"
                )));
            }
            if let Some(&k) = c.indices.last() {
                if k >= rows {
                    return Err(Error::Dimension(format!(
                        "column {m}: atom {k} out of range for {rows} rows"
                    )));
                }
            }
            if c.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("column {m} coefficients")));
            }
            for (k, v) in c.indices.into_iter().zip(c.values) {
                if v != 0.0 {
                    indices.push(k);
                    values.push(v);
                }
            }
            col_ptr.push(indices.len());
        }
        Ok(Self {
            rows,
            col_ptr,
            indices,
            values,
        })
    }

    /// Sparse copy of a dense `K x M` matrix.
    pub fn from_dense(dense: &Matrix) -> Self {
        let cols = dense
            .columns()
            .map(|c| {
                let (indices, values) = c
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(k, v)| (k, *v))
                    .unzip();
                SparseColumn { indices, values }
            })
            .collect();
        Self::from_columns(dense.rows(), cols).expect("dense matrix yields valid columns")
    }

    /// Number of atoms `K`.
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of patches `M`.
    #[inline]
    pub fn cols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Atom indices and coefficients of column `m`.
    #[inline]
    pub fn column(&self, m: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.col_ptr[m], self.col_ptr[m + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn sparse_column(&self, m: usize) -> SparseColumn {
        let (i, v) = self.column(m);
        SparseColumn {
            indices: i.to_vec(),
            values: v.to_vec(),
        }
    }

    /// `||alpha_m||_0`.
    #[inline]
    pub fn support_size(&self, m: usize) -> usize {
        self.col_ptr[m + 1] - self.col_ptr[m]
    }

    /// Dense row `beta_k = [alpha_1(k) ... alpha_M(k)]`.
    pub fn row(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.cols()];
        for (m, slot) in out.iter_mut().enumerate() {
            let (idx, vals) = self.column(m);
            if let Ok(p) = idx.binary_search(&k) {
                *slot = vals[p];
            }
        }
        out
    }

    pub fn to_dense(&self) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols());
        for m in 0..self.cols() {
            let (idx, vals) = self.column(m);
            for (&k, &v) in idx.iter().zip(vals) {
                out.set(k, m, v);
            }
        }
        out
    }

    /// Keeps only the rows listed in `rows`; row `rows[i]` becomes row `i`.
    pub fn select_rows(&self, rows: &[usize]) -> Result<SparseCodes> {
        let mut remap = vec![usize::MAX; self.rows];
        for (new, &old) in rows.iter().enumerate() {
            if old >= self.rows {
                return Err(Error::Dimension(format!(
                    "row {old} out of range for {} rows",
                    self.rows
                )));
            }
            if remap[old] != usize::MAX {
                return Err(Error::InvalidArgument(format!("row {old} selected twice")));
            }
            remap[old] = new;
        }
        let cols = (0..self.cols())
            .map(|m| {
                let (idx, vals) = self.column(m);
                let pairs = idx
                    .iter()
                    .zip(vals)
                    .filter(|(k, _)| remap[**k] != usize::MAX)
                    .map(|(k, v)| (remap[*k], *v))
                    .collect();
                SparseColumn::from_pairs(pairs)
            })
            .collect::<Result<Vec<_>>>()?;
        SparseCodes::from_columns(rows.len(), cols)
    }

    /// Keeps only the listed columns, in that order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<SparseCodes> {
        let out = cols
            .iter()
            .map(|&m| {
                if m >= self.cols() {
                    Err(Error::Dimension(format!(
                        "column {m} out of range for {} columns",
                        self.cols()
                    )))
                } else {
                    Ok(self.sparse_column(m))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        SparseCodes::from_columns(self.rows, out)
    }

    /// For every stored entry, `(column, position in storage)` grouped by row.
    pub(crate) fn row_positions(&self) -> Vec<Vec<(usize, usize)>> {
        let mut by_row = vec![Vec::new(); self.rows];
        for m in 0..self.cols() {
            for p in self.col_ptr[m]..self.col_ptr[m + 1] {
                by_row[self.indices[p]].push((m, p));
            }
        }
        by_row
    }

    #[inline]
    pub(crate) fn set_value_at(&mut self, position: usize, value: f64) {
        self.values[position] = value;
    }
}
