//! Splitting a learned dictionary into principal and noise sub-dictionaries
//! by atom occurrence frequency.
//!
//! The frequency of atom `k` is the number of codes that use it (the l0 norm
//! of coefficient row `beta_k`). Atoms are ranked by decreasing frequency; the
//! histogram of frequencies is dominated by a bulk of rarely used atoms, and
//! only atoms used strictly more often than that modal frequency are kept as
//! principal atoms.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::sparse::{reconstruct_with, Dictionary, SparseCodes};

/// `f_k = ||beta_k||_0`: number of codes using each atom.
pub fn atom_frequencies(codes: &SparseCodes) -> Vec<usize> {
    let mut f = vec![0; codes.rows()];
    for m in 0..codes.cols() {
        let (idx, vals) = codes.column(m);
        for (&k, &v) in idx.iter().zip(vals) {
            if v != 0.0 {
                f[k] += 1;
            }
        }
    }
    f
}

/// Atom indices in order of decreasing frequency; ties keep ascending index.
pub fn sort_by_frequency(frequencies: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..frequencies.len()).collect();
    order.sort_by(|&a, &b| frequencies[b].cmp(&frequencies[a]));
    order
}

/// Histogram-mode cut of a descending frequency list.
///
/// Builds a bin-width-1 histogram over the frequencies of the atoms that are
/// used at all, takes the modal frequency `f*` (smallest value on ties) and
/// returns `(P, f*)` where `P` is the number of atoms used strictly more
/// often than `f*`. When no atom exceeds `f*` the split is degenerate and
/// every atom at or above `f*` is kept. `P` is always in `[1, K]`.
pub fn histogram_cut(sorted: &[usize]) -> Result<(usize, usize)> {
    if sorted.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot cut an empty frequency list".into(),
        ));
    }
    if sorted.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(
            "frequencies must be sorted in descending order".into(),
        ));
    }
    let k = sorted.len();
    let top = sorted[0];
    if top == 0 {
        return Ok((k, 0));
    }
    let mut hist = vec![0usize; top + 1];
    for &f in sorted.iter().filter(|&&f| f > 0) {
        hist[f] += 1;
    }
    // first maximum = smallest tied frequency
    let (modal, _) = hist
        .iter()
        .enumerate()
        .skip(1)
        .fold((0, 0), |best, (f, &c)| if c > best.1 { (f, c) } else { best });
    let above = sorted.iter().take_while(|&&f| f > modal).count();
    let cut = if above == 0 {
        sorted.iter().take_while(|&&f| f >= modal).count()
    } else {
        above
    };
    Ok((cut.clamp(1, k), modal))
}

/// Frequencies, their descending order and the principal/noise cut.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdictSplit {
    pub frequencies: Vec<usize>,
    pub order: Vec<usize>,
    pub cut: usize,
    pub modal_frequency: usize,
}

impl SubdictSplit {
    /// Frequencies and histogram-mode cut of a code matrix.
    pub fn from_codes(codes: &SparseCodes) -> Result<Self> {
        Self::from_frequencies(atom_frequencies(codes))
    }

    pub fn from_frequencies(frequencies: Vec<usize>) -> Result<Self> {
        let order = sort_by_frequency(&frequencies);
        let sorted: Vec<usize> = order.iter().map(|&k| frequencies[k]).collect();
        let (cut, modal_frequency) = histogram_cut(&sorted)?;
        Ok(Self {
            frequencies,
            order,
            cut,
            modal_frequency,
        })
    }

    /// Same ordering with an explicit cut `P`.
    pub fn with_cut(&self, cut: usize) -> Result<Self> {
        if cut == 0 || cut > self.frequencies.len() {
            return Err(Error::InvalidArgument(format!(
                "cut {cut} outside [1, {}]",
                self.frequencies.len()
            )));
        }
        Ok(Self {
            cut,
            ..self.clone()
        })
    }

    pub fn atom_count(&self) -> usize {
        self.frequencies.len()
    }

    /// Original indices of the principal atoms, most frequent first.
    pub fn principal_atoms(&self) -> &[usize] {
        &self.order[..self.cut]
    }

    pub fn noise_atoms(&self) -> &[usize] {
        &self.order[self.cut..]
    }

    /// More than half of the atoms ended up principal; on learned
    /// dictionaries of noisy patches the principal part is normally small.
    pub fn principal_heavy(&self) -> bool {
        2 * self.cut > self.atom_count()
    }

    /// Plain-text report: `f_star`, `P`, then one `rank atom frequency part` row per atom.
    pub fn report(&self) -> String {
        let mut out = format!(
            "atoms={}\nmodal_frequency={}\ncut={}\n# rank atom frequency part\n",
            self.atom_count(),
            self.modal_frequency,
            self.cut
        );
        for (rank, &k) in self.order.iter().enumerate() {
            let part = if rank < self.cut { "principal" } else { "noise" };
            out.push_str(&format!(
                "{rank} {k} {} {part}\n",
                self.frequencies[k]
            ));
        }
        out
    }
}

/// Atoms of one side of a split, with their coefficient rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SubDictionary {
    /// Original atom indices, in frequency order.
    pub indices: Vec<usize>,
    /// `N x len` atom matrix (may have zero columns).
    pub atoms: Matrix,
    /// `len x M` coefficient rows.
    pub codes: SparseCodes,
}

impl SubDictionary {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Atoms as a [`Dictionary`]; `None` for an empty part.
    pub fn dictionary(&self) -> Option<Dictionary> {
        if self.is_empty() {
            None
        } else {
            Dictionary::new(self.atoms.clone()).ok()
        }
    }

    /// Product of this part's atoms with its coefficient rows.
    pub fn reconstruct(&self) -> Result<Matrix> {
        reconstruct_with(&self.atoms, &self.codes)
    }
}

/// Partitions `(D, A)` into the first `P` atoms/rows in frequency order and
/// the remaining `K - P`.
pub fn split(
    dict: &Dictionary,
    codes: &SparseCodes,
    s: &SubdictSplit,
) -> Result<(SubDictionary, SubDictionary)> {
    let k = dict.atom_count();
    if codes.rows() != k || s.atom_count() != k || s.order.len() != k {
        return Err(Error::Dimension(format!(
            "dictionary has {k} atoms, codes {} rows, split {} atoms",
            codes.rows(),
            s.atom_count()
        )));
    }
    if s.cut == 0 || s.cut > k {
        return Err(Error::InvalidArgument(format!("cut {} outside [1, {k}]", s.cut)));
    }
    let part = |indices: &[usize]| -> Result<SubDictionary> {
        Ok(SubDictionary {
            indices: indices.to_vec(),
            atoms: dict.atoms().select_columns(indices),
            codes: codes.select_rows(indices)?,
        })
    };
    Ok((part(s.principal_atoms())?, part(s.noise_atoms())?))
}

/// `D_P A_P`: the estimate carried by the principal atoms only.
pub fn principal_reconstruct(principal: &SubDictionary) -> Result<Matrix> {
    principal.reconstruct()
}
