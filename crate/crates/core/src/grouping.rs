//! Nonlocal grouping of similar patches.
//!
//! Each reference patch collects its `gamma` most similar patches from a
//! square search window around it. Similarity is either the squared
//! Euclidean distance (additive Gaussian noise) or the probabilistic
//! patch-based similarity for log-intensity patches under speckle.

use crate::error::{Error, Result};
use crate::patch::PatchMatrix;

/// Patch similarity measure; smaller scores mean more similar patches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Similarity {
    Euclidean,
    /// Probabilistic patch-based similarity on log-domain patches.
    Ppb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupingConfig {
    /// Group size, reference included.
    pub gamma: usize,
    /// Search window edge in pixels, centred on the reference origin.
    pub window: usize,
    pub metric: Similarity,
    /// Equivalent number of looks (PPB only).
    pub looks: f64,
    /// Step between reference patches.
    pub ref_stride: usize,
}

impl Default for GroupingConfig {
    fn default() -> Self {
        Self {
            gamma: 90,
            window: 39,
            metric: Similarity::Euclidean,
            looks: 1.0,
            ref_stride: 4,
        }
    }
}

impl GroupingConfig {
    pub fn validate(&self, patch_edge: usize) -> Result<()> {
        if self.gamma == 0 {
            return Err(Error::InvalidArgument("gamma must be at least 1".into()));
        }
        if self.window < patch_edge {
            return Err(Error::InvalidArgument(format!(
                "search window {} is smaller than the patch edge {patch_edge}",
                self.window
            )));
        }
        if !(self.looks.is_finite() && self.looks >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "looks must be at least 1, got {}",
                self.looks
            )));
        }
        if self.ref_stride == 0 {
            return Err(Error::InvalidArgument("ref_stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// One reference patch and its most similar neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub reference_index: usize,
    /// Member columns, reference first, then by increasing score.
    pub member_indices: Vec<usize>,
    pub similarities: Vec<f64>,
    /// How many members short of `gamma` the window was.
    pub shortfall: usize,
}

impl Group {
    pub fn len(&self) -> usize {
        self.member_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_indices.is_empty()
    }
}

/// `||a - b||_2^2`
pub fn euclidean_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    Ok(squared_distance(a, b))
}

/// Probabilistic patch-based similarity of two log-intensity patches,
/// `(2L - 1) * sum_k log(sqrt(y_a/y_b) + sqrt(y_b/y_a))` with `y = exp(x)`.
///
/// Evaluated in the log domain as `log(e^{d/2} + e^{-d/2})`,
/// `d = a_k - b_k`, so large intensity ratios cannot overflow.
pub fn ppb_similarity(a: &[f64], b: &[f64], looks: f64) -> Result<f64> {
    check_lengths(a, b)?;
    if !(looks.is_finite() && looks >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "looks must be at least 1, got {looks}"
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("log-domain patch".into()));
    }
    Ok(ppb_unchecked(a, b, looks))
}

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
fn ppb_unchecked(a: &[f64], b: &[f64], looks: f64) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let h = 0.5 * (x - y).abs();
            // log(e^h + e^-h) = h + log(1 + e^{-2h})
            h + (-2.0 * h).exp().ln_1p()
        })
        .sum();
    (2.0 * looks - 1.0) * s
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "patch lengths {} and {} differ",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Spatial lookup over a patch matrix for repeated group formation.
pub struct Grouper<'a> {
    patches: &'a PatchMatrix,
    cfg: GroupingConfig,
    /// rows/cols spanned by the origins
    origin_rows: usize,
    origin_cols: usize,
    /// column index per origin position, `usize::MAX` when absent
    table: Vec<usize>,
}

impl<'a> Grouper<'a> {
    pub fn new(patches: &'a PatchMatrix, cfg: &GroupingConfig) -> Result<Self> {
        cfg.validate(patches.patch_edge())?;
        if patches.count() == 0 {
            return Err(Error::DegenerateData("no patches to group".into()));
        }
        if !patches.data().is_finite() {
            return Err(Error::NonFinite("patch values".into()));
        }
        let origin_rows = patches.origins().iter().map(|o| o.0).max().unwrap() + 1;
        let origin_cols = patches.origins().iter().map(|o| o.1).max().unwrap() + 1;
        let mut table = vec![usize::MAX; origin_rows * origin_cols];
        for (m, &(r, c)) in patches.origins().iter().enumerate() {
            let slot = &mut table[r * origin_cols + c];
            // duplicate origins keep the lowest column
            if *slot == usize::MAX {
                *slot = m;
            }
        }
        Ok(Self {
            patches,
            cfg: cfg.clone(),
            origin_rows,
            origin_cols,
            table,
        })
    }

    pub fn config(&self) -> &GroupingConfig {
        &self.cfg
    }

    pub fn score(&self, a: usize, b: usize) -> f64 {
        let (x, y) = (self.patches.patch(a), self.patches.patch(b));
        match self.cfg.metric {
            Similarity::Euclidean => squared_distance(x, y),
            Similarity::Ppb => ppb_unchecked(x, y, self.cfg.looks),
        }
    }

    /// Column indices whose origin lies in the window around `reference`.
    pub fn candidates(&self, reference: usize) -> Vec<usize> {
        let (r0, c0) = self.patches.origins()[reference];
        let half = self.cfg.window / 2;
        let (r_lo, r_hi) = (r0.saturating_sub(half), (r0 + half).min(self.origin_rows - 1));
        let (c_lo, c_hi) = (c0.saturating_sub(half), (c0 + half).min(self.origin_cols - 1));
        let mut out = Vec::new();
        for r in r_lo..=r_hi {
            for c in c_lo..=c_hi {
                let m = self.table[r * self.origin_cols + c];
                if m != usize::MAX {
                    out.push(m);
                }
            }
        }
        out
    }

    /// Reference plus its `gamma - 1` best-scoring window neighbours. Ties
    /// are broken by ascending column index.
    pub fn group(&self, reference: usize) -> Result<Group> {
        if reference >= self.patches.count() {
            return Err(Error::InvalidArgument(format!(
                "reference {reference} out of range for {} patches",
                self.patches.count()
            )));
        }
        let mut scored: Vec<(f64, usize)> = self
            .candidates(reference)
            .into_iter()
            .filter(|&m| m != reference)
            .map(|m| (self.score(reference, m), m))
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let want = self.cfg.gamma;
        let mut member_indices = Vec::with_capacity(want);
        let mut similarities = Vec::with_capacity(want);
        member_indices.push(reference);
        similarities.push(self.score(reference, reference));
        for &(s, m) in scored.iter().take(want - 1) {
            member_indices.push(m);
            similarities.push(s);
        }
        Ok(Group {
            reference_index: reference,
            shortfall: want - member_indices.len(),
            member_indices,
            similarities,
        })
    }
}

/// Forms the group of one reference patch.
pub fn form_group(patches: &PatchMatrix, reference: usize, cfg: &GroupingConfig) -> Result<Group> {
    Grouper::new(patches, cfg)?.group(reference)
}
