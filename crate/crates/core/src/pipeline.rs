//! End-to-end denoising by dual sparse decomposition.
//!
//! For every reference patch a group of similar patches is formed. The group
//! is sparse-coded at a low error tolerance, the atoms are split by how often
//! the group uses them, and each member is rebuilt from the principal atoms
//! only. All member estimates are then weight-averaged into the output.
//!
//! Speckled intensity images go through the same machinery in the log
//! domain, with the probabilistic patch-based similarity for grouping and a
//! mean-bias correction on the way back.

use std::time::Instant;

use log::{debug, warn};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grouping::{Group, Grouper, GroupingConfig, Similarity};
use crate::image::Image;
use crate::linalg::Matrix;
use crate::patch::{extract_patches, PatchMatrix, PixelAccumulator};
use crate::sparse::{
    encode_all, ksvd_learn, ksvd_refine, reconstruct, Dictionary, EncodeOutcome, LearnOutcome,
    SparseCodes, SparseConfig,
};
use crate::special::{log_speckle_mean, log_speckle_std};
use crate::subdict::{atom_frequencies, principal_reconstruct, split, SubdictSplit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    Additive,
    Speckle,
}

/// Where dictionaries are learned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DictScope {
    /// One dictionary per group: the `min(K, 2 gamma)` image-dictionary atoms
    /// the group uses most, refined by K-SVD on the group's own patches.
    /// Atoms the group never uses are left as they are.
    PerGroup,
    /// One dictionary learned from all patches; frequencies and the split are
    /// evaluated group by group unless [`SplitScope::Image`] is chosen.
    Global,
}

/// Which codes the atom frequencies are counted over (global scope only).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitScope {
    /// Frequencies of each group's own codes; one cut per group.
    Group,
    /// Frequencies over every patch of the image; one cut shared by all groups.
    Image,
}

/// Per-patch weight used during aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// `1 / (1 + ||alpha_m||_0)`.
    Sparsity,
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseConfig {
    pub patch_edge: usize,
    /// Dictionary size `K`. Per-group learning uses `min(K, 2 * gamma)`.
    pub dict_atoms: usize,
    /// Noise standard deviation in the working domain. Required for additive
    /// noise; speckle mode derives it from the number of looks when unset.
    pub sigma: Option<f64>,
    /// Per-pixel RMS tolerance of the sparse coder; defaults to `sigma`.
    pub epsilon: Option<f64>,
    /// Support cap; defaults to `N / 2`.
    pub max_support: Option<usize>,
    pub learn_iters: usize,
    /// Patch extraction stride for learning and denoising.
    pub patch_stride: usize,
    /// Global scope learns from at most this many (seeded) patches.
    pub max_training_patches: Option<usize>,
    pub grouping: GroupingConfig,
    pub mode: NoiseMode,
    pub dict_scope: DictScope,
    pub split_scope: SplitScope,
    pub weighting: Weighting,
    /// Divide each member's weight by the number of groups containing it.
    /// Outlying patches are picked less often; without this they are
    /// under-weighted, which biases skewed (log-speckle) noise.
    pub per_patch_aggregation: bool,
    /// Rebuild from the principal sub-dictionary; `false` keeps every atom.
    pub split: bool,
    /// Code patches with their mean removed and add it back afterwards.
    pub remove_mean: bool,
    /// Speckle mode only: undo the mean of log-speckle before exponentiating.
    pub bias_correction: bool,
    pub seed: u64,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            patch_edge: 8,
            dict_atoms: 256,
            sigma: None,
            epsilon: None,
            max_support: None,
            learn_iters: 12,
            patch_stride: 1,
            max_training_patches: Some(40_000),
            grouping: GroupingConfig::default(),
            mode: NoiseMode::Additive,
            dict_scope: DictScope::Global,
            split_scope: SplitScope::Group,
            weighting: Weighting::Sparsity,
            per_patch_aggregation: true,
            split: true,
            remove_mean: true,
            bias_correction: true,
            seed: 0,
        }
    }
}

impl DenoiseConfig {
    /// Defaults for additive noise of standard deviation `sigma`.
    pub fn additive(sigma: f64) -> Self {
        Self {
            sigma: Some(sigma),
            ..Self::default()
        }
    }

    /// Defaults for `looks`-look speckle.
    pub fn speckle(looks: f64) -> Self {
        Self {
            mode: NoiseMode::Speckle,
            grouping: GroupingConfig {
                metric: Similarity::Ppb,
                looks,
                ..GroupingConfig::default()
            },
            ..Self::default()
        }
    }

    pub fn patch_len(&self) -> usize {
        self.patch_edge * self.patch_edge
    }

    /// Working-domain noise level.
    pub fn resolved_sigma(&self) -> Result<f64> {
        match (self.sigma, self.mode) {
            (Some(s), _) => Ok(s),
            (None, NoiseMode::Speckle) => Ok(log_speckle_std(self.grouping.looks)),
            (None, NoiseMode::Additive) => Err(Error::InvalidArgument(
                "additive mode needs the noise standard deviation".into(),
            )),
        }
    }

    pub fn resolved_epsilon(&self) -> Result<f64> {
        match self.epsilon {
            Some(e) => Ok(e),
            None => self.resolved_sigma(),
        }
    }

    /// Atom count actually learned.
    pub fn effective_atoms(&self) -> usize {
        match self.dict_scope {
            DictScope::Global => self.dict_atoms,
            DictScope::PerGroup => self.dict_atoms.min(2 * self.grouping.gamma),
        }
    }

    pub fn sparse_config(&self) -> Result<SparseConfig> {
        let k = self.effective_atoms();
        let cap = self.max_support.unwrap_or((self.patch_len() / 2).max(1)).min(k);
        Ok(SparseConfig {
            epsilon: self.resolved_epsilon()?,
            max_support: Some(cap),
            learn_iters: self.learn_iters,
            seed: self.seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.patch_edge == 0 {
            return Err(Error::InvalidArgument("patch edge must be at least 1".into()));
        }
        if self.dict_atoms == 0 {
            return Err(Error::InvalidArgument("dictionary needs at least one atom".into()));
        }
        if self.patch_stride == 0 {
            return Err(Error::InvalidArgument("patch stride must be at least 1".into()));
        }
        if self.max_training_patches == Some(0) {
            return Err(Error::InvalidArgument(
                "training patch cap must be at least 1".into(),
            ));
        }
        self.grouping.validate(self.patch_edge)?;
        if self.grouping.ref_stride > self.patch_edge {
            return Err(Error::InvalidArgument(format!(
                "ref_stride {} exceeds the patch edge {}; reference patches would leave gaps",
                self.grouping.ref_stride, self.patch_edge
            )));
        }
        if let Some(s) = self.sigma {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::InvalidArgument(format!("sigma must be non-negative, got {s}")));
            }
        }
        self.sparse_config()?.validate(self.effective_atoms())
    }
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timings {
    pub learn: f64,
    pub encode: f64,
    pub groups: f64,
    pub aggregate: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseReport {
    pub groups: usize,
    /// Principal sub-dictionary size `P` of every group, in reference order.
    pub cuts: Vec<usize>,
    /// Per-pixel RMS of `X_g - D A_g` with all atoms, per group.
    pub representation_errors: Vec<f64>,
    pub dictionary_atoms: usize,
    pub epsilon: f64,
    pub split: bool,
    /// Groups whose search window held fewer than `gamma` patches.
    pub shortfall_groups: usize,
    /// Groups where more than half the atoms were principal.
    pub principal_heavy_groups: usize,
    /// Codes that hit the support cap.
    pub capped_codes: usize,
    /// Log-domain bias removed before exponentiating (speckle mode).
    pub bias_correction: Option<f64>,
    pub timings: Timings,
}

impl DenoiseReport {
    pub fn mean_cut(&self) -> f64 {
        if self.cuts.is_empty() {
            return 0.0;
        }
        self.cuts.iter().sum::<usize>() as f64 / self.cuts.len() as f64
    }

    pub fn mean_representation_error(&self) -> f64 {
        if self.representation_errors.is_empty() {
            return 0.0;
        }
        self.representation_errors.iter().sum::<f64>() / self.representation_errors.len() as f64
    }

    /// `key=value` lines; numbers use `.` as decimal separator.
    pub fn to_key_value(&self) -> String {
        let min_cut = self.cuts.iter().min().copied().unwrap_or(0);
        let max_cut = self.cuts.iter().max().copied().unwrap_or(0);
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        kv("groups", self.groups.to_string());
        kv("dictionary_atoms", self.dictionary_atoms.to_string());
        kv("epsilon", self.epsilon.to_string());
        kv("split", self.split.to_string());
        kv("cut_mean", format!("{:.4}", self.mean_cut()));
        kv("cut_min", min_cut.to_string());
        kv("cut_max", max_cut.to_string());
        kv(
            "representation_error_mean",
            format!("{:.6}", self.mean_representation_error()),
        );
        kv("shortfall_groups", self.shortfall_groups.to_string());
        kv("principal_heavy_groups", self.principal_heavy_groups.to_string());
        kv("capped_codes", self.capped_codes.to_string());
        kv(
            "bias_correction",
            self.bias_correction
                .map_or_else(|| "none".to_string(), |b| b.to_string()),
        );
        kv("time_learn_s", format!("{:.3}", self.timings.learn));
        kv("time_encode_s", format!("{:.3}", self.timings.encode));
        kv("time_groups_s", format!("{:.3}", self.timings.groups));
        kv("time_aggregate_s", format!("{:.3}", self.timings.aggregate));
        kv("time_total_s", format!("{:.3}", self.timings.total));
        out
    }
}

/// Estimates produced by one group.
#[derive(Debug, Clone)]
pub struct GroupEstimate {
    pub group: Group,
    /// `N x len(group)` member estimates (patch mean restored).
    pub estimates: Matrix,
    pub weights: Vec<f64>,
    pub cut: usize,
    pub principal_heavy: bool,
    pub representation_error: f64,
    pub capped: usize,
}

/// Denoises an image; speckle mode is routed to [`despeckle`].
pub fn denoise(noisy: &Image, cfg: &DenoiseConfig) -> Result<(Image, DenoiseReport)> {
    match cfg.mode {
        NoiseMode::Additive => {
            let (out, report) = denoise_work(noisy, cfg)?;
            Ok((out.with_dynamic_range(noisy.dynamic_range()), report))
        }
        NoiseMode::Speckle => despeckle(noisy, cfg),
    }
}

/// Single sparse decomposition at tolerance `epsilon`: the same pipeline
/// with every atom kept.
pub fn denoise_single(noisy: &Image, cfg: &DenoiseConfig, epsilon: f64) -> Result<Image> {
    let single = DenoiseConfig {
        epsilon: Some(epsilon),
        split: false,
        ..cfg.clone()
    };
    denoise(noisy, &single).map(|(img, _)| img)
}

/// Homomorphic despeckling of a strictly positive intensity image.
pub fn despeckle(noisy: &Image, cfg: &DenoiseConfig) -> Result<(Image, DenoiseReport)> {
    if let Some(v) = noisy.pixels().iter().find(|&&v| v <= 0.0) {
        return Err(Error::Domain(format!(
            "despeckling needs strictly positive intensities, found {v}"
        )));
    }
    let mut work_cfg = cfg.clone();
    work_cfg.mode = NoiseMode::Speckle;
    work_cfg.grouping.metric = Similarity::Ppb;
    let looks = work_cfg.grouping.looks;
    let log_img = noisy.map(f64::ln)?;
    let (est, mut report) = denoise_work(&log_img, &work_cfg)?;
    let bias = if cfg.bias_correction {
        Some(log_speckle_mean(looks))
    } else {
        None
    };
    let shift = bias.unwrap_or(0.0);
    report.bias_correction = bias;
    let out = est.map(|v| (v - shift).exp())?;
    Ok((out.with_dynamic_range(noisy.dynamic_range()), report))
}

/// Patches of the working image, optionally mean-removed.
struct Prepared {
    patches: PatchMatrix,
    centered: Matrix,
    means: Vec<f64>,
}

fn prepare(work: &Image, cfg: &DenoiseConfig) -> Result<Prepared> {
    let patches = extract_patches(work, cfg.patch_edge, cfg.patch_stride)?;
    let n = patches.patch_len() as f64;
    let mut centered = patches.data().clone();
    let mut means = vec![0.0; patches.count()];
    if cfg.remove_mean {
        for (m, mean) in means.iter_mut().enumerate() {
            let col = centered.col_mut(m);
            *mean = col.iter().sum::<f64>() / n;
            col.iter_mut().for_each(|v| *v -= *mean);
        }
    }
    Ok(Prepared {
        patches,
        centered,
        means,
    })
}

/// Reference patches: origins on the `ref_stride` grid plus the last row and
/// column of patch positions.
pub fn reference_indices(patches: &PatchMatrix, ref_stride: usize) -> Vec<usize> {
    let last_r = patches.origins().iter().map(|o| o.0).max().unwrap_or(0);
    let last_c = patches.origins().iter().map(|o| o.1).max().unwrap_or(0);
    patches
        .origins()
        .iter()
        .enumerate()
        .filter(|(_, &(r, c))| {
            (r % ref_stride == 0 || r == last_r) && (c % ref_stride == 0 || c == last_c)
        })
        .map(|(m, _)| m)
        .collect()
}

/// Learning, coding and per-group estimation; everything but aggregation.
fn run_groups(
    work: &Image,
    cfg: &DenoiseConfig,
    timings: &mut Timings,
) -> Result<(Vec<GroupEstimate>, Prepared, f64)> {
    cfg.validate()?;
    if cfg.patch_edge > work.height().min(work.width()) {
        return Err(Error::Dimension(format!(
            "a {}x{} image cannot hold one {}x{} patch",
            work.height(),
            work.width(),
            cfg.patch_edge,
            cfg.patch_edge
        )));
    }
    let sparse_cfg = cfg.sparse_config()?;
    let prepared = prepare(work, cfg)?;
    let grouper = Grouper::new(&prepared.patches, &cfg.grouping)?;
    let refs = reference_indices(&prepared.patches, cfg.grouping.ref_stride);
    debug!(
        "{} patches, {} reference groups, epsilon {}",
        prepared.patches.count(),
        refs.len(),
        sparse_cfg.epsilon
    );

    let (learned, coded) = learn_and_encode(&prepared, cfg, &sparse_cfg, timings)?;

    let t = Instant::now();
    let estimates: Vec<GroupEstimate> = match cfg.dict_scope {
        DictScope::Global => {
            let shared = match cfg.split_scope {
                SplitScope::Image if cfg.split => Some(SubdictSplit::from_codes(&coded.codes)?),
                _ => None,
            };
            refs.par_iter()
                .map(|&r| {
                    let group = grouper.group(r)?;
                    let codes = coded.codes.select_columns(&group.member_indices)?;
                    let residuals = group
                        .member_indices
                        .iter()
                        .map(|&m| coded.residual_norms[m])
                        .collect();
                    estimate_group(
                        group,
                        &learned.dictionary,
                        codes,
                        &prepared,
                        residuals,
                        shared.as_ref(),
                        &sparse_cfg,
                        cfg,
                    )
                })
                .collect::<Vec<Result<_>>>()
                .into_iter()
                .collect::<Result<Vec<_>>>()?
        }
        DictScope::PerGroup => {
            let k = cfg.effective_atoms();
            if k > cfg.grouping.gamma {
                warn!(
                    "per-group dictionaries of {k} atoms from groups of {} patches are under-determined",
                    cfg.grouping.gamma
                );
            }
            let global_freq = atom_frequencies(&coded.codes);
            refs.par_iter()
                .map(|&r| {
                    let group = grouper.group(r)?;
                    let x = prepared.centered.select_columns(&group.member_indices);
                    let codes = coded.codes.select_columns(&group.member_indices)?;
                    let init = group_initial_atoms(&learned.dictionary, &codes, &global_freq, k)?;
                    let local = ksvd_refine(&x, init, &sparse_cfg, false)?;
                    estimate_group(
                        group,
                        &local.dictionary,
                        local.codes,
                        &prepared,
                        local.residual_norms,
                        None,
                        &sparse_cfg,
                        cfg,
                    )
                })
                .collect::<Vec<Result<_>>>()
                .into_iter()
                .collect::<Result<Vec<_>>>()?
        }
    };
    timings.groups = t.elapsed().as_secs_f64();
    Ok((estimates, prepared, sparse_cfg.epsilon))
}

fn learn_and_encode(
    prepared: &Prepared,
    cfg: &DenoiseConfig,
    sparse_cfg: &SparseConfig,
    timings: &mut Timings,
) -> Result<(LearnOutcome, EncodeOutcome)> {
    let t = Instant::now();
    let training = training_columns(&prepared.centered, cfg);
    let learned = ksvd_learn(&training, cfg.dict_atoms, sparse_cfg)?;
    timings.learn = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let coded = encode_all(&learned.dictionary, &prepared.centered, sparse_cfg)?;
    timings.encode = t.elapsed().as_secs_f64();
    Ok((learned, coded))
}

/// Image-wide dictionary and the codes of every patch.
#[derive(Debug, Clone)]
pub struct ImageDictionary {
    pub dictionary: Dictionary,
    /// Codes of every patch (mean-removed when configured), in patch order.
    pub codes: SparseCodes,
    pub residual_norms: Vec<f64>,
    pub patches: PatchMatrix,
    /// Training error after each K-SVD sweep.
    pub sweep_errors: Vec<f64>,
    pub training_columns: usize,
    pub timings: Timings,
}

/// Learns the global dictionary exactly as [`denoise`] does in additive mode
/// and codes every patch of `img` with it.
pub fn learn_dictionary(img: &Image, cfg: &DenoiseConfig) -> Result<ImageDictionary> {
    cfg.validate()?;
    let sparse_cfg = cfg.sparse_config()?;
    let prepared = prepare(img, cfg)?;
    let mut timings = Timings::default();
    let (learned, coded) = learn_and_encode(&prepared, cfg, &sparse_cfg, &mut timings)?;
    timings.total = timings.learn + timings.encode;
    Ok(ImageDictionary {
        training_columns: learned.codes.cols(),
        dictionary: learned.dictionary,
        codes: coded.codes,
        residual_norms: coded.residual_norms,
        patches: prepared.patches,
        sweep_errors: learned.sweep_errors,
        timings,
    })
}

fn denoise_work(work: &Image, cfg: &DenoiseConfig) -> Result<(Image, DenoiseReport)> {
    let start = Instant::now();
    let mut timings = Timings::default();
    let (estimates, prepared, epsilon) = run_groups(work, cfg, &mut timings)?;
    let t = Instant::now();
    let image = aggregate_groups(
        &estimates,
        &prepared.patches,
        work.height(),
        work.width(),
        cfg.per_patch_aggregation,
    )?;
    timings.aggregate = t.elapsed().as_secs_f64();
    timings.total = start.elapsed().as_secs_f64();

    let principal_heavy_groups = estimates.iter().filter(|e| e.principal_heavy).count();
    if cfg.split && principal_heavy_groups > 0 {
        warn!(
            "{principal_heavy_groups} of {} groups kept more than half of the atoms as principal",
            estimates.len()
        );
    }
    let report = DenoiseReport {
        groups: estimates.len(),
        cuts: estimates.iter().map(|e| e.cut).collect(),
        representation_errors: estimates.iter().map(|e| e.representation_error).collect(),
        dictionary_atoms: cfg.effective_atoms(),
        epsilon,
        split: cfg.split,
        shortfall_groups: estimates.iter().filter(|e| e.group.shortfall > 0).count(),
        principal_heavy_groups,
        capped_codes: estimates.iter().map(|e| e.capped).sum(),
        bias_correction: None,
        timings,
    };
    Ok((image, report))
}

/// Deterministic subset of columns used to learn the global dictionary.
fn training_columns(centered: &Matrix, cfg: &DenoiseConfig) -> Matrix {
    match cfg.max_training_patches {
        Some(cap) if cap < centered.cols() => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x005E_ED0F_DA7A);
            let mut idx = sample(&mut rng, centered.cols(), cap).into_vec();
            idx.sort_unstable();
            centered.select_columns(&idx)
        }
        _ => centered.clone(),
    }
}

/// Frequency split and principal reconstruction of one group.
/// `residuals` holds the coding residual norm of each member; `shared` is an
/// image-wide split used instead of the group's own.
#[allow(clippy::too_many_arguments)]
fn estimate_group(
    group: Group,
    dict: &Dictionary,
    codes: SparseCodes,
    prepared: &Prepared,
    residuals: Vec<f64>,
    shared: Option<&SubdictSplit>,
    sparse_cfg: &SparseConfig,
    cfg: &DenoiseConfig,
) -> Result<GroupEstimate> {
    let n = dict.atom_len();
    let sq: f64 = residuals.iter().map(|r| r * r).sum();
    let representation_error = (sq / (n * group.len()) as f64).sqrt();
    let tolerance = sparse_cfg.residual_tolerance(n);
    let capped = residuals.iter().filter(|&&r| r > tolerance).count();

    let (mut estimates, cut, principal_heavy) = if cfg.split {
        let s = match shared {
            Some(s) => s.clone(),
            None => SubdictSplit::from_codes(&codes)?,
        };
        let (principal, _noise) = split(dict, &codes, &s)?;
        (principal_reconstruct(&principal)?, s.cut, s.principal_heavy())
    } else {
        (reconstruct(dict, &codes)?, dict.atom_count(), false)
    };

    for (j, &m) in group.member_indices.iter().enumerate() {
        let mean = prepared.means[m];
        if mean != 0.0 {
            estimates.col_mut(j).iter_mut().for_each(|v| *v += mean);
        }
    }
    let weights = (0..group.len())
        .map(|j| match cfg.weighting {
            Weighting::Sparsity => 1.0 / (1.0 + codes.support_size(j) as f64),
            Weighting::Uniform => 1.0,
        })
        .collect();
    Ok(GroupEstimate {
        group,
        estimates,
        weights,
        cut,
        principal_heavy,
        representation_error,
        capped,
    })
}

/// Warm start for a group dictionary: the `k` global atoms the group uses
/// most, ties and unused slots filled by image-wide frequency.
fn group_initial_atoms(
    global: &Dictionary,
    group_codes: &SparseCodes,
    global_freq: &[usize],
    k: usize,
) -> Result<Dictionary> {
    let local = atom_frequencies(group_codes);
    let mut order: Vec<usize> = (0..global.atom_count()).collect();
    order.sort_by(|&a, &b| {
        local[b]
            .cmp(&local[a])
            .then(global_freq[b].cmp(&global_freq[a]))
            .then(a.cmp(&b))
    });
    order.truncate(k);
    global.select(&order)
}

/// Weighted average of every group's member estimates, in the given order.
///
/// With `per_patch`, a patch chosen by `c` groups enters each time with
/// weight `w / c`, so how often grouping picks a patch does not change its
/// influence on the output.
pub fn aggregate_groups(
    estimates: &[GroupEstimate],
    patches: &PatchMatrix,
    height: usize,
    width: usize,
    per_patch: bool,
) -> Result<Image> {
    let mut acc = PixelAccumulator::new(height, width);
    let mut count = vec![0usize; patches.count()];
    for est in estimates {
        for &m in &est.group.member_indices {
            count[m] += 1;
        }
    }
    for est in estimates {
        for (j, &m) in est.group.member_indices.iter().enumerate() {
            let w = if per_patch {
                est.weights[j] / count[m] as f64
            } else {
                est.weights[j]
            };
            acc.add_patch(
                patches.origins()[m],
                patches.patch_edge(),
                est.estimates.col(j),
                w,
            )?;
        }
    }
    acc.finish()
}

/// Per-group estimates without aggregation, for inspecting or re-ordering
/// the aggregation step. Additive mode only.
pub fn group_estimates(
    noisy: &Image,
    cfg: &DenoiseConfig,
) -> Result<(Vec<GroupEstimate>, PatchMatrix)> {
    if cfg.mode == NoiseMode::Speckle {
        return Err(Error::InvalidArgument(
            "group estimates are exposed for additive mode only".into(),
        ));
    }
    let (estimates, prepared, _) = run_groups(noisy, cfg, &mut Timings::default())?;
    Ok((estimates, prepared.patches))
}
