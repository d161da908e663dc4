//! Denoiser settings: one key per setting, shared by command-line flags,
//! `key=value` config files and run manifests.

use std::collections::BTreeMap;

use clap::Args;
use dualsparse::grouping::Similarity;
use dualsparse::pipeline::{DenoiseConfig, DictScope, NoiseMode, SplitScope, Weighting};

/// Setting flags. Anything left unset falls back to the config file, then
/// to the built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Settings {
    /// key=value settings file; flags take precedence over it
    #[arg(long, value_name = "PATH")]
    pub config: Option<std::path::PathBuf>,
    /// noise standard deviation (working domain)
    #[arg(long)]
    pub sigma: Option<f64>,
    /// per-pixel RMS tolerance of the sparse coder [default: sigma]
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub patch_edge: Option<usize>,
    /// dictionary size K
    #[arg(long)]
    pub atoms: Option<usize>,
    /// group size
    #[arg(long)]
    pub gamma: Option<usize>,
    /// search window edge in pixels
    #[arg(long)]
    pub window: Option<usize>,
    /// step between reference patches
    #[arg(long)]
    pub ref_stride: Option<usize>,
    /// patch extraction stride
    #[arg(long)]
    pub stride: Option<usize>,
    /// support cap per code [default: N/2]
    #[arg(long)]
    pub max_support: Option<usize>,
    /// K-SVD sweeps
    #[arg(long)]
    pub learn_iters: Option<usize>,
    /// learn from at most this many patches, or "all"
    #[arg(long, value_name = "N|all")]
    pub training_patches: Option<String>,
    #[arg(long, value_parser = ["additive", "speckle"])]
    pub mode: Option<String>,
    /// equivalent number of looks (speckle)
    #[arg(long)]
    pub looks: Option<f64>,
    #[arg(long, value_parser = ["global", "per-group"])]
    pub dict_scope: Option<String>,
    #[arg(long, value_parser = ["group", "image"])]
    pub split_scope: Option<String>,
    #[arg(long, value_parser = ["sparsity", "uniform"])]
    pub weighting: Option<String>,
    #[arg(long, value_name = "BOOL")]
    pub per_patch_aggregation: Option<bool>,
    /// false keeps every atom (single decomposition)
    #[arg(long, value_name = "BOOL")]
    pub split: Option<bool>,
    #[arg(long, value_name = "BOOL")]
    pub remove_mean: Option<bool>,
    #[arg(long, value_name = "BOOL")]
    pub bias_correction: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Settings {
    /// Flags given on the command line, as `(key, value)` pairs.
    pub fn given(&self) -> Vec<(&'static str, String)> {
        fn put<T: ToString>(out: &mut Vec<(&'static str, String)>, key: &'static str, v: &Option<T>) {
            if let Some(v) = v {
                out.push((key, v.to_string()));
            }
        }
        let mut out = Vec::new();
        put(&mut out, "sigma", &self.sigma);
        put(&mut out, "epsilon", &self.epsilon);
        put(&mut out, "patch-edge", &self.patch_edge);
        put(&mut out, "atoms", &self.atoms);
        put(&mut out, "gamma", &self.gamma);
        put(&mut out, "window", &self.window);
        put(&mut out, "ref-stride", &self.ref_stride);
        put(&mut out, "stride", &self.stride);
        put(&mut out, "max-support", &self.max_support);
        put(&mut out, "learn-iters", &self.learn_iters);
        put(&mut out, "training-patches", &self.training_patches);
        put(&mut out, "mode", &self.mode);
        put(&mut out, "looks", &self.looks);
        put(&mut out, "dict-scope", &self.dict_scope);
        put(&mut out, "split-scope", &self.split_scope);
        put(&mut out, "weighting", &self.weighting);
        put(&mut out, "per-patch-aggregation", &self.per_patch_aggregation);
        put(&mut out, "split", &self.split);
        put(&mut out, "remove-mean", &self.remove_mean);
        put(&mut out, "bias-correction", &self.bias_correction);
        put(&mut out, "seed", &self.seed);
        out
    }
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped;
/// underscores in keys are read as hyphens.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value, got {line:?}", no + 1))?;
        out.push((key.trim().replace('_', "-"), value.trim().to_string()));
    }
    Ok(out)
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("{key}: cannot parse {value:?}"))
}

/// Applies one setting to `cfg`.
pub fn apply(cfg: &mut DenoiseConfig, key: &str, value: &str) -> Result<(), String> {
    match key {
        "sigma" => cfg.sigma = Some(number(key, value)?),
        "epsilon" => cfg.epsilon = Some(number(key, value)?),
        "patch-edge" => cfg.patch_edge = number(key, value)?,
        "atoms" => cfg.dict_atoms = number(key, value)?,
        "gamma" => cfg.grouping.gamma = number(key, value)?,
        "window" => cfg.grouping.window = number(key, value)?,
        "ref-stride" => cfg.grouping.ref_stride = number(key, value)?,
        "stride" => cfg.patch_stride = number(key, value)?,
        "max-support" => cfg.max_support = Some(number(key, value)?),
        "learn-iters" => cfg.learn_iters = number(key, value)?,
        "training-patches" => {
            cfg.max_training_patches = match value {
                "all" => None,
                v => Some(number(key, v)?),
            }
        }
        "mode" => {
            (cfg.mode, cfg.grouping.metric) = match value {
                "additive" => (NoiseMode::Additive, Similarity::Euclidean),
                "speckle" => (NoiseMode::Speckle, Similarity::Ppb),
                v => return Err(format!("mode: expected additive or speckle, got {v:?}")),
            }
        }
        "looks" => cfg.grouping.looks = number(key, value)?,
        "dict-scope" => {
            cfg.dict_scope = match value {
                "global" => DictScope::Global,
                "per-group" => DictScope::PerGroup,
                v => return Err(format!("dict-scope: expected global or per-group, got {v:?}")),
            }
        }
        "split-scope" => {
            cfg.split_scope = match value {
                "group" => SplitScope::Group,
                "image" => SplitScope::Image,
                v => return Err(format!("split-scope: expected group or image, got {v:?}")),
            }
        }
        "weighting" => {
            cfg.weighting = match value {
                "sparsity" => Weighting::Sparsity,
                "uniform" => Weighting::Uniform,
                v => return Err(format!("weighting: expected sparsity or uniform, got {v:?}")),
            }
        }
        "per-patch-aggregation" => cfg.per_patch_aggregation = number(key, value)?,
        "split" => cfg.split = number(key, value)?,
        "remove-mean" => cfg.remove_mean = number(key, value)?,
        "bias-correction" => cfg.bias_correction = number(key, value)?,
        "seed" => cfg.seed = number(key, value)?,
        other => return Err(format!("unknown setting {other:?}")),
    }
    Ok(())
}

/// Every setting of `cfg`; applying them to the defaults rebuilds `cfg`.
pub fn to_map(cfg: &DenoiseConfig) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        m.insert(k.to_string(), v);
    };
    if let Some(s) = cfg.sigma {
        put("sigma", s.to_string());
    }
    if let Some(e) = cfg.epsilon {
        put("epsilon", e.to_string());
    }
    if let Some(c) = cfg.max_support {
        put("max-support", c.to_string());
    }
    put("patch-edge", cfg.patch_edge.to_string());
    put("atoms", cfg.dict_atoms.to_string());
    put("gamma", cfg.grouping.gamma.to_string());
    put("window", cfg.grouping.window.to_string());
    put("ref-stride", cfg.grouping.ref_stride.to_string());
    put("stride", cfg.patch_stride.to_string());
    put("learn-iters", cfg.learn_iters.to_string());
    put(
        "training-patches",
        cfg.max_training_patches
            .map_or("all".to_string(), |n| n.to_string()),
    );
    let mode = match cfg.mode {
        NoiseMode::Additive => "additive",
        NoiseMode::Speckle => "speckle",
    };
    put("mode", mode.into());
    put("looks", cfg.grouping.looks.to_string());
    let scope = match cfg.dict_scope {
        DictScope::Global => "global",
        DictScope::PerGroup => "per-group",
    };
    put("dict-scope", scope.into());
    let split_scope = match cfg.split_scope {
        SplitScope::Group => "group",
        SplitScope::Image => "image",
    };
    put("split-scope", split_scope.into());
    let weighting = match cfg.weighting {
        Weighting::Sparsity => "sparsity",
        Weighting::Uniform => "uniform",
    };
    put("weighting", weighting.into());
    put("per-patch-aggregation", cfg.per_patch_aggregation.to_string());
    put("split", cfg.split.to_string());
    put("remove-mean", cfg.remove_mean.to_string());
    put("bias-correction", cfg.bias_correction.to_string());
    put("seed", cfg.seed.to_string());
    m
}

/// Defaults, then the config file entries, then the flags.
pub fn resolve(
    base: DenoiseConfig,
    file: &[(String, String)],
    flags: &Settings,
) -> Result<DenoiseConfig, String> {
    let mut cfg = base;
    // mode first so that later keys refine the mode defaults
    let mode = flags
        .mode
        .clone()
        .or_else(|| file.iter().rev().find(|(k, _)| k == "mode").map(|(_, v)| v.clone()));
    if let Some(m) = mode {
        apply(&mut cfg, "mode", &m)?;
    }
    for (k, v) in file {
        apply(&mut cfg, k, v).map_err(|e| format!("config file: {e}"))?;
    }
    for (k, v) in flags.given() {
        apply(&mut cfg, k, &v)?;
    }
    Ok(cfg)
}
