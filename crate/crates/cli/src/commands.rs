use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use dualsparse::eval::{psnr, psnr_with_peak, ssim, ssim_windowed, MetricConfig, NoiseKind, NoiseModel};
use dualsparse::io::{read_codes, read_dictionary, read_image, write_atoms, write_codes, write_dictionary, write_image};
use dualsparse::pipeline::{denoise, learn_dictionary, DenoiseConfig, DenoiseReport, NoiseMode};
use dualsparse::subdict::{split, SubdictSplit};
use dualsparse::Image;
use log::info;

use crate::manifest::{default_path, RunManifest};
use crate::settings::{parse_config, resolve, to_map, Settings};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_PIPELINE: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "dualsparse", version, about = "Image denoising by dual sparse decomposition")]
pub struct Cli {
    /// worker threads [default: available parallelism]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// more log output (-v info, -vv debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Denoise an image (additive Gaussian noise unless --mode speckle)
    Denoise(DenoiseArgs),
    /// Despeckle an intensity image (same as denoise --mode speckle)
    Despeckle(DenoiseArgs),
    /// Add simulated noise to a clean image
    Simulate(SimulateArgs),
    /// PSNR and SSIM of a test image against a reference
    Metrics(MetricsArgs),
    /// Learn an image dictionary with K-SVD
    LearnDict(LearnArgs),
    /// Split a dictionary into principal and noise sub-dictionaries
    SplitDict(SplitArgs),
    /// Repeat a run from its manifest
    Rerun(RerunArgs),
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long = "out", value_name = "PATH")]
    pub output: PathBuf,
    /// write the key=value report here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
    /// [default: <out>.manifest.json]
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long = "out", value_name = "PATH")]
    pub output: PathBuf,
    #[arg(long, value_parser = ["awgn", "speckle"], default_value = "awgn")]
    pub noise: String,
    /// AWGN standard deviation
    #[arg(long, default_value_t = 35.0)]
    pub sigma: f64,
    /// speckle looks
    #[arg(long, default_value_t = 1.0)]
    pub looks: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// [default: <out>.manifest.json]
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long, value_name = "PATH")]
    pub reference: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub test: PathBuf,
    /// PSNR peak [default: maximum of the reference]
    #[arg(long)]
    pub peak: Option<f64>,
    /// intensity range for the SSIM constants [default: the reference's]
    #[arg(long)]
    pub range: Option<f64>,
    /// also report mean SSIM over 11x11 Gaussian windows
    #[arg(long)]
    pub windowed: bool,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// dictionary file
    #[arg(long = "out", value_name = "PATH")]
    pub output: PathBuf,
    /// also write the codes of every patch
    #[arg(long, value_name = "PATH")]
    pub codes_out: Option<PathBuf>,
    /// [default: <out>.manifest.json]
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long, value_name = "PATH")]
    pub dict: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub codes: PathBuf,
    /// writes <prefix>.report.txt, <prefix>.{principal,noise}.dsdd and .dsdc
    #[arg(long, value_name = "PREFIX")]
    pub out_prefix: PathBuf,
    /// principal sub-dictionary size instead of the histogram cut
    #[arg(long)]
    pub cut: Option<usize>,
    /// [default: <prefix>.manifest.json]
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,
    /// write the primary output here instead
    #[arg(long = "out", value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// manifest of the new run [default: next to its output]
    #[arg(long, value_name = "PATH")]
    pub manifest_out: Option<PathBuf>,
}

/// Error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(msg: impl Display) -> Self {
        Self {
            code: EXIT_USAGE,
            error: anyhow!("{msg}"),
        }
    }
}

trait Classify<T> {
    fn or_exit(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn or_exit(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code,
            error: e.into(),
        })
    }
}

fn load_image(path: &Path) -> Result<Image, Failure> {
    read_image(path)
        .with_context(|| format!("cannot read image {}", path.display()))
        .or_exit(EXIT_IO)
}

fn save_image(path: &Path, img: &Image) -> Result<(), Failure> {
    write_image(path, img)
        .with_context(|| format!("cannot write image {}", path.display()))
        .or_exit(EXIT_IO)
}

fn save_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .or_exit(EXIT_IO)
}

/// Runs `body`, then writes the manifest whatever the outcome.
fn recorded(
    path: &Path,
    mut manifest: RunManifest,
    body: impl FnOnce(&mut RunManifest) -> Result<(), Failure>,
) -> Result<(), Failure> {
    let start = Instant::now();
    let result = body(&mut manifest);
    manifest
        .timings
        .insert("wall_s".into(), start.elapsed().as_secs_f64());
    match &result {
        Ok(()) => manifest.status = "ok".into(),
        Err(f) => {
            manifest.status = "error".into();
            manifest.error = Some(format!("{:#}", f.error));
            manifest.exit_code = f.code as i32;
        }
    }
    if let Err(e) = manifest.write(path) {
        log::error!("{e:#}");
        if result.is_ok() {
            return Err(Failure { code: EXIT_IO, error: e });
        }
    }
    result
}

fn config_for(base: DenoiseConfig, settings: &Settings) -> Result<DenoiseConfig, Failure> {
    let file = match &settings.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read config file {}", path.display()))
                .or_exit(EXIT_IO)?;
            parse_config(&text)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
        }
        None => Vec::new(),
    };
    resolve(base, &file, settings).map_err(Failure::usage)
}

fn report_map(report: &DenoiseReport) -> std::collections::BTreeMap<String, String> {
    report
        .to_key_value()
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

pub fn run(cli: Command) -> Result<(), Failure> {
    match cli {
        Command::Denoise(args) => cmd_denoise(args, DenoiseConfig::default(), "denoise"),
        Command::Despeckle(args) => {
            let looks = args.settings.looks.unwrap_or(1.0);
            let mut args = args;
            args.settings.mode = Some("speckle".into());
            cmd_denoise(args, DenoiseConfig::speckle(looks), "despeckle")
        }
        Command::Simulate(args) => cmd_simulate(args),
        Command::Metrics(args) => cmd_metrics(args),
        Command::LearnDict(args) => cmd_learn_dict(args),
        Command::SplitDict(args) => cmd_split_dict(args),
        Command::Rerun(args) => cmd_rerun(args),
    }
}

fn cmd_denoise(args: DenoiseArgs, base: DenoiseConfig, name: &str) -> Result<(), Failure> {
    let manifest_path = args.manifest.clone().unwrap_or_else(|| default_path(&args.output));
    let mut manifest = RunManifest::new(name);
    manifest.arg("in", args.input.display());
    manifest.arg("out", args.output.display());
    manifest.inputs.push(args.input.display().to_string());
    manifest.outputs.push(args.output.display().to_string());
    if let Some(r) = &args.report {
        manifest.arg("report", r.display());
        manifest.outputs.push(r.display().to_string());
    }

    recorded(&manifest_path, manifest, |m| {
        let cfg = config_for(base, &args.settings)?;
        m.args.extend(to_map(&cfg));
        m.seed = Some(cfg.seed);
        cfg.validate().or_exit(EXIT_USAGE)?;
        if name == "despeckle" && cfg.mode != NoiseMode::Speckle {
            return Err(Failure::usage("despeckle runs in speckle mode only"));
        }
        let noisy = load_image(&args.input)?;
        info!(
            "{} {}x{}: epsilon {}, gamma {}, {}x{} patches, {} atoms",
            name,
            noisy.height(),
            noisy.width(),
            cfg.resolved_epsilon().unwrap_or(f64::NAN),
            cfg.grouping.gamma,
            cfg.patch_edge,
            cfg.patch_edge,
            cfg.dict_atoms
        );
        let (out, report) = denoise(&noisy, &cfg).or_exit(EXIT_PIPELINE)?;
        m.report = report_map(&report);
        let t = &report.timings;
        for (k, v) in [
            ("learn_s", t.learn),
            ("encode_s", t.encode),
            ("groups_s", t.groups),
            ("aggregate_s", t.aggregate),
            ("denoise_s", t.total),
        ] {
            m.timings.insert(k.into(), v);
        }
        save_image(&args.output, &out)?;
        let text = report.to_key_value();
        match &args.report {
            Some(path) => save_text(path, &text)?,
            None => print!("{text}"),
        }
        Ok(())
    })
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let manifest_path = args.manifest.clone().unwrap_or_else(|| default_path(&args.output));
    let mut manifest = RunManifest::new("simulate");
    manifest.arg("in", args.input.display());
    manifest.arg("out", args.output.display());
    manifest.arg("noise", &args.noise);
    manifest.arg("sigma", args.sigma);
    manifest.arg("looks", args.looks);
    manifest.arg("seed", args.seed);
    manifest.seed = Some(args.seed);
    manifest.inputs.push(args.input.display().to_string());
    manifest.outputs.push(args.output.display().to_string());

    recorded(&manifest_path, manifest, |_| {
        let kind = match args.noise.as_str() {
            "speckle" => NoiseKind::Speckle { looks: args.looks },
            _ => NoiseKind::Awgn { sigma: args.sigma },
        };
        let clean = load_image(&args.input)?;
        let model = NoiseModel {
            kind,
            seed: args.seed,
        };
        let noisy = model.apply(&clean).map_err(|e| {
            let code = match e {
                dualsparse::Error::InvalidArgument(_) => EXIT_USAGE,
                _ => EXIT_PIPELINE,
            };
            Failure {
                code,
                error: e.into(),
            }
        })?;
        save_image(&args.output, &noisy)
    })
}

fn cmd_metrics(args: MetricsArgs) -> Result<(), Failure> {
    let reference = load_image(&args.reference)?;
    let test = load_image(&args.test)?;
    let psnr_db = match args.peak {
        Some(p) => psnr_with_peak(&reference, &test, p),
        None => psnr(&reference, &test),
    }
    .or_exit(EXIT_PIPELINE)?;
    let mc = MetricConfig::for_range(args.range.unwrap_or(reference.dynamic_range()));
    let s = ssim(&reference, &test, &mc).or_exit(EXIT_PIPELINE)?;
    let fmt = |v: f64| {
        if v.is_infinite() {
            if v > 0.0 { "inf" } else { "-inf" }.to_string()
        } else {
            format!("{v:.6}")
        }
    };
    println!("psnr_db={}", fmt(psnr_db));
    println!("ssim={}", fmt(s));
    if args.windowed {
        let w = ssim_windowed(&reference, &test, &mc).or_exit(EXIT_PIPELINE)?;
        println!("ssim_windowed={}", fmt(w));
    }
    println!("c1={}", mc.c1);
    println!("c2={}", mc.c2);
    Ok(())
}

fn cmd_learn_dict(args: LearnArgs) -> Result<(), Failure> {
    let manifest_path = args.manifest.clone().unwrap_or_else(|| default_path(&args.output));
    let mut manifest = RunManifest::new("learn-dict");
    manifest.arg("in", args.input.display());
    manifest.arg("out", args.output.display());
    manifest.inputs.push(args.input.display().to_string());
    manifest.outputs.push(args.output.display().to_string());
    if let Some(c) = &args.codes_out {
        manifest.arg("codes-out", c.display());
        manifest.outputs.push(c.display().to_string());
    }

    recorded(&manifest_path, manifest, |m| {
        let cfg = config_for(DenoiseConfig::default(), &args.settings)?;
        m.args.extend(to_map(&cfg));
        m.seed = Some(cfg.seed);
        cfg.validate().or_exit(EXIT_USAGE)?;
        let img = load_image(&args.input)?;
        let learned = learn_dictionary(&img, &cfg).or_exit(EXIT_PIPELINE)?;
        m.timings.insert("learn_s".into(), learned.timings.learn);
        m.timings.insert("encode_s".into(), learned.timings.encode);
        write_dictionary(&args.output, &learned.dictionary)
            .with_context(|| format!("cannot write dictionary {}", args.output.display()))
            .or_exit(EXIT_IO)?;
        if let Some(path) = &args.codes_out {
            write_codes(path, &learned.codes)
                .with_context(|| format!("cannot write codes {}", path.display()))
                .or_exit(EXIT_IO)?;
        }
        let n = learned.dictionary.atom_len() as f64;
        let sq: f64 = learned.residual_norms.iter().map(|r| r * r).sum();
        let rms = (sq / (n * learned.codes.cols() as f64)).sqrt();
        let lines = [
            ("atom_len", learned.dictionary.atom_len().to_string()),
            ("atoms", learned.dictionary.atom_count().to_string()),
            ("patches", learned.codes.cols().to_string()),
            ("training_patches", learned.training_columns.to_string()),
            ("nonzeros", learned.codes.nnz().to_string()),
            ("representation_error", format!("{rms:.6}")),
        ];
        for (k, v) in lines {
            println!("{k}={v}");
            m.report.insert(k.into(), v);
        }
        Ok(())
    })
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_os_string();
    name.push(suffix);
    PathBuf::from(name)
}

fn cmd_split_dict(args: SplitArgs) -> Result<(), Failure> {
    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| with_suffix(&args.out_prefix, ".manifest.json"));
    let outputs = [
        ".report.txt",
        ".principal.dsdd",
        ".noise.dsdd",
        ".principal.dsdc",
        ".noise.dsdc",
    ]
    .map(|s| with_suffix(&args.out_prefix, s));
    let mut manifest = RunManifest::new("split-dict");
    manifest.arg("dict", args.dict.display());
    manifest.arg("codes", args.codes.display());
    manifest.arg("out-prefix", args.out_prefix.display());
    if let Some(c) = args.cut {
        manifest.arg("cut", c);
    }
    manifest.inputs = vec![args.dict.display().to_string(), args.codes.display().to_string()];
    manifest.outputs = outputs.iter().map(|p| p.display().to_string()).collect();

    recorded(&manifest_path, manifest, |m| {
        let dict = read_dictionary(&args.dict)
            .with_context(|| format!("cannot read dictionary {}", args.dict.display()))
            .or_exit(EXIT_IO)?;
        let codes = read_codes(&args.codes)
            .with_context(|| format!("cannot read codes {}", args.codes.display()))
            .or_exit(EXIT_IO)?;
        if codes.rows() != dict.atom_count() {
            return Err(Failure::usage(format!(
                "dictionary has {} atoms but the codes have {} rows",
                dict.atom_count(),
                codes.rows()
            )));
        }
        let mut s = SubdictSplit::from_codes(&codes).or_exit(EXIT_PIPELINE)?;
        if let Some(cut) = args.cut {
            s = s.with_cut(cut).or_exit(EXIT_USAGE)?;
        }
        let (principal, noise) = split(&dict, &codes, &s).or_exit(EXIT_PIPELINE)?;
        save_text(&outputs[0], &s.report())?;
        for (atoms_path, codes_path, part) in [
            (&outputs[1], &outputs[3], &principal),
            (&outputs[2], &outputs[4], &noise),
        ] {
            write_atoms(atoms_path, &part.atoms)
                .and_then(|_| write_codes(codes_path, &part.codes))
                .with_context(|| format!("cannot write {}", atoms_path.display()))
                .or_exit(EXIT_IO)?;
        }
        let lines = [
            ("atoms", s.atom_count().to_string()),
            ("modal_frequency", s.modal_frequency.to_string()),
            ("cut", s.cut.to_string()),
            ("noise_atoms", noise.len().to_string()),
        ];
        for (k, v) in lines {
            println!("{k}={v}");
            m.report.insert(k.into(), v);
        }
        Ok(())
    })
}

fn cmd_rerun(args: RerunArgs) -> Result<(), Failure> {
    let old = RunManifest::read(&args.manifest).or_exit(EXIT_IO)?;
    let mut replay = old.clone();
    let key = if old.command == "split-dict" { "out-prefix" } else { "out" };
    if let Some(out) = &args.output {
        replay.args.insert(key.into(), out.display().to_string());
    }
    if let Some(path) = &args.manifest_out {
        replay.args.insert("manifest".into(), path.display().to_string());
    } else if args.output.is_none() {
        return Err(Failure::usage(
            "rerun needs --out or --manifest-out so the original manifest is kept",
        ));
    }
    let argv = replay.replay_argv();
    info!("replaying: {}", argv.join(" "));
    let cli = Cli::try_parse_from(&argv)
        .map_err(|e| Failure::usage(format!("manifest {} does not replay: {e}", args.manifest.display())))?;
    if matches!(cli.command, Command::Rerun(_)) {
        return Err(Failure::usage("a manifest cannot replay rerun"));
    }
    run(cli.command)
}
