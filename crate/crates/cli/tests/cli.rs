use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dualsparse::io::{read_atoms, read_image, write_codes, write_dictionary, write_image};
use dualsparse::sparse::{Dictionary, SparseCodes, SparseColumn};
use dualsparse::Image;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dualsparse"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn key(text: &str, k: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{k}=")))
        .unwrap_or_else(|| panic!("{k} missing from {text}"))
        .to_string()
}

fn manifest(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// A 40x40 crop of a bundled test image, written as PGM.
fn fixture(dir: &Path) -> PathBuf {
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/coins.pgm");
    let img = read_image(&src).unwrap().crop(20, 20, 40, 40).unwrap();
    let path = dir.join("clean.pgm");
    write_image(&path, &img).unwrap();
    path
}

const SMALL: &[&str] = &["--atoms", "32", "--patch-edge", "5", "--gamma", "20", "--window", "11", "--learn-iters", "3"];

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    for name in ["a.pgm", "b.pgm"] {
        let o = run(dir.path(), &["simulate", "--in", "clean.pgm", "--out", name, "--sigma", "20", "--seed", "9"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read(dir.path().join("a.pgm")).unwrap(), fs::read(dir.path().join("b.pgm")).unwrap());
    let o = run(dir.path(), &["simulate", "--in", "clean.pgm", "--out", "c.pgm", "--sigma", "20", "--seed", "10"]);
    assert!(o.status.success());
    assert_ne!(fs::read(dir.path().join("a.pgm")).unwrap(), fs::read(dir.path().join("c.pgm")).unwrap());
    let m = manifest(&dir.path().join("a.pgm.manifest.json"));
    assert_eq!(m["status"], "ok");
    assert_eq!(m["seed"], 9);
}

#[test]
fn metrics_on_identical_images() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let o = run(dir.path(), &["metrics", "--reference", "clean.pgm", "--test", "clean.pgm", "--windowed"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(key(&out, "psnr_db"), "inf");
    assert_eq!(key(&out, "ssim"), "1.000000");
    assert_eq!(key(&out, "ssim_windowed"), "1.000000");
}

#[test]
fn metrics_with_peak() {
    let dir = tempfile::tempdir().unwrap();
    write_image(&dir.path().join("r.dsf"), &Image::filled(4, 4, 255.0).unwrap()).unwrap();
    write_image(&dir.path().join("t.dsf"), &Image::filled(4, 4, 254.0).unwrap()).unwrap();
    let o = run(dir.path(), &["metrics", "--reference", "r.dsf", "--test", "t.dsf"]);
    assert_eq!(key(&stdout(&o), "psnr_db"), "48.130804");
    let o = run(dir.path(), &["metrics", "--reference", "r.dsf", "--test", "t.dsf", "--peak", "1"]);
    assert_eq!(key(&stdout(&o), "psnr_db"), "0.000000");
}

#[test]
fn default_parameters() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    assert!(run(dir.path(), &["simulate", "--in", "clean.pgm", "--out", "noisy.pgm", "--sigma", "35"]).status.success());
    let o = run(dir.path(), &["denoise", "--in", "noisy.pgm", "--sigma", "35", "--out", "out.pgm", "--learn-iters", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = stdout(&o);
    assert_eq!(key(&report, "epsilon"), "35");
    assert_eq!(key(&report, "dictionary_atoms"), "256");
    let m = manifest(&dir.path().join("out.pgm.manifest.json"));
    assert_eq!(m["args"]["gamma"], "90");
    assert_eq!(m["args"]["patch-edge"], "8");
    assert_eq!(m["args"]["atoms"], "256");
    assert_eq!(m["args"]["mode"], "additive");
    assert_eq!(m["report"]["epsilon"], "35");
    let out = read_image(&dir.path().join("out.pgm")).unwrap();
    assert_eq!((out.height(), out.width()), (40, 40));
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    fs::write(dir.path().join("run.cfg"), "# test run\nsigma = 20\ngamma=12\natoms=24\nlearn_iters=2\n").unwrap();
    let o = run(
        dir.path(),
        &["denoise", "--in", "clean.pgm", "--out", "o.dsf", "--config", "run.cfg", "--sigma", "15", "--report", "r.txt"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let m = manifest(&dir.path().join("o.dsf.manifest.json"));
    assert_eq!(m["args"]["sigma"], "15");
    assert_eq!(m["args"]["gamma"], "12");
    assert_eq!(m["args"]["atoms"], "24");
    assert_eq!(m["args"]["window"], "39");
    let report = fs::read_to_string(dir.path().join("r.txt")).unwrap();
    assert_eq!(key(&report, "epsilon"), "15");
    assert!(stdout(&o).is_empty());

    fs::write(dir.path().join("bad.cfg"), "colour=blue\n").unwrap();
    let o = run(dir.path(), &["denoise", "--in", "clean.pgm", "--out", "o2.dsf", "--config", "bad.cfg", "--sigma", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn despeckle_routes_to_speckle_mode() {
    let dir = tempfile::tempdir().unwrap();
    let clean = fixture(dir.path());
    let img = read_image(&clean).unwrap().map(|v| v + 1.0).unwrap();
    write_image(&dir.path().join("pos.dsf"), &img).unwrap();
    assert!(run(dir.path(), &["simulate", "--in", "pos.dsf", "--out", "sp.dsf", "--noise", "speckle", "--looks", "1"]).status.success());
    let mut args = vec!["despeckle", "--in", "sp.dsf", "--out", "d.dsf"];
    args.extend_from_slice(SMALL);
    let o = run(dir.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = manifest(&dir.path().join("d.dsf.manifest.json"));
    assert_eq!(m["args"]["mode"], "speckle");
    assert_eq!(m["args"]["looks"], "1");
    assert_ne!(m["report"]["bias_correction"], "none");
    let out = read_image(&dir.path().join("d.dsf")).unwrap();
    assert!(out.pixels().iter().all(|&v| v > 0.0));

    let mut args = vec!["denoise", "--mode", "speckle", "--looks", "1", "--in", "sp.dsf", "--out", "e.dsf"];
    args.extend_from_slice(SMALL);
    assert!(run(dir.path(), &args).status.success());
    assert_eq!(fs::read(dir.path().join("d.dsf")).unwrap(), fs::read(dir.path().join("e.dsf")).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let o = run(dir.path(), &["denoise", "--in", "missing.pgm", "--sigma", "10", "--out", "o.pgm"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("missing.pgm"));
    let m = manifest(&dir.path().join("o.pgm.manifest.json"));
    assert_eq!(m["status"], "error");
    assert_eq!(m["exit_code"], 3);
    assert!(m["error"].as_str().unwrap().contains("missing.pgm"));

    assert_eq!(run(dir.path(), &["denoise", "--in", "clean.pgm", "--out", "o.pgm"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["denoise", "--in", "clean.pgm", "--out", "o.pgm", "--sigma", "x"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["--threads", "0", "metrics", "--reference", "clean.pgm", "--test", "clean.pgm"]).status.code(), Some(2));

    let mut zeros = Image::filled(20, 20, 5.0).unwrap().into_pixels();
    zeros[0] = 0.0;
    write_image(&dir.path().join("z.dsf"), &Image::new(20, 20, zeros).unwrap()).unwrap();
    let o = run(dir.path(), &["despeckle", "--in", "z.dsf", "--out", "z2.dsf"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert_eq!(manifest(&dir.path().join("z2.dsf.manifest.json"))["exit_code"], 4);
}

#[test]
fn split_dict_reports_hand_counts() {
    let dir = tempfile::tempdir().unwrap();
    // frequencies: atom0 3, atoms 1-3 once, atom4 unused, atom5 5
    let uses: [&[usize]; 5] = [&[0, 1, 5], &[0, 2, 5], &[0, 3, 5], &[5], &[5]];
    let columns = uses
        .iter()
        .map(|ks| SparseColumn::from_pairs(ks.iter().map(|&k| (k, 1.0 + k as f64)).collect()).unwrap())
        .collect();
    write_codes(&dir.path().join("c.dsdc"), &SparseCodes::from_columns(6, columns).unwrap()).unwrap();
    write_dictionary(&dir.path().join("d.dsdd"), &Dictionary::identity(6)).unwrap();

    let o = run(dir.path(), &["split-dict", "--dict", "d.dsdd", "--codes", "c.dsdc", "--out-prefix", "s"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(key(&stdout(&o), "cut"), "2");
    assert_eq!(key(&stdout(&o), "modal_frequency"), "1");
    let report = fs::read_to_string(dir.path().join("s.report.txt")).unwrap();
    let rows: Vec<&str> = report.lines().filter(|l| !l.contains('=') && !l.starts_with('#')).collect();
    assert_eq!(
        rows,
        ["0 5 5 principal", "1 0 3 principal", "2 1 1 noise", "3 2 1 noise", "4 3 1 noise", "5 4 0 noise"]
    );
    let principal = read_atoms(&dir.path().join("s.principal.dsdd")).unwrap();
    assert_eq!(principal.cols(), 2);
    assert_eq!(principal.col(0), Dictionary::identity(6).atom(5));
    assert_eq!(read_atoms(&dir.path().join("s.noise.dsdd")).unwrap().cols(), 4);

    let o = run(dir.path(), &["split-dict", "--dict", "d.dsdd", "--codes", "c.dsdc", "--out-prefix", "t", "--cut", "6"]);
    assert!(o.status.success());
    assert_eq!(read_atoms(&dir.path().join("t.noise.dsdd")).unwrap().cols(), 0);
    let o = run(dir.path(), &["split-dict", "--dict", "d.dsdd", "--codes", "c.dsdc", "--out-prefix", "u", "--cut", "7"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn learned_dictionary_feeds_split() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let o = run(
        dir.path(),
        &["learn-dict", "--in", "clean.pgm", "--out", "d.dsdd", "--codes-out", "c.dsdc", "--atoms", "40", "--patch-edge", "5", "--epsilon", "4", "--learn-iters", "3"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(key(&out, "atoms"), "40");
    assert_eq!(key(&out, "atom_len"), "25");
    assert_eq!(key(&out, "patches"), (36 * 36).to_string());
    let o = run(dir.path(), &["split-dict", "--dict", "d.dsdd", "--codes", "c.dsdc", "--out-prefix", "s"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cut: usize = key(&stdout(&o), "cut").parse().unwrap();
    assert!((1..=40).contains(&cut));
}

#[test]
fn rerun_reproduces_the_output() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    fs::write(dir.path().join("run.cfg"), "weighting=uniform\nseed=5\n").unwrap();
    let mut args = vec!["denoise", "--in", "clean.pgm", "--out", "a.dsf", "--sigma", "12", "--config", "run.cfg"];
    args.extend_from_slice(SMALL);
    assert!(run(dir.path(), &args).status.success());
    let o = run(dir.path(), &["rerun", "--manifest", "a.dsf.manifest.json", "--out", "b.dsf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(dir.path().join("a.dsf")).unwrap(), fs::read(dir.path().join("b.dsf")).unwrap());
    let b = manifest(&dir.path().join("b.dsf.manifest.json"));
    assert_eq!(b["args"]["weighting"], "uniform");
    assert_eq!(b["seed"], 5);
    assert_eq!(
        run(dir.path(), &["rerun", "--manifest", "a.dsf.manifest.json"]).status.code(),
        Some(2)
    );
}
