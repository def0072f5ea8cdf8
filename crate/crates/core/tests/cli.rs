use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lddc::plants::FreqResponseData;
use lddc::report::AnalysisReport;

fn lddc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lddc")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("lddc.toml");
    fs::write(&p, body).unwrap();
    p
}

const SURROGATE: &str = "[plant]\nkind = \"builtin\"\nname = \"crystallizer_surrogate\"\n[grid]\nw_min = 1e-3\nw_max = 1.0\nn = 500\n";

#[test]
fn sample_writes_requested_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SURROGATE);
    let o = lddc(&[
        "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(),
        "sample", "--w-min", "1e-3", "--w-max", "1", "--n", "500",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("plant_response.csv")).unwrap();
    assert_eq!(text.lines().count(), 501);
    let data = FreqResponseData::load(&dir.path().join("plant_response.csv")).unwrap();
    assert_eq!(data.len(), 500);
}

#[test]
fn analyze_finds_the_surrogate_pole_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = write_config(dir.path(), SURROGATE);
    let cfg = cfg.to_str().unwrap();
    let o = lddc(&["--config", cfg, "--out", out, "sample", "--w-min", "1e-4", "--w-max", "10", "--n", "2000"]);
    assert_eq!(code(&o), 0);
    let o = lddc(&["--config", cfg, "--out", out, "analyze"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep: AnalysisReport = lddc::report::read_json(&dir.path().join("analysis.json")).unwrap();
    assert_eq!(rep.n_p, 2);
    let [a, b] = [rep.rhp_poles[0], rep.rhp_poles[1]];
    assert_eq!(a[0], b[0]);
    assert_eq!(a[1], -b[1]);
    assert!(a[0] > 0.0);
    assert!(dir.path().join("hankel_svals.csv").exists());
}

#[test]
fn empty_order_list_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SURROGATE);
    let o = lddc(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "certify", "--orders", ""]);
    assert_eq!(code(&o), 64);
    let o = lddc(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "certify", "--orders", "0"]);
    assert_eq!(code(&o), 64);
}

#[test]
fn missing_input_is_a_file_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SURROGATE);
    let missing = dir.path().join("nope.csv");
    let o = lddc(&[
        "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(),
        "analyze", "--input", missing.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 66);
    let o = lddc(&["--config", dir.path().join("absent.toml").to_str().unwrap(), "pipeline"]);
    assert_eq!(code(&o), 66);
}

#[test]
fn bad_configs_and_arguments_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[plant]\nkind = \"rational\"\nnum = [1.0]\nden = [1.0, 1.0]\n[grid]\nw_min = 0.01\nw_max = 100.0\nn = 50\n[reference]\norder = 1\ntau = -1.0\n");
    let o = lddc(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "pipeline"]);
    assert_eq!(code(&o), 64);
    assert!(String::from_utf8_lossy(&o.stderr).contains("reference.tau"));
    let cfg = write_config(dir.path(), "[plant]\nkind = \"teapot\"\n");
    let o = lddc(&["--config", cfg.to_str().unwrap(), "pipeline"]);
    assert_eq!(code(&o), 64);
    assert_eq!(code(&lddc(&["frobnicate"])), 64);
    assert_eq!(code(&lddc(&["--help"])), 0);
}

#[test]
fn pipeline_output_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs().join("first_order.toml");
    for d in [&a, &b] {
        let o = lddc(&["--config", cfg.to_str().unwrap(), "--out", d.path().to_str().unwrap(), "pipeline"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 8, "{names:?}");
    for name in names {
        let x = fs::read(a.path().join(&name)).unwrap();
        let y = fs::read(b.path().join(&name)).unwrap();
        assert!(x == y, "{name:?} differs between runs");
    }
}

#[test]
fn stages_chain_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = configs().join("first_order.toml");
    let cfg = cfg.to_str().unwrap();
    for args in [
        vec!["sample"],
        vec!["analyze"],
        vec!["design", "--orders", "1"],
        vec!["certify", "--orders", "1"],
        vec!["simulate", "--order", "1"],
    ] {
        let mut full = vec!["--config", cfg, "--out", out];
        full.extend(args.iter());
        let o = lddc(&full);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["plant_response.csv", "analysis.json", "kstar_response.csv", "controller_1.json", "certificate.json", "step_1.csv"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
}

#[test]
fn reloaded_samples_do_not_drift() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = write_config(dir.path(), SURROGATE);
    let cfg = cfg.to_str().unwrap();
    assert_eq!(code(&lddc(&["--config", cfg, "--out", out, "sample", "--n", "300", "--w-min", "1e-3", "--w-max", "1"])), 0);
    let path = dir.path().join("plant_response.csv");
    let first = FreqResponseData::load(&path).unwrap();
    first.save(&path).unwrap();
    assert_eq!(FreqResponseData::load(&path).unwrap(), first);
}
