use std::fs;
use std::path::Path;
use std::process::Command;

use starkguide::lab::output::blob_hash;

fn run(root: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_starkguide"))
        .args(args)
        .env("STARKGUIDE_OUTPUT_ROOT", root)
        .output()
        .expect("binary runs")
}

#[test]
fn modes_table_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["modes", "--set", "grid.Nu=50", "--set", "output.dir=m"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("m/modes.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,discrete,continuum,relative_error"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    let h = 1.0 / 51.0;
    assert!((first[1] - first[2]).abs() / first[2] < std::f64::consts::PI.powi(2) * h * h / 12.0 * 1.01);
    let manifest: toml::Table = fs::read_to_string(tmp.path().join("m/manifest.toml")).unwrap().parse().unwrap();
    assert_eq!(manifest["run"]["status"].as_str(), Some("ok"));
    assert_eq!(manifest["config"]["grid"]["Nu"].as_integer(), Some(50));
    assert_eq!(manifest["outputs"]["modes.csv"].as_str().unwrap(), blob_hash(csv.as_bytes()));
}

#[test]
fn validation_failures_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["check", "--set", "field.eta=1.5707963267948966"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("field.eta"));
    let out = run(tmp.path(), &["check", "--set", "geometry.model.alpha=-1.2"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(tmp.path(), &["check", "--set", "grid.bogus=1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_runs_still_write_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    // a straight guide has no trapped mode to start the resonance search from
    let out = run(tmp.path(), &["resonance", "--set", "geometry.model.type=\"zero\"", "--set", "field.F=0.02", "--set", "output.dir=r"]);
    assert!(!out.status.success());
    let manifest: toml::Table = fs::read_to_string(tmp.path().join("r/manifest.toml")).unwrap().parse().unwrap();
    assert_eq!(manifest["run"]["status"].as_str(), Some("error"));
    assert!(manifest["run"]["error"].as_str().is_some());
}

#[test]
fn bound_runs_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["bound", "--set", "grid.bound_L=10", "--set", "grid.hs=0.1", "--set", "grid.Nu=11"];
    let a = run(tmp.path(), &[&args[..], &["--set", "output.dir=a"]].concat());
    let b = run(tmp.path(), &[&args[..], &["--set", "output.dir=b"]].concat());
    assert!(a.status.success() && b.status.success());
    let ca = fs::read(tmp.path().join("a/bound.csv")).unwrap();
    assert_eq!(ca, fs::read(tmp.path().join("b/bound.csv")).unwrap());
    assert!(String::from_utf8_lossy(&ca).lines().count() >= 2);
}

#[test]
fn fit_width_reads_a_sweep_table() {
    let tmp = tempfile::tempdir().unwrap();
    let mut text = String::from("F,beta,re_Z,im_Z,residual,L,Ns,Nu,wall_time\n");
    for f in [0.08, 0.06, 0.045, 0.034, 0.025] {
        text += &format!("{f},0.05,9.8,{},0,1,3,3,0\n", -0.7 * (-0.5f64 / f).exp());
    }
    let input = tmp.path().join("sweep.csv");
    fs::write(&input, text).unwrap();
    let out = run(tmp.path(), &["fit-width", "--input", input.to_str().unwrap(), "--set", "output.dir=w"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: toml::Table = fs::read_to_string(tmp.path().join("w/manifest.toml")).unwrap().parse().unwrap();
    let c2 = manifest["summary"]["c2"].as_float().unwrap();
    assert!((c2 - 0.5).abs() < 1e-10);
    assert!(tmp.path().join("w/width_fit.svg").exists());
}
