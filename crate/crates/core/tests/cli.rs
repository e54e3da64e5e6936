use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gibbsian::experiments::RunConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gibbsian"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap()).map(|e| (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())).collect();
    out.sort();
    out
}

#[test]
fn every_subcommand_is_listed() {
    let help = String::from_utf8(run(&["--help"]).stdout).unwrap();
    for cmd in ["check-spec", "vp-1d", "vp-product", "grising", "decimate", "rfim-joint", "ad-check", "corr-decay", "oscillation", "run", "schema"] {
        assert!(help.contains(cmd), "{cmd} missing from help");
    }
    let sub = String::from_utf8(run(&["grising", "--help"]).stdout).unwrap();
    for flag in ["--config", "--out", "--workers", "--seed", "--schedule"] {
        assert!(sub.contains(flag), "{flag}");
    }
}

#[test]
fn published_schema_is_current() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schema/run-config.schema.json");
    let published: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(published, serde_json::to_value(RunConfig::schema()).unwrap());
}

#[test]
fn sample_config_parses() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/all.json");
    let cfg = RunConfig::parse(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(cfg.experiments.len(), 11);
    for e in &cfg.experiments {
        let mut e = e.clone();
        e.resolve(cfg.seed, None, None);
        e.validate().unwrap();
    }
}

#[test]
fn experiment_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["vp-product", "--out", dir.path().to_str().unwrap(), "--schedule", "1,2,3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("vp-product.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["library_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(json["config"]["schedule"], serde_json::json!([1, 2, 3]));
    assert!(json["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    let csv = std::fs::read_to_string(dir.path().join("vp-product.csv")).unwrap();
    assert!(csv.starts_with("quantity,parameter,estimate,closed_form,abs_diff,tier\n"));
    assert!(String::from_utf8(out.stdout).unwrap().contains("PASS vp-product/product_closed_forms"));
}

#[test]
fn parameter_files_override_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let params = write(dir.path(), "p.json", r#"{"betas": [0.2, 0.5], "schedule": [2, 3, 4, 5, 6]}"#);
    let out = run(&["vp-1d", "--config", params.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("vp-1d.json")).unwrap()).unwrap();
    assert_eq!(json["results"]["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let unknown = write(dir.path(), "u.json", r#"{"bogus": 1}"#);
    assert_eq!(run(&["vp-1d", "--config", unknown.to_str().unwrap(), "--out", d]).status.code(), Some(2));
    let version = write(dir.path(), "v.json", r#"{"schema_version": 9, "experiments": [{"experiment": "vp-1d"}]}"#);
    assert_eq!(run(&["run", "--config", version.to_str().unwrap(), "--out", d]).status.code(), Some(2));
    let wrong = write(dir.path(), "w.json", r#"{"experiment": "grising"}"#);
    assert_eq!(run(&["vp-1d", "--config", wrong.to_str().unwrap(), "--out", d]).status.code(), Some(2));
    let unseeded = write(dir.path(), "s.json", r#"{"schema_version": 1, "experiments": [{"experiment": "corr-decay"}]}"#);
    assert_eq!(run(&["run", "--config", unseeded.to_str().unwrap(), "--out", d]).status.code(), Some(2));
    assert_eq!(run(&["run", "--config", unseeded.to_str().unwrap(), "--out", d, "--seed", "3", "--schedule", "4,2"]).status.code(), Some(0));
    assert_eq!(run(&["vp-1d", "--out", d, "--schedule", "4,2"]).status.code(), Some(2));
    assert_eq!(run(&["run", "--out", d]).status.code(), Some(2));
}

#[test]
fn resource_caps_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let big = write(dir.path(), "big.json", r#"{"side": 40, "ms": [1, 2]}"#);
    let out = run(&["corr-decay", "--config", big.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_paths_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["vp-1d", "--config", dir.path().join("nope.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sampled_outputs_are_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "mc.json",
        r#"{"schema_version": 1, "seed": 17, "experiments": [
            {"experiment": "grising", "samples": 6, "sample_side": 48},
            {"experiment": "corr-decay", "side": 8, "ms": [1, 2, 3], "tier": "mc", "replicas": 6, "sweeps": 600, "burn_in": 50},
            {"experiment": "rfim-joint", "schedule": [2, 3], "square": false, "kernel_grid": [[0.5, 0.5]], "gap_radii": [1], "margins": [0, 1],
             "sampling": {"side": 6, "sweeps": 300, "burn_in": 20, "replicas": 3}}
        ]}"#,
    );
    let mut outputs = Vec::new();
    for workers in ["1", "4", "4"] {
        let out = dir.path().join(format!("out-{workers}-{}", outputs.len()));
        let st = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", workers]);
        assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
        outputs.push(files(&out));
    }
    assert!(outputs[0].iter().any(|(n, _)| n == "rfim-joint.samples.jsonl"));
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
    let changed = dir.path().join("out-seed");
    assert!(run(&["run", "--config", cfg.to_str().unwrap(), "--out", changed.to_str().unwrap(), "--seed", "18"]).status.success());
    let other = files(&changed);
    let pick = |v: &[(String, Vec<u8>)]| v.iter().find(|(n, _)| n == "grising.samples.jsonl").unwrap().1.clone();
    assert_ne!(pick(&other), pick(&outputs[0]));
}
