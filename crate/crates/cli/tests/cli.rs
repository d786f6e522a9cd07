use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ttmdl_core::sim::{export_adc, synthesize, IqOrder, Scenario};
use ttmdl_core::tensor::{read_cten_file, write_cten_file};

fn ttmdl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ttmdl")).args(args).output().expect("binary runs")
}

fn scenario_file() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/desk.json")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = ttmdl(&["simulate", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    assert_eq!(ttmdl(&[]).status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = ttmdl(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["simulate", "denoise", "estimate", "profile", "bench", "ingest"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn simulate_writes_tensor_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = ttmdl(&["simulate", "--config", s(&scenario_file()), "--out", s(dir.path()), "--seed", "9"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let y = read_cten_file(dir.path().join("tensor.cten")).unwrap();
    assert_eq!(y.dims(), &[4, 4, 64, 32]);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["noise"]["seed"], 9);
    assert_eq!(manifest["files"]["tensor"], "tensor.cten");

    // same seed, same bytes
    let again = tempfile::tempdir().unwrap();
    ttmdl(&["simulate", "--config", s(&scenario_file()), "--out", s(again.path()), "--seed", "9"]);
    assert_eq!(
        std::fs::read(dir.path().join("tensor.cten")).unwrap(),
        std::fs::read(again.path().join("tensor.cten")).unwrap()
    );
}

#[test]
fn noiseless_pipeline_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let est = dir.path().join("est");
    assert!(ttmdl(&["simulate", "--noiseless", "--config", s(&scenario_file()), "--out", s(&sim)]).status.success());
    let out = ttmdl(&[
        "estimate",
        "--config",
        s(&scenario_file()),
        "--input",
        s(&sim.join("tensor.cten")),
        "--out",
        s(&est),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let result: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(est.join("estimate.json")).unwrap()).unwrap();
    assert_eq!(result["targets"].as_array().unwrap().len(), 2);
    for n in result["nmse"].as_array().unwrap() {
        assert!(n.as_f64().unwrap() < 1e-12);
    }
}

#[test]
fn estimate_without_radar_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = ttmdl(&["estimate", "--input", s(&dir.path().join("x.cten"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn rank_deficient_estimate_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let y = ttmdl_core::ComplexTensor::zeros(&[4, 4, 8, 8]);
    let path = dir.path().join("zero.cten");
    write_cten_file(&y, &path).unwrap();
    let out = ttmdl(&[
        "estimate",
        "--config",
        s(&scenario_file()),
        "--input",
        s(&path),
        "--windows",
        "2,2,2,2",
        "--order",
        "2",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn denoise_and_profile() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    ttmdl(&["simulate", "--snr", "0", "--config", s(&scenario_file()), "--out", s(&sim)]);
    let out = ttmdl(&["denoise", "--input", s(&sim.join("tensor.cten")), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(read_cten_file(dir.path().join("denoised.cten")).is_ok());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("denoise.json")).unwrap()).unwrap();
    assert!(report["energy_identity_error"].as_f64().unwrap() < 1e-8);

    for (kind, file, label) in [("rd", "profile_rd.csv", "velocity_mps"), ("el", "profile_el.csv", "elevation_deg")] {
        let out = ttmdl(&[
            "profile",
            "--kind",
            kind,
            "--config",
            s(&scenario_file()),
            "--input",
            s(&sim.join("tensor.cten")),
            "--out",
            s(dir.path()),
        ]);
        assert!(out.status.success());
        let csv = std::fs::read_to_string(dir.path().join(file)).unwrap();
        assert!(csv.lines().next().unwrap().starts_with(&format!("range_m\\{label},")));
        assert_eq!(csv.lines().count(), 257);
    }
}

#[test]
fn ingest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sc = Scenario::desk();
    let y = synthesize(&sc.radar, &sc.targets).unwrap();
    let (bytes, sidecar) = export_adc(&y, [2, 2], [2, 2], IqOrder::Iq).unwrap();
    std::fs::write(dir.path().join("cap.bin"), bytes).unwrap();
    std::fs::write(dir.path().join("cap.json"), serde_json::to_string(&sidecar).unwrap()).unwrap();
    let out = ttmdl(&[
        "ingest",
        "--raw",
        s(&dir.path().join("cap.bin")),
        "--sidecar",
        s(&dir.path().join("cap.json")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let back = read_cten_file(dir.path().join("tensor.cten")).unwrap();
    assert_eq!(back.dims(), y.dims());
}

#[test]
fn small_bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = serde_json::json!({
        "scenario": s(&scenario_file()),
        "methods": ["none", "tt_mdl"],
        "snr_grid_db": [-10, 0],
        "trials": 1,
        "base_seed": 0,
        "output_dir": "ignored"
    });
    let spec_path = dir.path().join("bench.json");
    std::fs::write(&spec_path, spec.to_string()).unwrap();
    let out_dir = dir.path().join("out");
    let out = ttmdl(&["bench", "--config", s(&spec_path), "--out", s(&out_dir), "--peak-snr"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(out_dir.join("timing.csv").exists());
    assert!(out_dir.join("peak_snr.csv").exists());
}

#[test]
fn invalid_bench_spec_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let spec = serde_json::json!({
        "scenario": s(&scenario_file()),
        "methods": ["none"],
        "snr_grid_db": [0, -10],
        "trials": 1,
        "base_seed": 0,
        "output_dir": "x"
    });
    let spec_path = dir.path().join("bench.json");
    std::fs::write(&spec_path, spec.to_string()).unwrap();
    assert_eq!(ttmdl(&["bench", "--config", s(&spec_path)]).status.code(), Some(1));
}
