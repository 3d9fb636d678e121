//! End-to-end tests of the `tesopt` binary: exit codes and artifact
//! contracts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn tesopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tesopt"))
        .args(args)
        .output()
        .expect("spawn tesopt")
}

fn small_disk_toml(mode: &str) -> String {
    format!(
        r#"
        mode = "{mode}"

        [geometry]
        kind = "disk"
        h_mm = 6.0

        [[geometry.layers]]
        radius_mm = 40.0
        label = "brain"
        brain = true

        [[geometry.layers]]
        radius_mm = 50.0
        label = "skin"

        [conductivities]
        brain = 0.33
        skin = 0.43

        [electrodes]
        count = 8

        [target]
        center_mm = [0.0, 30.0]
        extent_mm = 8.0
        orientation = "tangential"

        [optimizer]
        tol = 1e-7
        max_iter = 30000
    "#
    )
}

#[test]
fn run_produces_all_artifacts_and_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenario.toml");
    std::fs::write(&config, small_disk_toml("L1R")).unwrap();
    let out = dir.path().join("out");
    let result = tesopt(&[
        "run",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    for artifact in ["protocol.csv", "metrics.csv", "field.vtk", "iterations.log"] {
        assert!(out.join(artifact).exists(), "missing {artifact}");
    }
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(
        metrics.lines().count(),
        2,
        "header plus one row:\n{metrics}"
    );

    // Every emitted protocol nets to zero current.
    let protocol = std::fs::read_to_string(out.join("protocol.csv")).unwrap();
    let mut total_raw = 0.0f64;
    let mut total_rescaled = 0.0f64;
    for line in protocol.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        total_raw += fields[1].parse::<f64>().unwrap();
        total_rescaled += fields[2].parse::<f64>().unwrap();
    }
    assert!(total_raw.abs() < 1e-12, "raw net current {total_raw}");
    assert!(
        total_rescaled.abs() < 1e-12,
        "rescaled net current {total_rescaled}"
    );
}

#[test]
fn m2e_mode_emits_two_metric_rows() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenario.toml");
    std::fs::write(&config, small_disk_toml("M2E-from-L1R")).unwrap();
    let out = dir.path().join("out");
    let result = tesopt(&[
        "run",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 3, "{metrics}");
    assert!(metrics.contains(",L1R,"));
    assert!(metrics.contains(",M2E,"));
    let protocol = std::fs::read_to_string(out.join("protocol.csv")).unwrap();
    assert!(protocol.starts_with("electrode,current_ma,current_ma_rescaled,current_ma_m2e"));
}

#[test]
fn missing_conductivity_exits_one_naming_the_label() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenario.toml");
    std::fs::write(&config, small_disk_toml("L1R").replace("skin = 0.43", "")).unwrap();
    let result = tesopt(&["run", config.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("conductivities.skin"), "stderr: {stderr}");
}

#[test]
fn nonconverged_run_exits_two_with_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenario.toml");
    std::fs::write(
        &config,
        small_disk_toml("L1R").replace("max_iter = 30000", "max_iter = 5"),
    )
    .unwrap();
    let out = dir.path().join("out");
    let result = tesopt(&[
        "run",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2), "{result:?}");
    assert!(out.join("protocol.csv").exists());
    let log = std::fs::read_to_string(out.join("iterations.log")).unwrap();
    assert!(log.contains("max_iter_exceeded"), "{log}");
}

#[test]
fn sweep_writes_rows_plus_average() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenario.toml");
    std::fs::write(&config, small_disk_toml("L1R")).unwrap();
    let out = dir.path().join("out");
    let result = tesopt(&[
        "sweep",
        config.to_str().unwrap(),
        "--targets",
        "4",
        "--orientation",
        "tangential",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let sweep = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 1 + 4 + 1, "{sweep}");
    assert!(sweep.lines().last().unwrap().starts_with("average,"));
}

#[test]
fn sweep_rejects_unknown_orientation() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenario.toml");
    std::fs::write(&config, small_disk_toml("L1R")).unwrap();
    let result = tesopt(&[
        "sweep",
        config.to_str().unwrap(),
        "--targets",
        "2",
        "--orientation",
        "sideways",
    ]);
    assert_eq!(result.status.code(), Some(1));
}

#[test]
fn shipped_configs_parse() {
    for name in [
        "tangential.toml",
        "tangential_m2e.toml",
        "radial.toml",
        "deep.toml",
        "box.toml",
    ] {
        let path = config_path(name);
        let text = std::fs::read_to_string(&path).unwrap();
        tesopt::config::ScenarioConfig::from_toml(&text)
            .unwrap_or_else(|e| panic!("{name} failed to parse: {e}"));
    }
}
