//! Front-end behavior: artifact layout, byte-determinism, config file
//! precedence, and the machine-readable error path.

use clap::Parser;
use snake_walk::cli::{self, Cli};
use std::fs;
use std::path::Path;

fn run_args(args: &[&str]) -> Vec<std::path::PathBuf> {
    let cli = Cli::parse_from(args);
    cli::run(cli).expect("command failed").files
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap()
}

#[test]
fn spectra_reproduces_nine_bands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let files = run_args(&[
        "snake-walk", "spectra", "--n", "8", "--grid", "256", "--out-dir", out,
    ]);
    assert!(files.iter().any(|f| f.ends_with("spectra.csv")));
    assert!(files.iter().any(|f| f.ends_with("spectra_roots.csv")));
    let csv = read(&dir.path().join("spectra.csv"));
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    // k column + 9 bands + 9 derivatives.
    assert_eq!(header.len(), 1 + 9 + 9);
    assert_eq!(csv.lines().count(), 257);
    let roots = read(&dir.path().join("spectra_roots.csv"));
    assert_eq!(roots.lines().next().unwrap().split(',').count(), 10);
    let sidecar: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("spectra.json"))).unwrap();
    assert_eq!(sidecar["params"]["n"], 8);
    assert_eq!(sidecar["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        run_args(&[
            "snake-walk",
            "glued-run",
            "--N", "1", "--M", "3", "--n", "3",
            "--t", "2.5", "--samples", "40", "--seed", "9",
            "--out-dir", dir.path().to_str().unwrap(),
        ]);
        run_args(&[
            "snake-walk", "scatter", "--grid", "512",
            "--out-dir", dir.path().to_str().unwrap(),
        ]);
    }
    for name in ["glued_run.json", "glued_run_config.json", "scatter.csv", "scatter.json"] {
        let a = read(&dir_a.path().join(name));
        let b = read(&dir_b.path().join(name));
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    fs::write(&config, "n = 4\ngrid = 256\n").unwrap();
    run_args(&[
        "snake-walk",
        "tree-spectra",
        "--config", config.to_str().unwrap(),
        "--out-dir", dir.path().to_str().unwrap(),
    ]);
    let sidecar: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("tree_spectra.json"))).unwrap();
    assert_eq!(sidecar["params"]["n"], 4);
    assert_eq!(sidecar["params"]["grid"], 256);

    run_args(&[
        "snake-walk",
        "tree-spectra",
        "--config", config.to_str().unwrap(),
        "--n", "6",
        "--out-dir", dir.path().to_str().unwrap(),
    ]);
    let sidecar: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("tree_spectra.json"))).unwrap();
    assert_eq!(sidecar["params"]["n"], 6, "flag must override config");
}

#[test]
fn eta_start_table_matches_reported_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    run_args(&[
        "snake-walk", "eta", "--n", "14", "--grid", "2048",
        "--out-dir", dir.path().to_str().unwrap(),
    ]);
    let table = read(&dir.path().join("eta_start.csv"));
    let mut rows = table.lines().skip(1).map(|l| {
        let mut it = l.split(',');
        let x: f64 = it.next().unwrap().parse().unwrap();
        let p: f64 = it.next().unwrap().parse().unwrap();
        (x, p)
    });
    let (x1, p1) = rows.next().unwrap();
    let (x3, p3) = rows.next().unwrap();
    let (x5, p5) = rows.next().unwrap();
    assert_eq!((x1, x3, x5), (1.0, 3.0, 5.0));
    assert!((p1 - 0.62).abs() < 0.01);
    assert!((p3 - 0.26).abs() < 0.01);
    assert!((p5 - 0.09).abs() < 0.01);
}

#[test]
fn scatter_peaks_at_three_half_pi() {
    let dir = tempfile::tempdir().unwrap();
    run_args(&[
        "snake-walk", "scatter", "--grid", "1024",
        "--out-dir", dir.path().to_str().unwrap(),
    ]);
    let csv = read(&dir.path().join("scatter.csv"));
    let best = csv
        .lines()
        .skip(1)
        .map(|l| {
            let cells: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
            (cells[0], cells[1])
        })
        .filter(|(k, _)| *k > std::f64::consts::PI)
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    assert!((best.0 - 1.5 * std::f64::consts::PI).abs() < 0.01);
    assert!((best.1 - 8.0 / 9.0).abs() < 1e-4);
}

#[test]
fn svg_rendering_is_optional() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let files = run_args(&["snake-walk", "scatter", "--grid", "512", "--out-dir", out]);
    assert!(!files.iter().any(|f| f.extension().is_some_and(|e| e == "svg")));
    let files = run_args(&[
        "snake-walk", "scatter", "--grid", "512", "--svg", "--out-dir", out,
    ]);
    assert!(files.iter().any(|f| f.ends_with("scatter.svg")));
    let svg = read(&dir.path().join("scatter.svg"));
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("polyline"));
}

#[test]
fn invalid_parameters_surface_as_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cli = Cli::parse_from([
        "snake-walk",
        "glued-run",
        "--N", "2", "--M", "4", "--n", "3", // n < 2N+1
        "--out-dir", dir.path().to_str().unwrap(),
    ]);
    let err = cli::run(cli).unwrap_err();
    assert!(err.to_string().contains("2N+1"));
}
