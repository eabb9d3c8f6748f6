use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use enaqt::harness::output::read_csv;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn enaqt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_enaqt")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn run_in(dir: &Path, sub: &str, config: &str, extra: &[&str]) -> Output {
    let config = scenario(config);
    let mut args = vec![sub, "--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    enaqt(&args)
}

#[test]
fn dynamics_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "dynamics", "oracle.toml", &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let (header, rows) = read_csv(&dir.path().join("dynamics.csv")).unwrap();
    assert_eq!(header, ["s", "t", "p_target", "stderr", "p_oracle"]);
    assert_eq!(rows.len(), 4001);
    assert_eq!(rows[0][2], "0.0");
    assert!(rows.iter().all(|r| r[3].is_empty()), "deterministic runs carry no stderr");

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("dynamics.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "dynamics");
    let listed = manifest["outputs"][0]["sha256"].as_str().unwrap().to_string();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with(&listed), "stdout lists the checksum: {stdout}");
}

#[test]
fn stochastic_runs_are_byte_identical_for_a_fixed_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let flags = ["--runs", "40", "-T", "4", "--seed", "11"];
    assert_eq!(code(&run_in(a.path(), "dynamics", "ring_noise.toml", &flags)), 0);
    assert_eq!(code(&run_in(b.path(), "dynamics", "ring_noise.toml", &flags)), 0);
    let first = fs::read(a.path().join("dynamics.csv")).unwrap();
    assert_eq!(first, fs::read(b.path().join("dynamics.csv")).unwrap());

    let c = tempfile::tempdir().unwrap();
    let other = ["--runs", "40", "-T", "4", "--seed", "12"];
    assert_eq!(code(&run_in(c.path(), "dynamics", "ring_noise.toml", &other)), 0);
    assert_ne!(first, fs::read(c.path().join("dynamics.csv")).unwrap());
}

#[test]
fn trajectories_then_replay_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let flags = ["--runs", "20", "-T", "2"];
    assert_eq!(code(&run_in(dir.path(), "trajectories", "replay.toml", &flags)), 0);
    assert_eq!(code(&run_in(dir.path(), "replay", "replay.toml", &flags)), 0);
    let live = fs::read(dir.path().join("trajectories.csv")).unwrap();
    assert_eq!(live, fs::read(dir.path().join("replay.csv")).unwrap());
    assert!(dir.path().join("trajectories.manifest.json").exists());
    assert!(dir.path().join("replay.manifest.json").exists());

    let (_, bits) = read_csv(&dir.path().join("bits.csv")).unwrap();
    assert_eq!(bits.len(), 20);
}

#[test]
fn replay_against_a_different_grid_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(dir.path(), "trajectories", "replay.toml", &["--runs", "3", "-T", "1"])), 0);
    let out = run_in(dir.path(), "replay", "replay.toml", &["--runs", "3", "-T", "2"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bits.csv"));
}

#[test]
fn coarse_oracle_step_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "dynamics", "oracle.toml", &["--dt", "0.5"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("reduce dt"));
}

#[test]
fn configuration_problems_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&str, &[&str], &str); 5] = [
        ("oracle.toml", &["--dt", "-1"], "grid.dt"),
        ("oracle.toml", &["--algorithm", "teleport"], "algorithm"),
        ("oracle.toml", &["--mapping", "sideways"], "mapping"),
        ("ring_collision.toml", &["--algorithm", "collision", "--mapping", "algorithmic"], "mapping"),
        ("missing.toml", &[], ""),
    ];
    for (config, extra, field) in cases {
        let out = run_in(dir.path(), "dynamics", config, extra);
        assert_eq!(code(&out), 2, "{config} {extra:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(field), "{config} {extra:?}");
    }
    assert_eq!(code(&enaqt(&["dynamics"])), 2, "missing --config");
    assert_eq!(code(&enaqt(&["teleport"])), 2, "unknown subcommand");
}

#[test]
fn sweep_and_scaling_tables() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(dir.path(), "sweep", "oracle.toml", &["-T", "10"])), 0);
    let (header, rows) = read_csv(&dir.path().join("sweep.csv")).unwrap();
    assert_eq!(header[..3], ["gamma", "eta_algo", "eta_oracle"]);
    assert_eq!(rows.len(), 16);
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), 1e-3);
    assert_eq!(rows[15][0].parse::<f64>().unwrap(), 1e2);

    assert_eq!(code(&run_in(dir.path(), "scaling", "ring_collision.toml", &[])), 0);
    let (_, rows) = read_csv(&dir.path().join("scaling.csv")).unwrap();
    assert_eq!(rows.len(), 9);
}

#[test]
fn convergence_table_halves_the_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "converge", "ring_collision.toml", &["--dt", "0.004"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("convergence.csv")).unwrap();
    let dt = header.iter().position(|h| h == "dt").unwrap();
    let steps: Vec<f64> = rows.iter().map(|r| r[dt].parse().unwrap()).collect();
    assert_eq!(steps, [0.004, 0.002, 0.001]);
}
