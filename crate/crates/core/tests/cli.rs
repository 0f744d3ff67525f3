use std::path::Path;
use std::process::{Command, Output};

fn wsnsim(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wsnsim"));
    cmd.args(args).env_remove("WSNSIM_OUT");
    if let Some(out) = out {
        cmd.arg("--out").arg(out);
    }
    cmd.output().unwrap()
}

fn file_count(dir: &Path) -> usize {
    std::fs::read_dir(dir).map(|d| d.count()).unwrap_or(0)
}

#[test]
fn single_cell_writes_two_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = wsnsim(
        &[
            "--protocol",
            "tdeec",
            "--scenario",
            "s2",
            "--seed",
            "4",
            "--max-rounds",
            "500",
        ],
        Some(dir.path()),
    );
    assert!(out.status.success());
    assert_eq!(file_count(dir.path()), 2);
    assert!(dir.path().join("s2_tdeec_seed4.csv").exists());
    assert!(dir.path().join("summary.csv").exists());
    assert!(String::from_utf8_lossy(&out.stdout).contains("tdeec"));
}

#[test]
fn full_s1_sweep_writes_121_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = wsnsim(
        &[
            "--protocol",
            "all",
            "--scenario",
            "s1",
            "--seeds",
            "30",
            "--max-rounds",
            "300",
            "--jobs",
            "4",
        ],
        Some(dir.path()),
    );
    assert!(out.status.success());
    assert_eq!(file_count(dir.path()), 121);
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 121);
}

#[test]
fn dry_run_simulates_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = wsnsim(
        &["--scenario", "s1,s3", "--seeds", "3", "--dry-run"],
        Some(dir.path()),
    );
    assert!(out.status.success());
    assert_eq!(file_count(dir.path()), 0);
    assert!(!String::from_utf8_lossy(&out.stdout).is_empty());
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["--p-opt", "1.5"][..],
        &["--protocol", "leach"][..],
        &["--config", "/nonexistent/wsnsim.toml"][..],
    ] {
        let out = wsnsim(args, Some(dir.path()));
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(file_count(dir.path()), 0);
}

#[test]
fn config_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    std::fs::write(
        &config,
        "n_nodes = 10\nmax_rounds = 50\nheterogeneity = \"multi_level\"\na_max = 1.0\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = wsnsim(
        &["--config", config.to_str().unwrap(), "--protocol", "deec"],
        Some(&out_dir),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out_dir.join("small_deec_seed0.csv").exists());
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_wsnsim"))
        .args(["--protocol", "deec", "--max-rounds", "20"])
        .env("WSNSIM_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(file_count(dir.path()), 2);
}
