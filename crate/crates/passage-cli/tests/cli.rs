//! End-to-end tests of the binary: artifact determinism, exit codes, and
//! manifest round-tripping.

use std::path::Path;
use std::process::Command;

use passage_cli::ExperimentConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_passage"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const LN_CONFIG: &str = r#"
seed = 42
threads = 2

[law]
family = "lognormal_a_const_b"
log_a_mean = -0.25
log_a_var = 1.0
b = 1.0

[run]
u = [100.0]
tau = [2.0, 4.0, 8.0]
n_samples = 20000
n_chunks = 16
"#;

#[test]
fn analyze_reproduces_the_rate_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.toml");
    write(&config, LN_CONFIG);
    let out = bin()
        .args(["analyze", "--config"])
        .arg(&config)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("analyze.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "tau,alpha,Lambda_alpha,mu,sigma2,I_tau,regime");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].ends_with("small_time"));
    assert!(lines[2].ends_with("critical"));
    assert!(lines[3].ends_with("large_time"));
    // I(2) = 0.5625 in the sixth column
    let i_tau: f64 = lines[1].split(',').nth(5).unwrap().parse().unwrap();
    assert!((i_tau - 0.5625).abs() < 1e-8);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert!((manifest["summary"]["xi"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    assert!((manifest["summary"]["rho"].as_f64().unwrap() - 4.0).abs() < 1e-8);
}

#[test]
fn reruns_are_byte_identical() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let config = dir_a.path().join("cfg.toml");
    write(&config, LN_CONFIG);
    for dir in [dir_a.path(), dir_b.path()] {
        let out = bin()
            .args(["estimate", "--config"])
            .arg(&config)
            .arg("--out-dir")
            .arg(dir)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let a = std::fs::read(dir_a.path().join("estimate.csv")).unwrap();
    let b = std::fs::read(dir_b.path().join("estimate.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn thread_count_does_not_change_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.toml");
    write(&config, LN_CONFIG);
    let mut bodies = Vec::new();
    for threads in ["1", "4"] {
        let sub = dir.path().join(threads);
        let out = bin()
            .args(["estimate", "--config"])
            .arg(&config)
            .args(["--threads", threads])
            .arg("--out-dir")
            .arg(&sub)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        bodies.push(std::fs::read(sub.join("estimate.csv")).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn invalid_level_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.toml");
    write(
        &config,
        LN_CONFIG.replace("u = [100.0]", "u = [0.5]").as_str(),
    );
    let out = bin()
        .args(["estimate", "--config"])
        .arg(&config)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("u must exceed 1"), "{stderr}");
}

#[test]
fn unknown_keys_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.toml");
    write(&config, &format!("{LN_CONFIG}\n[extra]\nfoo = 1\n"));
    let out = bin()
        .args(["analyze", "--config"])
        .arg(&config)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // a field from another family is also rejected
    let config2 = dir.path().join("cfg2.toml");
    write(&config2, &LN_CONFIG.replace("b = 1.0", "b = 1.0\na1 = 2.0"));
    let out = bin()
        .args(["analyze", "--config"])
        .arg(&config2)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("a1"));
}

#[test]
fn module_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.toml");
    write(
        &config,
        &LN_CONFIG.replace("n_chunks = 16", "n_chunks = 16\nmethod = \"enumeration\""),
    );
    let out = bin()
        .args(["estimate", "--config"])
        .arg(&config)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn long_paths_emit_endpoint_rows_only() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.toml");
    write(
        &config,
        r#"
seed = 5
[law]
family = "lognormal_a_const_b"
log_a_mean = -0.25
log_a_var = 1.0
b = 1.0
[run]
n_paths = 3
path_steps = 20000
"#,
    );
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&config)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("simulate.csv")).unwrap();
    // header + one endpoint row per path
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().nth(1).unwrap().starts_with("0,20000,"));
}

#[test]
fn manifest_round_trips_the_effective_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.toml");
    write(&config, LN_CONFIG);
    let out = bin()
        .args(["analyze", "--config"])
        .arg(&config)
        .args(["--seed", "777"])
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"].as_u64(), Some(777));
    let effective: ExperimentConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
    assert_eq!(effective.seed, 777);
    let mut expected = ExperimentConfig::parse_toml(LN_CONFIG).unwrap();
    expected.seed = 777;
    assert_eq!(effective, expected);
}

#[test]
fn env_var_sets_threads_and_flag_wins() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.toml");
    write(&config, LN_CONFIG);
    let out = bin()
        .args(["analyze", "--config"])
        .arg(&config)
        .arg("--out-dir")
        .arg(dir.path())
        .env("PASSAGE_THREADS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["threads"].as_u64(), Some(3));

    let out = bin()
        .args(["analyze", "--config"])
        .arg(&config)
        .args(["--threads", "2"])
        .arg("--out-dir")
        .arg(dir.path())
        .env("PASSAGE_THREADS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["threads"].as_u64(), Some(2));
}
