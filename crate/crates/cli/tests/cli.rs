//! End-to-end tests of the `clusterchain` binary: output formats, config
//! precedence, exit codes, checkpointing, and byte-level reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_clusterchain"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("output is UTF-8")
}

fn exit_code(args: &[&str]) -> i32 {
    run(args).status.code().expect("no signal")
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).expect("output file exists")
}

/// Extracts the data hash from a CSV header.
fn csv_hash(text: &str) -> &str {
    text.lines()
        .find_map(|l| l.strip_prefix("# sha256: "))
        .expect("CSV carries a content hash")
}

#[test]
fn deterministic_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    let args = |out: &Path| {
        vec![
            "disentangle".to_string(),
            "--j".into(),
            "0,0.5".into(),
            "--seed".into(),
            "11".into(),
            "--deterministic".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    for out in [&out1, &out2] {
        let argv = args(out);
        let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
        run_ok(&argv);
    }
    assert_eq!(read(&out1), read(&out2), "identical config + seed must reproduce bytes");
}

#[test]
fn csv_and_json_share_the_data_hash() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("r.csv");
    let json_path = dir.path().join("r.json");
    run_ok(&[
        "disentangle",
        "--j",
        "0.3",
        "--seed",
        "5",
        "--format",
        "csv",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    run_ok(&[
        "disentangle",
        "--j",
        "0.3",
        "--seed",
        "5",
        "--format",
        "json",
        "--out",
        json_path.to_str().unwrap(),
    ]);
    let csv = String::from_utf8(read(&csv_path)).unwrap();
    let json: serde_json::Value =
        serde_json::from_slice(&read(&json_path)).expect("valid JSON envelope");
    let json_hash = json["meta"]["sha256"].as_str().unwrap();
    assert_eq!(csv_hash(&csv), json_hash, "the hash identifies the data, not the envelope");
    assert_eq!(json_hash.len(), 64);
}

#[test]
fn json_envelope_is_self_describing() {
    let stdout = run_ok(&["disentangle", "--j", "0.2", "--format", "json"]);
    let value: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(value["meta"]["tool"], "clusterchain");
    assert_eq!(value["meta"]["command"], "disentangle");
    assert_eq!(value["meta"]["seed"], 7, "default seed");
    let columns = value["columns"].as_array().unwrap();
    let rows = value["rows"].as_array().unwrap();
    assert!(!columns.is_empty());
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].as_array().unwrap().len(), columns.len());
    // The config echo records the resolved inputs.
    assert_eq!(value["meta"]["config"]["c"], 0.8);
}

#[test]
fn csv_header_carries_run_metadata() {
    let stdout = run_ok(&["exact", "--ns", "8", "--j", "0", "--cross-check"]);
    assert!(stdout.starts_with("# clusterchain "));
    assert!(stdout.contains("# command: exact\n"));
    assert!(stdout.contains("# seed: 7\n"));
    let config_line = stdout
        .lines()
        .find_map(|l| l.strip_prefix("# config: "))
        .expect("config echo present");
    let config: serde_json::Value = serde_json::from_str(config_line).unwrap();
    assert_eq!(config["ns"][0], 8);
    assert_eq!(config["cross_check"], true);
    // Cluster point: all three strings are exactly 1 and the oracle agrees.
    let data: Vec<&str> = stdout.lines().skip_while(|l| l.starts_with('#')).collect();
    assert_eq!(data[0], "n,j,bx,energy,gap,zx,xz,yy,oracle_zx,oracle_xz,oracle_yy,cross_check_delta");
    let fields: Vec<&str> = data[1].split(',').collect();
    let energy: f64 = fields[3].parse().unwrap();
    let yy: f64 = fields[7].parse().unwrap();
    let delta: f64 = fields[11].parse().unwrap();
    assert!((energy + 8.0).abs() < 1e-8);
    assert!((yy - 1.0).abs() < 1e-8);
    assert!(delta < 1e-8);
}

#[test]
fn config_file_provides_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 21\n[exact]\nns = [8]\nj = [0.0]\ncross_check = true\n",
    )
    .unwrap();
    let from_file = run_ok(&["--config", cfg.to_str().unwrap(), "exact"]);
    assert!(from_file.contains("# seed: 21\n"));
    assert!(from_file.contains("\n8,0,0,"), "rows use the file's n");
    // A flag beats the file.
    let overridden = run_ok(&["--config", cfg.to_str().unwrap(), "--seed", "3", "exact", "--ns", "6"]);
    assert!(overridden.contains("# seed: 3\n"));
    assert!(overridden.contains("\n6,0,0,"), "rows use the flag's n");
}

#[test]
fn json_config_files_work_too() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"exact": {"ns": [6], "j": [0.0]}}"#).unwrap();
    let stdout = run_ok(&["--config", cfg.to_str().unwrap(), "exact"]);
    assert!(stdout.contains("\n6,0,0,"));
}

#[test]
fn config_problems_exit_with_code_2() {
    // Odd ring size.
    assert_eq!(exit_code(&["exact", "--ns", "7", "--j", "0"]), 2);
    // Too-coarse scan grid.
    assert_eq!(exit_code(&["scan", "--j", "0.5", "--resolution", "0.02"]), 2);
    // POVM scale out of range.
    assert_eq!(exit_code(&["disentangle", "--j", "0", "--c", "1.5"]), 2);
    // Bond dimension the chain cannot host.
    assert_eq!(exit_code(&["vmps", "--n", "8", "--bond-dim", "64", "--bx", "0"]), 2);
    // Malformed config file.
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "this is not = [valid").unwrap();
    assert_eq!(exit_code(&["--config", bad.to_str().unwrap(), "exact"]), 2);
    // Unknown keys are rejected rather than silently ignored.
    let typo = dir.path().join("typo.toml");
    std::fs::write(&typo, "[exact]\nnz = [8]\n").unwrap();
    assert_eq!(exit_code(&["--config", typo.to_str().unwrap(), "exact"]), 2);
    // Unknown flags are a usage error (clap exits 2 as well).
    assert_eq!(exit_code(&["exact", "--no-such-flag"]), 2);
}

#[test]
fn master_seed_selects_the_sample_stream() {
    let common = [
        "locent", "--ns", "8", "--j", "0.2", "--bond-dim", "4", "--restarts", "2", "--sweeps",
        "2", "--samples", "40",
    ];
    let a = run_ok(&[&common[..], &["--seed", "1"]].concat());
    let b = run_ok(&[&common[..], &["--seed", "1"]].concat());
    let c = run_ok(&[&common[..], &["--seed", "2"]].concat());
    let value = |text: &str| {
        text.lines()
            .last()
            .unwrap()
            .split(',')
            .nth(10)
            .unwrap()
            .parse::<f64>()
            .unwrap()
    };
    assert_eq!(value(&a), value(&b), "same seed, same estimate");
    assert_ne!(value(&a), value(&c), "different seed, different samples");
}

#[test]
fn thread_count_does_not_change_the_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("t1.csv");
    let out2 = dir.path().join("t2.csv");
    let base = [
        "vmps", "--n", "8", "--bond-dim", "4", "--restarts", "4", "--sweeps", "2", "--bx",
        "0.4", "--seed", "9",
    ];
    run_ok(&[&base[..], &["--threads", "1", "--out", out1.to_str().unwrap()]].concat());
    run_ok(&[&base[..], &["--threads", "2", "--out", out2.to_str().unwrap()]].concat());
    assert_eq!(read(&out1), read(&out2), "restart streams are scheduling-independent");
}

#[test]
fn checkpoints_resume_without_recomputing() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("ckpt");
    let out1 = dir.path().join("first.csv");
    let out2 = dir.path().join("second.csv");
    let base = [
        "locent",
        "--ns",
        "8",
        "--j",
        "0,0.4",
        "--bond-dim",
        "4",
        "--restarts",
        "2",
        "--sweeps",
        "2",
        "--exhaustive",
        "--checkpoint",
        ckpt.to_str().unwrap(),
    ];
    run_ok(&[&base[..], &["--out", out1.to_str().unwrap()]].concat());
    let files: Vec<_> = std::fs::read_dir(&ckpt).unwrap().collect();
    assert_eq!(files.len(), 2, "one checkpoint per grid point");
    run_ok(&[&base[..], &["--out", out2.to_str().unwrap()]].concat());
    assert_eq!(read(&out1), read(&out2), "resumed run reproduces the file");
}
