use std::path::Path;
use std::process::Command;

use hrmt::ensemble::{assemble, EnsembleConfig};
use hrmt::harness::io::{load_hmat, save_hmat, Table};
use hrmt::harness::{run, run_experiment, validate_config, RunManifest};
use hrmt::{Error, RngStream};

fn hrmt() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hrmt"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

const POISSON: &str = r#"{"experiment": "PoissonTest", "realizations": 12, "master_seed": 5,
    "ensemble": {"n": 6, "c": 1.0, "model": {"kind": "Ultrametric"}}}"#;

#[test]
fn hmat_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let h = assemble(&EnsembleConfig::ultrametric(4, 0.0), RngStream::new(1, 2)).unwrap();
    let path = dir.path().join("h.hmat");
    save_hmat(&path, &h).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert!(bytes.starts_with(b"HMAT1\n"));
    assert_eq!(load_hmat(&path).unwrap(), h);
}

#[test]
fn report_rows_equal_realizations_plus_summary() {
    let cfg = validate_config(POISSON).unwrap();
    let out = run_experiment(&cfg).unwrap();
    let table = Table::from_reader(out.file("poisson_test.csv").unwrap()).unwrap();
    assert_eq!(table.rows.len(), 13);
    assert_eq!(table.rows.last().unwrap()[0], "mean");
    for row in &table.rows[..12] {
        for cell in &row[1..] {
            // 17 significant digits
            let mantissa = cell.trim_start_matches('-').split('e').next().unwrap();
            assert_eq!(mantissa.replace('.', "").len(), 17, "{cell}");
        }
    }
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let mut cfg = validate_config(POISSON).unwrap();
    cfg.workers = 1;
    let a = run_experiment(&cfg).unwrap();
    cfg.workers = 8;
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.files, b.files);
}

#[test]
fn manifest_checksums_validate() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = validate_config(POISSON).unwrap();
    cfg.output_dir = dir.path().to_path_buf();
    let manifest = run(&cfg).unwrap();
    let loaded = RunManifest::load(dir.path()).unwrap();
    assert_eq!(loaded.outputs, manifest.outputs);
    assert_eq!(loaded.seeds.streams.len(), 12);
    assert!(loaded.verify(dir.path()).unwrap().is_empty());
    std::fs::write(dir.path().join("poisson_test.csv"), "tampered").unwrap();
    assert_eq!(loaded.verify(dir.path()).unwrap(), vec!["poisson_test.csv".to_owned()]);
}

#[test]
fn validate_reports_every_problem() {
    let err = validate_config(
        r#"{"experiment": "Localization", "realizations": 0,
            "ensemble": {"n": 4, "c": 1.0, "model": {"kind": "Truncated", "m": 9}},
            "localization": {"site": 99}}"#,
    )
    .unwrap_err();
    let Error::Config(list) = err else { panic!("{err}") };
    assert!(list.iter().any(|m| m.contains("m must")), "{list:?}");
    assert!(list.iter().any(|m| m.starts_with("realizations")), "{list:?}");
    assert!(list.iter().any(|m| m.starts_with("localization.site")), "{list:?}");
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), r#"{"experiment": "Sample", "realizations": 1, "ensemble": {"n": 2, "c": 1.0, "model": {"kind": "Truncated", "m": 3}}}"#);
    let out = hrmt().args(["validate", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("m must"));

    std::fs::write(&bad, "{\n \"experiment\": \n").unwrap();
    let out = hrmt().args(["validate", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    let missing = dir.path().join("absent.json");
    let out = hrmt().args(["validate", "--config"]).arg(&missing).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn cli_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"experiment": "IdentityCheck", "realizations": 10, "master_seed": 1,
            "ensemble": {"n": 5, "c": 0.0, "model": {"kind": "Ultrametric"}}}"#,
    );
    let mut outs = Vec::new();
    for workers in ["1", "3"] {
        let out_dir = dir.path().join(format!("w{workers}"));
        let run = hrmt()
            .args(["identity-check", "--config"])
            .arg(&cfg)
            .args(["--workers", workers, "--seed", "17", "--out"])
            .arg(&out_dir)
            .output()
            .unwrap();
        assert_eq!(run.status.code(), Some(0));
        outs.push(std::fs::read(out_dir.join("identity_check.csv")).unwrap());
        let verify = hrmt().args(["verify", "--dir"]).arg(&out_dir).output().unwrap();
        assert!(verify.status.success());
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn cli_oracle_prints_json() {
    let out = hrmt().args(["oracle", "distance", "--n", "3", "--x", "5", "--y", "6"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["values"][0], 1.0);
}
