//! Acceptance criterion 11: every CLI command, run twice with identical
//! config and seed, produces byte-identical artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run_once(command: &str, config: &str, out: &Path, seed: u64) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_cocycle"))
        .arg("--config")
        .arg(config_path(config))
        .arg("--out")
        .arg(out)
        .arg("--seed")
        .arg(seed.to_string())
        .arg(command)
        .status()
        .expect("binary runs");
    status.code().expect("exit code")
}

fn artifact_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).expect("read artifacts") {
        let entry = entry.unwrap();
        let name = entry.file_name().to_string_lossy().into_owned();
        out.insert(name, fs::read(entry.path()).unwrap());
    }
    out
}

#[test]
fn criterion_11_cli_determinism() {
    let cases: &[(&str, &str, i32)] = &[
        ("lyapunov", "rotation.cfg", 0),
        ("certify", "bunched_w1.cfg", 0),
        ("certify", "diag2half.cfg", 1),
        ("holonomy", "bunched_w1.cfg", 0),
        ("extend", "rotation.cfg", 0),
        ("verify", "coboundary.cfg", 0),
        ("verify", "conjugated_rotation.cfg", 0),
        ("construct", "rotation.cfg", 0),
        ("construct", "diag2half.cfg", 1),
        ("shadow", "diag2half.cfg", 0),
        ("irreducible", "diag2half.cfg", 0),
        ("quasiconformal", "conjugated_rotation.cfg", 0),
    ];
    for (command, config, expected_exit) in cases {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let code_a = run_once(command, config, dir_a.path(), 7);
        let code_b = run_once(command, config, dir_b.path(), 7);
        assert_eq!(code_a, *expected_exit, "{command} on {config}: unexpected exit code");
        assert_eq!(code_a, code_b, "{command} on {config}: exit codes differ between runs");
        let bytes_a = artifact_bytes(dir_a.path());
        let bytes_b = artifact_bytes(dir_b.path());
        assert!(!bytes_a.is_empty(), "{command} on {config}: no artifacts written");
        assert_eq!(
            bytes_a.keys().collect::<Vec<_>>(),
            bytes_b.keys().collect::<Vec<_>>(),
            "{command} on {config}: artifact sets differ"
        );
        for (name, a) in &bytes_a {
            assert_eq!(
                a, &bytes_b[name],
                "{command} on {config}: artifact {name} differs between runs"
            );
        }
    }
    println!(
        "[PASS] criterion 11: byte-identical artifacts for {} (command, config) pairs covering all 9 commands",
        cases.len()
    );
}

#[test]
fn construct_obstruction_record_is_emitted() {
    let dir = tempfile::tempdir().unwrap();
    let code = run_once("construct", "diag2half.cfg", dir.path(), 7);
    assert_eq!(code, 1);
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["results"]["outcome"], "obstruction");
    assert_eq!(report["results"]["obstruction"]["kind"], "positive_exponent");
    let lambda = report["results"]["obstruction"]["lambda_plus"].as_f64().unwrap();
    assert!((lambda - 2.0_f64.ln()).abs() < 1e-10);
}

#[test]
fn verify_reports_exact_coboundary() {
    let dir = tempfile::tempdir().unwrap();
    let code = run_once("verify", "coboundary.cfg", dir.path(), 7);
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    let residual = report["results"]["coboundary_residual"].as_f64().unwrap();
    assert!(residual <= 1e-12, "residual {residual}");
    assert_eq!(report["results"]["within_tolerance"], true);
}

#[test]
fn construct_emits_field_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let code = run_once("construct", "rotation.cfg", dir.path(), 7);
    assert_eq!(code, 0);
    let field = fs::read_to_string(dir.path().join("field.csv")).unwrap();
    let mut lines = field.lines();
    assert_eq!(lines.next().unwrap(), "word,f00,f01,f10,f11");
    // rotations preserve the Euclidean structure: the field is the identity
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 5);
        let values: Vec<f64> = cells[1..].iter().map(|c| c.parse().unwrap()).collect();
        assert!((values[0] - 1.0).abs() < 1e-9);
        assert!(values[1].abs() < 1e-9);
        assert!((values[3] - 1.0).abs() < 1e-9);
    }
}

#[test]
fn shadow_csv_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let code = run_once("shadow", "diag2half.cfg", dir.path(), 7);
    assert_eq!(code, 0);
    let csv = fs::read_to_string(dir.path().join("shadow.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "m,u_m,log_norm,chi_reference,in_d,block,theta");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3); // m_list = 2 4 8
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), 7);
        let log_norm: f64 = cells[2].parse().unwrap();
        let reference: f64 = cells[3].parse().unwrap();
        assert!(log_norm >= reference);
        assert_eq!(cells[4], "false"); // distortion log 4 never fits theta = 1/2
    }
}
