//! End-to-end tests of the command-line interface: wire formats, exit
//! codes, witness sidecars, and output determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_microtherm"))
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    binary().args(args).output().unwrap()
}

const QUBIT_PURE: &str = r#"{
  "model": {"kind": "quantum", "d": 2},
  "payload": {"re": [[1.0, 0.0], [0.0, 0.0]], "im": [[0.0, 0.0], [0.0, 0.0]]}
}"#;

const QUBIT_CHI: &str = r#"{
  "model": {"kind": "quantum", "d": 2},
  "payload": {"re": [[0.5, 0.0], [0.0, 0.5]], "im": [[0.0, 0.0], [0.0, 0.0]]}
}"#;

const DQT_RHO: &str = r#"{
  "model": {"kind": "doubled_quantum", "sector_dim": 2},
  "payload": {
    "block0": {"re": [[0.5, 0.0], [0.0, 0.5]], "im": [[0.0, 0.0], [0.0, 0.0]]},
    "block1": {"re": [[0.0, 0.0], [0.0, 0.0]], "im": [[0.0, 0.0], [0.0, 0.0]]}
  }
}"#;

const DQT_SIGMA: &str = r#"{
  "model": {"kind": "doubled_quantum", "sector_dim": 2},
  "payload": {
    "block0": {"re": [[0.5, 0.0], [0.0, 0.0]], "im": [[0.0, 0.0], [0.0, 0.0]]},
    "block1": {"re": [[0.5, 0.0], [0.0, 0.0]], "im": [[0.0, 0.0], [0.0, 0.0]]}
  }
}"#;

const BELL: &str = r#"{
  "dims": [2, 2],
  "re": [0.7071067811865476, 0.0, 0.0, 0.7071067811865476],
  "im": [0.0, 0.0, 0.0, 0.0]
}"#;

const PRODUCT: &str = r#"{
  "dims": [2, 2],
  "re": [1.0, 0.0, 0.0, 0.0],
  "im": [0.0, 0.0, 0.0, 0.0]
}"#;

#[test]
fn convert_pure_to_chi_is_yes_with_witness_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let rho = write(dir.path(), "rho.json", QUBIT_PURE);
    let sigma = write(dir.path(), "sigma.json", QUBIT_CHI);
    let out = run(&[
        "convert",
        "--relation",
        "unital",
        rho.to_str().unwrap(),
        sigma.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["answer"], "yes");
    let witness_path = report["witness"].as_str().unwrap();
    let witness: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(witness_path).unwrap()).unwrap();
    assert!(witness.get("repr").is_some());
}

#[test]
fn convert_chi_to_pure_is_no() {
    let dir = tempfile::tempdir().unwrap();
    let rho = write(dir.path(), "rho.json", QUBIT_CHI);
    let sigma = write(dir.path(), "sigma.json", QUBIT_PURE);
    let out = run(&[
        "convert",
        "--relation",
        "unital",
        rho.to_str().unwrap(),
        sigma.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["answer"], "no");
    assert!(report["obstruction"].as_str().unwrap().contains("prefix 1"));
}

#[test]
fn convert_dqt_counterexample_pair_is_no_by_sector_mass() {
    let dir = tempfile::tempdir().unwrap();
    let rho = write(dir.path(), "rho.json", DQT_RHO);
    let sigma = write(dir.path(), "sigma.json", DQT_SIGMA);
    let out = run(&[
        "convert",
        "--relation",
        "rare",
        rho.to_str().unwrap(),
        sigma.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["obstruction"].as_str().unwrap().contains("sector mass"));
}

#[test]
fn convert_noisy_dqt_counterexample_is_unknown() {
    let dir = tempfile::tempdir().unwrap();
    let rho = write(dir.path(), "rho.json", DQT_RHO);
    let sigma = write(dir.path(), "sigma.json", DQT_SIGMA);
    let out = run(&[
        "convert",
        "--relation",
        "noisy",
        rho.to_str().unwrap(),
        sigma.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn convert_rejects_mismatched_models() {
    let dir = tempfile::tempdir().unwrap();
    let rho = write(dir.path(), "rho.json", QUBIT_PURE);
    let sigma = write(dir.path(), "sigma.json", DQT_SIGMA);
    let out = run(&[
        "convert",
        "--relation",
        "unital",
        rho.to_str().unwrap(),
        sigma.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn convert_rejects_garbage_input() {
    let dir = tempfile::tempdir().unwrap();
    let rho = write(dir.path(), "rho.json", "{not json");
    let sigma = write(dir.path(), "sigma.json", QUBIT_CHI);
    let out = run(&[
        "convert",
        "--relation",
        "unital",
        rho.to_str().unwrap(),
        sigma.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn counterexamples_all_reproduce() {
    let out = run(&["counterexamples", "--which", "all"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["dqt"]["reproduced"], true);
    assert_eq!(report["failures"].as_array().unwrap().len(), 0);
    // square bit: permutability passes, strong symmetry fails
    let checks = report["square_bit"]["checks"].as_array().unwrap();
    assert_eq!(checks[0]["status"], "pass");
    assert_eq!(checks[1]["status"], "fail");
}

#[test]
fn counterexamples_output_is_deterministic() {
    let a = run(&["counterexamples", "--which", "all", "--seed", "5"]);
    let b = run(&["counterexamples", "--which", "all", "--seed", "5"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn duality_bell_to_product_and_back() {
    let dir = tempfile::tempdir().unwrap();
    let bell = write(dir.path(), "bell.json", BELL);
    let product = write(dir.path(), "product.json", PRODUCT);
    let forward = run(&["duality", bell.to_str().unwrap(), product.to_str().unwrap()]);
    assert_eq!(forward.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&forward.stdout).unwrap();
    assert_eq!(report["convertible"], true);
    assert_eq!(report["clause_schmidt_majorisation"], true);
    assert_eq!(report["clause_a_marginal_rare"], true);
    assert_eq!(report["clause_b_marginal_rare"], true);

    let backward = run(&["duality", product.to_str().unwrap(), bell.to_str().unwrap()]);
    assert_eq!(backward.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&backward.stdout).unwrap();
    assert_eq!(report["convertible"], false);
    assert_eq!(report["clause_b_marginal_rare"], false);
}

#[test]
fn duality_rejects_denormalized_input() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"dims": [2, 2], "re": [1.0, 0.0, 0.0, 1.0], "im": [0.0, 0.0, 0.0, 0.0]}"#,
    );
    let product = write(dir.path(), "product.json", PRODUCT);
    let out = run(&["duality", bad.to_str().unwrap(), product.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn microcanonical_quantum_prints_maximally_mixed() {
    let out = run(&["microcanonical", "--model", "quantum", "--d", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let state: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(state["model"]["kind"], "quantum");
    let re = state["payload"]["re"].as_array().unwrap();
    assert!((re[0][0].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(re[0][1].as_f64().unwrap(), 0.0);
}

#[test]
fn microcanonical_classical_is_uniform() {
    let out = run(&["microcanonical", "--model", "classical", "--d", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let state: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let probs = state["payload"]["probs"].as_array().unwrap();
    assert_eq!(probs.len(), 4);
    assert!((probs[0].as_f64().unwrap() - 0.25).abs() < 1e-15);
}

#[test]
fn microcanonical_half_disk_reports_nonuniqueness() {
    let out = run(&["microcanonical", "--model", "half-disk"]);
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["unique"], false);
    assert_eq!(report["witness_distributions"].as_array().unwrap().len(), 2);
}

#[test]
fn microcanonical_missing_dimension_is_unsupported() {
    let out = run(&["microcanonical", "--model", "quantum"]);
    assert_eq!(out.status.code(), Some(65));
}

#[test]
fn state_round_trip_through_the_wire_format() {
    // chi for the doubled model survives a parse/serialize cycle bit-exactly
    let out = run(&["microcanonical", "--model", "dqt", "--sector-dim", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let first: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let second: serde_json::Value =
        serde_json::from_str(&serde_json::to_string(&first).unwrap()).unwrap();
    assert_eq!(first, second);
    assert_eq!(first["model"]["kind"], "doubled_quantum");
    let b0 = first["payload"]["block0"]["re"].as_array().unwrap();
    assert!((b0[0][0].as_f64().unwrap() - 0.25).abs() < 1e-15);
}

#[test]
fn convert_rejects_denormalized_states() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"model": {"kind": "quantum", "d": 2},
            "payload": {"re": [[1.0, 0.0], [0.0, 1.0]], "im": [[0.0, 0.0], [0.0, 0.0]]}}"#,
    );
    let sigma = write(dir.path(), "sigma.json", QUBIT_CHI);
    let out = run(&[
        "convert",
        "--relation",
        "unital",
        bad.to_str().unwrap(),
        sigma.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid state"));
}

#[test]
fn witness_sidecar_round_trips_and_maps_rho_to_sigma() {
    use microtherm_core::channels::{apply_channel, Channel};
    use microtherm_core::models::{State, StatePayload, TheoryModel};
    use microtherm_core::numerics::ComplexMatrix;

    let dir = tempfile::tempdir().unwrap();
    let rho = write(dir.path(), "rho.json", QUBIT_PURE);
    let sigma = write(dir.path(), "sigma.json", QUBIT_CHI);
    let witness_path = dir.path().join("witness.json");
    let out = run(&[
        "convert",
        "--relation",
        "rare",
        rho.to_str().unwrap(),
        sigma.to_str().unwrap(),
        "--witness-out",
        witness_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let witness: Channel =
        serde_json::from_str(&std::fs::read_to_string(&witness_path).unwrap()).unwrap();
    let rho_state = State {
        model: TheoryModel::quantum(2),
        payload: StatePayload::Density(ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0])),
    };
    let sigma_state = State {
        model: TheoryModel::quantum(2),
        payload: StatePayload::Density(ComplexMatrix::from_real(2, 2, &[0.5, 0.0, 0.0, 0.5])),
    };
    let image = apply_channel(&witness, &rho_state).unwrap();
    assert!(image.max_distance(&sigma_state).unwrap() <= 1e-9);
}

#[test]
fn microcanonical_square_bit_is_the_centre() {
    let out = run(&["microcanonical", "--model", "square-bit"]);
    assert_eq!(out.status.code(), Some(0));
    let state: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(state["payload"]["xy"][0].as_f64().unwrap(), 0.0);
    assert_eq!(state["payload"]["xy"][1].as_f64().unwrap(), 0.0);
}
