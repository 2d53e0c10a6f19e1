use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_complex::Complex64;
use schauder_core::op_algebra::ShiftForm;
use schauder_core::spectral::{
    adjoint_exclusion, block_norm_blowup, shift_eigen_exclude, BlockNormModel, ExclusionParams,
};
use serde::Deserialize;
use serde_json::Value;

fn specs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn schauder(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schauder")).args(args).output().expect("binary runs")
}

fn run_spec(name: &str, extra: &[&str]) -> (Output, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let spec = specs().join(name);
    let mut args = vec!["run", spec.to_str().unwrap(), "--out", dir.path().to_str().unwrap()];
    args.extend_from_slice(extra);
    (schauder(&args), dir)
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn stderr_block(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr carries a JSON error block")
}

#[test]
fn diagonal_harmonic_is_case_five() {
    let (out, dir) = run_spec("diagonal_harmonic.json", &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path());
    assert_eq!(r["results"]["case"], 5);
    let members = &r["results"]["report"]["members"];
    assert_eq!(members["shape"], "sequence-with-limit-zero");
    assert_eq!(members["includesZero"], false);
    assert_eq!(members["rule"]["rule"], "affine-reciprocal");
}

#[test]
fn identity_goes_through_finite_spectrum_path() {
    let (out, dir) = run_spec("identity_deflate.json", &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path());
    assert_eq!(r["results"]["deflation"]["lemmaPath"], "finite-spectrum");
    assert_eq!(r["results"]["spectrum"]["members"]["shape"], "empty-set");
}

#[derive(Debug, Deserialize)]
struct Row {
    lambda_re: f64,
    lambda_im: f64,
    side: String,
    block: Option<usize>,
    witness_index: u64,
    magnitude: f64,
    log_magnitude: f64,
    bound: f64,
}

fn rows(dir: &Path) -> Vec<Row> {
    csv::Reader::from_path(dir.join("certificates.csv"))
        .unwrap()
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn cibws_certificate_table_replays() {
    let (out, dir) = run_spec("cibws_deflate.json", &["--csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    assert_eq!(r["results"]["spectrum"]["members"]["shape"], "empty-set");
    assert_eq!(r["auditedWindows"][0]["passed"], true);
    let blocks: Vec<ShiftForm> = r["results"]["deflation"]["shiftCertificates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| serde_json::from_value(b["shift"].clone()).unwrap())
        .collect();
    let table = rows(dir.path());
    assert_eq!(table.len(), 2 * 128);
    let params = ExclusionParams::default();
    for row in &table {
        let shift = &blocks[row.block.unwrap()];
        let lambda = Complex64::new(row.lambda_re, row.lambda_im);
        let again = match row.side.as_str() {
            "direct" => shift_eigen_exclude(shift, lambda, &params).unwrap(),
            "adjoint" => adjoint_exclusion(shift, lambda, &params).unwrap(),
            other => panic!("side {other}"),
        };
        assert_eq!(again.witness_index, row.witness_index);
        assert!(close(again.log_magnitude, row.log_magnitude));
        assert!(row.magnitude > row.bound);
    }
    for f in ["matrix.csv", "eigenvalues.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn block_model_table_replays() {
    let (out, dir) = run_spec("block_model_deflate.json", &["--csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    let model: BlockNormModel = serde_json::from_value(r["results"]["deflation"]["blockModel"].clone()).unwrap();
    let table = rows(dir.path());
    assert!(!table.is_empty());
    for row in &table {
        assert!(row.block.is_none());
        let lambda = Complex64::new(row.lambda_re, row.lambda_im);
        let again = block_norm_blowup(&model, lambda, row.side == "adjoint", &ExclusionParams::default()).unwrap();
        assert_eq!(again.witness_index, row.witness_index);
        assert!(close(again.log_magnitude, row.log_magnitude));
    }
}

#[test]
fn results_are_deterministic() {
    for name in ["cibws_deflate.json", "discrete_doubles.json", "block_model_deflate.json"] {
        let (_, a) = run_spec(name, &[]);
        let (_, b) = run_spec(name, &[]);
        let ra = serde_json::to_string(&report(a.path())["results"]).unwrap();
        let rb = serde_json::to_string(&report(b.path())["results"]).unwrap();
        assert_eq!(ra, rb, "{name}");
    }
}

/// Results sections are pinned in `specs/golden`; set `SCHAUDER_BLESS=1`
/// to rewrite them after an intended change.
#[test]
fn golden_results() {
    let bless = std::env::var_os("SCHAUDER_BLESS").is_some();
    for name in [
        "diagonal_harmonic",
        "harmonic_deflate",
        "cibws_deflate",
        "identity_deflate",
        "discrete_doubles",
        "block_model_deflate",
    ] {
        let (out, dir) = run_spec(&format!("{name}.json"), &[]);
        assert_eq!(out.status.code(), Some(0), "{name}");
        let results = report(dir.path())["results"].clone();
        let golden = specs().join("golden").join(format!("{name}.results.json"));
        if bless {
            std::fs::create_dir_all(golden.parent().unwrap()).unwrap();
            std::fs::write(&golden, serde_json::to_string_pretty(&results).unwrap() + "\n").unwrap();
            continue;
        }
        let expected: Value = serde_json::from_str(&std::fs::read_to_string(&golden).unwrap()).unwrap();
        assert_eq!(results, expected, "{name} drifted from its golden file");
    }
}

#[test]
fn backward_shift_is_a_precondition_failure() {
    let (out, dir) = run_spec("backward_shift_deflate.json", &[]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_block(&out)["kind"], "precondition-violated");
    let r = report(dir.path());
    assert_eq!(r["error"]["exitCode"], 3);
    assert!(r.get("results").is_none());
}

#[test]
fn step_cap_is_a_certificate_failure() {
    let (out, _dir) = run_spec("cibws_deflate.json", &["--step-cap", "1"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_block(&out)["kind"], "step-cap-exceeded");
}

#[test]
fn two_entry_columns_are_unsupported() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("shifted.json");
    std::fs::write(
        &spec,
        r#"{"version": 1, "analysis": "deflate",
            "operator": {"op": "lambda-shift", "lambda": 2,
                         "inner": {"op": "spread", "domain": {"kind": "arithmetic", "start": 2, "step": 1},
                                   "image": {"kind": "arithmetic", "start": 1, "step": 1}}}}"#,
    )
    .unwrap();
    let out = schauder(&["run", spec.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_block(&out)["kind"], "unsupported-class");
}

#[test]
fn validate_accepts_every_shipped_spec() {
    for entry in std::fs::read_dir(specs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let out = schauder(&["validate", path.to_str().unwrap()]);
            assert_eq!(out.status.code(), Some(0), "{}", path.display());
        }
    }
}

#[test]
fn unknown_tag_reports_a_path() {
    let out = schauder(&["validate", specs().join("invalid/unknown_tag.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let block = stderr_block(&out);
    let d = &block["diagnostics"][0];
    assert_eq!(d["path"], "/operator");
    assert!(d["message"].as_str().unwrap().contains("unknown variant `identity`"));
}

#[test]
fn negative_truncation_names_the_constraint() {
    let out = schauder(&["validate", specs().join("invalid/negative_truncation.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let d = &stderr_block(&out)["diagnostics"][0];
    assert_eq!(d["path"], "/params/truncation");
    assert!(d["message"].as_str().unwrap().contains("1..=512"));
}

#[test]
fn unknown_param_is_rejected_with_path() {
    let err = schauder_cli::parse_str(r#"{"version": 1, "operator": {"op": "diagonal", "weights": {"rule": "constant", "value": 1}}, "analysis": "classify", "params": {"trunc": 3}}"#)
        .unwrap_err();
    let schauder_cli::CliError::Schema(d) = err else { panic!() };
    assert_eq!(d[0].path, "/params/trunc");
}

#[test]
fn two_subjects_are_rejected() {
    let err = schauder_cli::parse_str(
        r#"{"version": 1, "analysis": "deflate",
            "operator": {"op": "diagonal", "weights": {"rule": "constant", "value": 1}},
            "multiplicities": {"entries": [{"value": 1, "multiplicity": "infinite"}]}}"#,
    )
    .unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn io_errors_are_distinct() {
    let out = schauder(&["validate", "/nonexistent/spec.json"]);
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(stderr_block(&out)["kind"], "io");
}
