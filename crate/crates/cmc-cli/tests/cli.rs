//! End-to-end tests of the `cmc` binary: determinism of payloads, the
//! exit-code contract, manifest handling, and output plumbing.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn parse(out: &Output) -> Value {
    serde_json::from_str(&stdout_str(out)).expect("JSON payload")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn compute_payload_matches_seeds_and_recursion() {
    let out = cmc(&["compute", "--order", "1", "--quiet"]);
    assert_eq!(exit_code(&out), 0);
    let payload = parse(&out);
    assert_eq!(payload["order"], 1);
    let a = payload["tower"]["a"].as_array().unwrap();
    assert_eq!(a.len(), 2);
    assert_eq!(
        a[1],
        cmc_core::diffring::DiffPoly::z(3).to_json(),
        "first recursion entry is the lowest normalised variable"
    );
    // seeds only at order 0
    let out0 = cmc(&["compute", "--order", "0", "--quiet"]);
    let p0 = parse(&out0);
    assert_eq!(p0["tower"]["b"].as_array().unwrap().len(), 1);
    assert_eq!(
        p0["balanced"]["b"][0]["display"].as_str().unwrap(),
        "h2^(-1/2)·[(-1i·γ)]"
    );
}

#[test]
fn payloads_are_byte_identical_across_runs() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["compute", "--order", "2", "--quiet"],
        vec!["verify", "--suite", "series", "--order", "2", "--quiet"],
        vec![
            "flow", "--degree", "8", "--m", "0", "--dt", "1e-2", "--steps", "10", "--seed", "5",
            "--format", "csv", "--quiet",
        ],
        vec!["pde", "--gamma", "2", "--u0", "0.1", "--v0", "0.2", "--T", "1", "--quiet"],
        vec!["export", "--order", "1", "--kind", "x4", "--quiet"],
    ];
    for args in &cases {
        let first = cmc(args);
        let second = cmc(args);
        assert_eq!(exit_code(&first), 0, "{args:?}");
        assert_eq!(first.stdout, second.stdout, "nondeterministic payload for {args:?}");
        assert!(!first.stdout.is_empty());
    }

    // the same run driven by a manifest file gives the same bytes again
    let dir = tempfile::tempdir().unwrap();
    let mf = dir.path().join("flow.mf");
    fs::write(
        &mf,
        "command = flow\ndegree = 8\nm = 0\ndt = 1e-2\nsteps = 10\nseed = 5\nformat = csv\n",
    )
    .unwrap();
    let via_manifest = cmc(&["flow", "--manifest", mf.to_str().unwrap(), "--quiet"]);
    let via_flags = cmc(&cases[2]);
    assert_eq!(via_manifest.stdout, via_flags.stdout);
}

fn tampered_tower(dir: &Path) -> String {
    let export = cmc(&["export", "--order", "2", "--kind", "tower", "--quiet"]);
    let mut payload = parse(&export);
    let tower = payload["artifact"].take();
    let path = dir.join("tower_bad.json");
    let mut tower = tower;
    // flip the coefficient of the first term of a[1] from 1 to 2
    tower["a"][1][0]["coeff"]["re"] = Value::String("2".into());
    fs::write(&path, serde_json::to_string(&tower).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn exit_code_contract_holds() {
    // 0: healthy verification
    assert_eq!(exit_code(&cmc(&["verify", "--suite", "killing", "--order", "1", "--quiet"])), 0);

    // 1: corrupted tower input fails residual checks but is structurally valid
    let dir = tempfile::tempdir().unwrap();
    let bad = tampered_tower(dir.path());
    let out = cmc(&["verify", "--suite", "killing", "--input", &bad, "--quiet"]);
    assert_eq!(exit_code(&out), 1);
    let payload = parse(&out);
    assert_eq!(payload["pass"], false);

    // 1: numeric tolerance exceeded
    let out = cmc(&[
        "flow", "--degree", "8", "--steps", "5", "--dt", "1e-2", "--tolerance", "1e-30", "--quiet",
    ]);
    assert_eq!(exit_code(&out), 1);

    // 2: invalid input in its many forms
    for args in [
        vec!["compute", "--order", "-1", "--quiet"],
        vec!["compute", "--quiet"],
        vec!["verify", "--suite", "bogus", "--order", "1", "--quiet"],
        vec!["flow", "--degree", "4", "--m", "2", "--quiet"],
        vec!["pde", "--gamma", "-1", "--vacuum", "--quiet"],
        vec!["pde", "--gamma", "symbolic", "--vacuum", "--quiet"],
        vec!["compute", "--order", "1", "--gamma", "3/2", "--quiet"],
        vec!["export", "--order", "1", "--kind", "nonsense", "--quiet"],
    ] {
        assert_eq!(exit_code(&cmc(&args)), 2, "{args:?}");
    }

    // 2: malformed JSON input and malformed manifests
    let nj = dir.path().join("not.json");
    fs::write(&nj, "not json").unwrap();
    assert_eq!(
        exit_code(&cmc(&["verify", "--input", nj.to_str().unwrap(), "--quiet"])),
        2
    );
    let mf = dir.path().join("bad.mf");
    fs::write(&mf, "bogus = 1\n").unwrap();
    assert_eq!(
        exit_code(&cmc(&["flow", "--manifest", mf.to_str().unwrap(), "--quiet"])),
        2
    );
    let mismatched = dir.path().join("mismatch.mf");
    fs::write(&mismatched, "command = compute\n").unwrap();
    assert_eq!(
        exit_code(&cmc(&["verify", "--manifest", mismatched.to_str().unwrap(), "--quiet"])),
        2
    );
}

#[test]
fn output_file_and_stderr_discipline() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tower.json");
    let to_file = cmc(&["compute", "--order", "1", "--out", path.to_str().unwrap()]);
    assert_eq!(exit_code(&to_file), 0);
    assert!(to_file.stdout.is_empty(), "payload must not leak to stdout");
    let from_file = fs::read(&path).unwrap();
    let to_stdout = cmc(&["compute", "--order", "1"]);
    assert_eq!(from_file, to_stdout.stdout, "file and stdout payloads agree");

    // timestamps live on stderr and disappear under --quiet
    let noisy = String::from_utf8(to_stdout.stderr.clone()).unwrap();
    assert!(noisy.contains("finished at unix"), "stderr: {noisy}");
    assert!(!stdout_str(&to_stdout).contains("unix"));
    let quiet = cmc(&["compute", "--order", "1", "--quiet"]);
    assert!(quiet.stderr.is_empty());
}

#[test]
fn flags_override_manifest_values() {
    let dir = tempfile::tempdir().unwrap();
    let mf = dir.path().join("compute.mf");
    fs::write(&mf, "order = 2\nquiet = true\n").unwrap();
    let defaulted = cmc(&["compute", "--manifest", mf.to_str().unwrap()]);
    assert_eq!(parse(&defaulted)["order"], 2);
    let overridden = cmc(&["compute", "--manifest", mf.to_str().unwrap(), "--order", "1"]);
    assert_eq!(parse(&overridden)["order"], 1);
}

#[test]
fn vacuum_residual_is_exact_at_small_gamma() {
    for gamma in ["1", "2"] {
        let out = cmc(&["pde", "--gamma", gamma, "--vacuum", "--quiet"]);
        assert_eq!(exit_code(&out), 0);
        let payload = parse(&out);
        assert_eq!(
            payload["max_abs_residual"], 0.0,
            "vacuum residual must be exactly zero at γ = {gamma}"
        );
    }
}

#[test]
fn exported_towers_feed_back_into_verify() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("export.json");
    let export = cmc(&[
        "export", "--order", "2", "--kind", "tower", "--out", path.to_str().unwrap(), "--quiet",
    ]);
    assert_eq!(exit_code(&export), 0);
    // the whole export payload is accepted, not just the bare tower
    let verify = cmc(&[
        "verify", "--suite", "killing", "--input", path.to_str().unwrap(), "--quiet",
    ]);
    assert_eq!(exit_code(&verify), 0);
    let payload = parse(&verify);
    assert_eq!(payload["pass"], true);
    assert_eq!(payload["order"], 2);
}

#[test]
fn verify_report_formats_agree_on_the_verdict() {
    let json_run = cmc(&["verify", "--suite", "tangency", "--order", "2", "--quiet"]);
    assert_eq!(exit_code(&json_run), 0);
    let payload = parse(&json_run);
    assert_eq!(payload["pass"], true);
    let n_reports = payload["reports"].as_array().unwrap().len();

    let text_run = cmc(&[
        "verify", "--suite", "tangency", "--order", "2", "--format", "text", "--quiet",
    ]);
    let text = stdout_str(&text_run);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), n_reports);

    let csv_run = cmc(&[
        "verify", "--suite", "tangency", "--order", "2", "--format", "csv", "--quiet",
    ]);
    let csv = stdout_str(&csv_run);
    assert_eq!(csv.lines().count(), n_reports + 1, "header plus one row per check");
}
