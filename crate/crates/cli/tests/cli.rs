use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bmo(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bmo"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_step(dir: &Path) {
    std::fs::write(
        dir.join("step.json"),
        r#"{"n":1,"levels":1,"origin":[0],"side":1,"values":[0,1]}"#,
    )
    .unwrap();
}

#[test]
fn norm_of_step() {
    let dir = tempfile::tempdir().unwrap();
    write_step(dir.path());
    let out = bmo(&["norm", "--input", "step.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["bmo_norm"], 0.5);
    assert_eq!(v["argmax_cube"]["level"], 0);
    assert_eq!(v["argmax_cube"]["index"], serde_json::json!([0]));
    assert!(v["reference"].is_string());
}

#[test]
fn constant_input_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let gen = bmo(
        &[
            "gen", "--kind", "constant", "--n", "1", "--levels", "3", "--param", "c=2", "--output",
            "c.json",
        ],
        dir.path(),
    );
    assert_eq!(gen.status.code(), Some(0));
    let out = bmo(
        &["jn", "--input", "c.json", "--output", "report.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("BMO norm is zero"));
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn spike_decomposition_selects_last_cell() {
    let dir = tempfile::tempdir().unwrap();
    let gen = bmo(
        &[
            "gen",
            "--kind",
            "spike",
            "--n",
            "1",
            "--levels",
            "2",
            "--param",
            "h=12",
            "--output",
            "spike.json",
        ],
        dir.path(),
    );
    assert_eq!(gen.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("spike.json")).unwrap();
    assert!(text.contains("[0.0,0.0,0.0,12.0]"));

    let out = bmo(
        &["decompose", "--input", "spike.json", "--theta", "1.01"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let first = &v["generations"][0];
    assert_eq!(first.as_array().unwrap().len(), 1);
    assert_eq!(first[0]["level"], 2);
    assert_eq!(first[0]["index"], serde_json::json!([3]));
    assert_eq!(first[0]["base_average"], 0.5);
    assert_eq!(v["generations"].as_array().unwrap().len(), 5);
    assert_eq!(v["passed"], true);
}

#[test]
fn csv_outputs() {
    let dir = tempfile::tempdir().unwrap();
    write_step(dir.path());
    let out = bmo(
        &[
            "jn",
            "--input",
            "step.json",
            "--steps",
            "4",
            "--format",
            "csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "alpha,empirical,bound");
    assert_eq!(lines.len(), 5);

    let out = bmo(
        &[
            "expint",
            "--input",
            "step.json",
            "--format",
            "csv",
            "--zeta-max",
            "0.3",
            "--steps",
            "3",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("zeta,lhs,bound,admissible\n"));
    // 0.2 and 0.3 lie beyond 1/(2e)
    assert!(text.lines().last().unwrap().ends_with(",inf,false"));

    let out = bmo(
        &[
            "gen", "--kind", "step", "--n", "1", "--levels", "2", "--format", "csv", "--output",
            "s.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let out = bmo(&["norm", "--input", "s.csv"], dir.path());
    assert_eq!(json(&out)["bmo_norm"], 0.5);
}

#[test]
fn duality_from_file() {
    let dir = tempfile::tempdir().unwrap();
    write_step(dir.path());
    std::fs::write(
        dir.path().join("atoms.json"),
        r#"{"terms":[{"kappa":1,"support":{"level":0,"index":[0]},"kind":"haar","axis":0}]}"#,
    )
    .unwrap();
    let out = bmo(
        &["duality", "--input", "step.json", "--atoms", "atoms.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["functional_value"], -0.5);
    assert_eq!(v["bound"], 0.5);
    assert_eq!(v["passed"], true);
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    write_step(dir.path());
    let cases: &[&[&str]] = &[
        &["jn", "--bogus"],
        &["norm"],
        &["norm", "--input", "missing.json"],
        &["norm", "--input", "step.json", "--format", "csv"],
        &["decompose", "--input", "step.json", "--theta", "1.0"],
        &["decompose", "--input", "step.json", "--generations", "0"],
        &["jn", "--input", "step.json", "--steps", "0"],
        &["gen", "--kind", "sawtooth", "--n", "1", "--levels", "2"],
        &[
            "gen", "--kind", "spike", "--n", "1", "--levels", "2", "--param", "h",
        ],
        &[
            "gen", "--kind", "constant", "--n", "2", "--levels", "2", "--format", "csv",
        ],
        &["duality", "--input", "step.json"],
        &["jn", "--input", "step.json", "--level", "2"],
    ];
    for args in cases {
        let out = bmo(args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
    assert_eq!(bmo(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn malformed_grid_names_field() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.json"),
        r#"{"n":1,"levels":1,"origin":[0],"side":1,"values":[0,1,2]}"#,
    )
    .unwrap();
    let out = bmo(&["norm", "--input", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("values") && err.contains("expected 2 values"),
        "{err}"
    );
}
