use std::path::Path;
use std::process::{Command, Output};

fn compact9(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_compact9"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn steady_solve_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    let out = compact9(&[
        "solve-steady", "--case", "example1", "--n", "16", "--variant", "reduced", "--out", arg(&path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "h,tau,l2,l2_order,linf,linf_order");
    assert!(lines[1].starts_with("6.250000e-2,,"));
}

#[test]
fn unknown_case_is_a_usage_error() {
    let out = compact9(&["solve-steady", "--case", "nosuch", "--n", "16"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("example1"));
}

#[test]
fn unknown_flag_and_short_flags_are_usage_errors() {
    assert_eq!(code(&compact9(&["solve-steady", "--case", "example1", "--bogus"])), 1);
    assert_eq!(code(&compact9(&["solve-steady", "-n", "16"])), 1);
    assert_eq!(code(&compact9(&["--help"])), 0);
}

#[test]
fn solver_kind_must_match_case() {
    assert_eq!(code(&compact9(&["solve-transient", "--case", "example1", "--n", "8"])), 1);
    assert_eq!(code(&compact9(&["solve-steady", "--case", "example3", "--n", "8"])), 1);
}

#[test]
fn special_stencil_needs_equal_coefficients() {
    let out = compact9(&["solve-steady", "--case", "example1", "--n", "8", "--variant", "special4"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out_path = dir.path().join("t.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"case": "example2", "n": 64, "variant": "special4", "iterations": 4, "out": "{}"}}"#,
            out_path.display()
        ),
    )
    .unwrap();
    let out = compact9(&["solve-steady", "--config", arg(&cfg), "--n", "8"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["variant"], "special4");
    assert_eq!(report["levels"][0]["n_cells"], 8);
    assert_eq!(report["levels"][0]["iterations"], 4);
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"case": "example1", "grid": 8}"#).unwrap();
    assert_eq!(code(&compact9(&["solve-steady", "--config", arg(&cfg)])), 1);
}

#[test]
fn transient_convergence_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let out = compact9(&[
        "convergence", "--case", "example3", "--algo", "bdf4", "--levels", "8,16", "--r", "1", "--out", arg(&path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let last: Vec<_> = text.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(last[1], "6.250000e-2");
    let order: f64 = last[3].parse().unwrap();
    assert!(order > 4.0, "{order}");
}

#[test]
fn non_doubling_levels_are_rejected() {
    let out = compact9(&["convergence", "--case", "example1", "--levels", "8,12"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn consistency_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let out = compact9(&[
        "consistency", "--case", "example1", "--variant", "general4", "--levels", "16,32", "--out", arg(&path),
    ]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["levels"].as_array().unwrap().len(), 2);
    assert!(report["order"].as_f64().unwrap() > 3.5);
}

#[test]
fn mmatrix_check_passes_on_examples() {
    for args in [
        &["check-mmatrix", "--case", "example2", "--n", "16", "--variant", "special4"][..],
        &["check-mmatrix", "--case", "example3", "--n", "16", "--algo", "cn"][..],
    ] {
        let out = compact9(args);
        assert_eq!(code(&out), 0, "{args:?}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    }
}

#[test]
fn stencil_dump_from_cli() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dump.json");
    let out = compact9(&[
        "dump-stencils", "--case", "example1", "--n", "16", "--dump-count", "5", "--out", arg(&path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let records = compact9::stencil::dump::read_stencil_dump(&path).unwrap();
    assert_eq!(records.len(), 5);
    assert!(records.iter().all(|r| r.c_klp.len() == 9 && r.residual <= 1e-9));

    let explicit = compact9(&["dump-stencils", "--case", "example1", "--variant", "general4", "--out", arg(&path)]);
    assert_eq!(code(&explicit), 1);
}

#[test]
fn steady_solve_can_dump_final_stencils() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dump.json");
    let out = compact9(&[
        "solve-steady", "--case", "example2", "--n", "16", "--iterations", "3", "--dump-stencils", arg(&path),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(compact9::stencil::dump::read_stencil_dump(&path).unwrap().len(), 20);
}

#[test]
fn failed_run_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("r.csv");
    let out = compact9(&["solve-steady", "--case", "example1", "--n", "8", "--iterations", "2", "--out", arg(&path)]);
    assert_eq!(code(&out), 2);
}
