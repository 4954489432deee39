use std::path::Path;
use std::process::{Command, Output};

use jpdlab_cli::{without_header, EXIT_RESOURCE, EXIT_USAGE};
use toml::Table;

fn jpdlab(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_jpdlab"));
    cmd.args(args).env_remove("JPDLAB_OUT_DIR");
    if let Some(dir) = out_dir {
        cmd.env("JPDLAB_OUT_DIR", dir);
    }
    cmd.output().expect("jpdlab runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn structured_output_is_reproducible_apart_from_the_header() {
    for args in [
        vec!["evaluate", "kcbs-temporal", "--format", "structured"],
        vec!["histories", "--format", "structured"],
        vec!["selftest", "--draws", "20", "--seed", "11", "--format", "structured"],
        vec!["scan", "optimize", "--seeds", "2", "--starts", "8", "--format", "structured"],
    ] {
        let a = stdout(&jpdlab(&args, None));
        let b = stdout(&jpdlab(&args, None));
        assert!(a.starts_with("[header]"), "{a}");
        assert_eq!(without_header(&a), without_header(&b), "{args:?}");
        assert!(!without_header(&a).contains("elapsed_ms"));
    }
}

#[test]
fn header_replays_the_run() {
    let first = stdout(&jpdlab(&["evaluate", "chained-6", "--format", "structured"], None));
    let report: Table = first.parse().unwrap();
    let header = report["header"].as_table().unwrap();
    assert_eq!(header["tool"].as_str(), Some("jpdlab"));
    assert_eq!(header["command"].as_str(), Some("evaluate"));
    let args: Vec<&str> = header["args"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    let again = stdout(&jpdlab(&args, None));
    assert_eq!(without_header(&first), without_header(&again));
}

#[test]
fn out_path_and_environment_directory() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/report.toml");
    let o = jpdlab(&["bound", "--n", "7", "--out", path.to_str().unwrap()], None);
    assert!(o.status.success());
    assert!(stdout(&o).contains("classical bound  -5"));
    let written: Table = std::fs::read_to_string(&path).unwrap().parse().unwrap();
    assert_eq!(written["bound"]["classical_bound"].as_integer(), Some(-5));

    let env_dir = tempfile::tempdir().unwrap();
    let o = jpdlab(&["evaluate", "kcbs-spatial"], Some(env_dir.path()));
    assert!(o.status.success());
    assert!(env_dir.path().join("evaluate.toml").exists());
    let o = jpdlab(&["scan", "chained-n", "--from", "3", "--to", "5"], Some(env_dir.path()));
    assert!(o.status.success());
    let csv = std::fs::read_to_string(env_dir.path().join("scan.csv")).unwrap();
    assert_eq!(csv, stdout(&o));
}

#[test]
fn scan_emits_csv_with_fixed_header() {
    let o = jpdlab(&["scan", "temporal-step", "--from", "0", "--to", "0.5", "--steps", "3"], None);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "parameter,lhs_value,classical_bound");
    assert_eq!(lines.len(), 4);
    // τ = 0: all five measurements coincide, every correlator is 1.
    assert_eq!(lines[1], "0.0,5.0,-3");
    let quarter: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(quarter[0], "0.25");
    assert!((quarter[1].parse::<f64>().unwrap() + 4.045084971874737).abs() < 1e-12);

    let o = jpdlab(&["scan", "spatial-angle", "--from", "0", "--to", "3.141592653589793", "--steps", "2"], None);
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("0.0,5.0"));
}

#[test]
fn feasibility_inputs_and_witness_export() {
    let dir = tempfile::tempdir().unwrap();
    let witness = dir.path().join("witness.toml");
    let o = jpdlab(
        &["feasibility", "--correlators=-0.6,-0.6,-0.6,-0.6,-0.6", "--witness", witness.to_str().unwrap()],
        None,
    );
    assert!(o.status.success());
    let w: Table = std::fs::read_to_string(&witness).unwrap().parse().unwrap();
    assert_eq!(w["feasible"].as_bool(), Some(true));
    let weights = w["weight"].as_array().unwrap();
    let total: f64 = weights.iter().map(|x| x["value"].as_float().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
    for entry in weights {
        let outcomes = entry["outcomes"].as_str().unwrap();
        assert_eq!(outcomes.len(), 5);
    }

    let scenario = dir.path().join("uniform.toml");
    std::fs::write(
        &scenario,
        "n = 3\nsigns = [1, 1, 1]\npairs = [[0.25, 0.25, 0.25, 0.25], [0.25, 0.25, 0.25, 0.25], [0.25, 0.25, 0.25, 0.25]]\n",
    )
    .unwrap();
    let o = jpdlab(&["feasibility", "--scenario", scenario.to_str().unwrap(), "--format", "structured"], None);
    let r: Table = stdout(&o).parse().unwrap();
    assert_eq!(r["feasibility"]["feasible"].as_bool(), Some(true));

    let built = dir.path().join("built.toml");
    std::fs::write(&built, "n = 5\nsigns = [1, 1, 1, 1, 1]\nbuilder = \"kcbs-temporal\"\n").unwrap();
    let o = jpdlab(&["feasibility", "--scenario", built.to_str().unwrap(), "--format", "structured"], None);
    let r: Table = stdout(&o).parse().unwrap();
    assert_eq!(r["feasibility"]["status"].as_str(), Some("infeasible"));
}

#[test]
fn exit_statuses() {
    let code = |args: &[&str]| jpdlab(args, None).status.code().unwrap();
    assert_eq!(code(&["evaluate", "kcbs-contextual"]), 0);
    assert_eq!(code(&["evaluate", "no-such-builder"]), i32::from(EXIT_USAGE));
    assert_eq!(code(&["evaluate", "kcbs-spatial", "--times", "0,1,2"]), i32::from(EXIT_USAGE));
    assert_eq!(code(&["frobnicate"]), i32::from(EXIT_USAGE));
    assert_eq!(code(&["bound", "--n", "30"]), i32::from(EXIT_RESOURCE));
    assert_eq!(code(&["evaluate", "chained-17"]), 0);
    assert_eq!(code(&["feasibility", "chained-18"]), i32::from(EXIT_RESOURCE));
    assert_eq!(code(&["feasibility", "--correlators=2,0,0"]), i32::from(EXIT_USAGE));
    assert_eq!(code(&["histories", "--slots", "0,1"]), i32::from(EXIT_USAGE));
}

#[test]
fn temporal_parameters_are_honoured() {
    let o = jpdlab(
        &["evaluate", "kcbs-temporal", "--times", "0,0.25,0.5", "--rate", "3.141592653589793", "--format", "structured"],
        None,
    );
    let r: Table = stdout(&o).parse().unwrap();
    let c = r["inequality"]["correlators"].as_array().unwrap();
    // Bloch angle 2·π·Δt: cos(π/2) = 0 for adjacent times, cos(π) for the wrap.
    assert!(c[0].as_float().unwrap().abs() < 1e-12);
    assert!((c[2].as_float().unwrap() + 1.0).abs() < 1e-12);
    assert_eq!(r["inequality"]["classical_bound"].as_integer(), Some(-1));
}

#[test]
fn histories_report() {
    let o = jpdlab(&["histories", "--angles", "0,2.0943951023931953,4.1887902047863905", "--format", "structured"], None);
    assert!(o.status.success());
    let r: Table = stdout(&o).parse().unwrap();
    let lg = r["lg"].as_table().unwrap();
    assert!((lg["lhs"].as_float().unwrap() + 1.5).abs() < 1e-12);
    assert!((lg["rewritten_minus_lhs"].as_float().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(r["probability"].as_array().unwrap().len(), 8);
    assert_eq!(r["interference"].as_array().unwrap().len(), 12);
    assert!(r["pair"]
        .as_array()
        .unwrap()
        .iter()
        .any(|p| p["class"].as_str() == Some("inconsistent")));
}

#[test]
fn selftest_passes_and_lists_every_check() {
    let o = jpdlab(&["selftest", "--draws", "50", "--seed", "3"], None);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
    assert_eq!(text.lines().count(), 11);
}
