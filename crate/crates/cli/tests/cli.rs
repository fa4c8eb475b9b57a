// Copyright 2026 The osqec Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::{Command, Output};

use osqec_core::instances::perturbed_families;
use osqec_core::io::split_to_json;
use osqec_core::matcore::pauli::{on_qubit, x};
use osqec_core::ComplexMatrix;

fn scenario(name: &str) -> String {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    dir.join(name).display().to_string()
}

fn rep3() -> String {
    scenario("rep3.code.json")
}

fn osqec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_osqec"))
        .args(args)
        .env_remove("OSQEC_TOL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn field<'a>(report: &'a str, key: &str) -> &'a str {
    let prefix = format!("{key} = ");
    report
        .lines()
        .find_map(|l| l.strip_prefix(prefix.as_str()))
        .unwrap_or_else(|| panic!("no field {key} in\n{report}"))
}

fn real_field(report: &str, key: &str) -> f64 {
    field(report, key).parse().unwrap()
}

fn csv_rows<'a>(report: &'a str, name: &str) -> Vec<Vec<&'a str>> {
    let start = format!("[csv {name}]");
    report
        .lines()
        .skip_while(|l| *l != start)
        .skip(2)
        .take_while(|l| *l != "[end csv]")
        .map(|l| l.split(',').collect())
        .collect()
}

#[test]
fn correctable_scenario_exits_zero_with_diagonal_lambda() {
    let o = osqec(&[
        "check-perfect",
        "--channel",
        &scenario("rep3-bitflip-p0.05-db1.channel.json"),
        "--code",
        &rep3(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = stdout(&o);
    assert_eq!(field(&r, "verdict"), "correctable");
    assert_eq!(real_field(&r, "off_diagonal_max"), 0.0);
    let lambdas: Vec<f64> = csv_rows(&r, "lambda_diagonal")
        .iter()
        .map(|row| row[1].parse().unwrap())
        .collect();
    assert_eq!(lambdas.len(), 4);
    assert!(real_field(&r, "round_trip_residual") <= 1e-9);
}

#[test]
fn violating_scenario_exits_two_and_names_the_pair() {
    let o = osqec(&[
        "check-perfect",
        "--channel",
        &scenario("rep3-x1x2-out-of-span.channel.json"),
        "--code",
        &rep3(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let r = stdout(&o);
    assert_eq!(field(&r, "verdict"), "violated");
    assert!(field(&r, "worst_pair").contains("a=4"));
}

#[test]
fn malformed_matrix_exits_one_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.channel.json");
    std::fs::write(&path, r#"{"d_s": 2, "d_b": 1, "kraus": [[[[1,0],[0,0]], [[0,0]]]]}"#).unwrap();
    let code = dir.path().join("q.code.json");
    std::fs::write(&code, r#"{"d_s": 2, "basis": [[[1,0],[0,0]]]}"#).unwrap();
    let o = osqec(&[
        "check-perfect",
        "--channel",
        path.to_str().unwrap(),
        "--code",
        code.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("kraus[0] row 1"), "{}", stderr(&o));
}

#[test]
fn usage_and_missing_files_exit_one() {
    assert_eq!(osqec(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(osqec(&["bound", "--channel", "x", "--code", "y"]).status.code(), Some(1));
    let o = osqec(&["check-perfect", "--channel", "/nonexistent.json", "--code", &rep3()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(osqec(&["--help"]).status.code(), Some(0));
}

#[test]
fn tolerance_comes_from_the_environment() {
    let args = [
        "check-perfect",
        "--channel",
        &scenario("identity.channel.json"),
        "--code",
        &rep3(),
        "--states",
        "5",
    ];
    let run = |tol: &str| {
        Command::new(env!("CARGO_BIN_EXE_osqec"))
            .args(args)
            .env("OSQEC_TOL", tol)
            .output()
            .unwrap()
    };
    let o = run("1e-6");
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(real_field(&stdout(&o), "tolerance"), 1e-6);
    assert_eq!(run("-1").status.code(), Some(1));
}

#[test]
fn correctable_channel_has_zero_bound() {
    let o = osqec(&[
        "bound",
        "--channel",
        &scenario("rep3-bitflip-p0.1-db2.channel.json"),
        "--code",
        &rep3(),
        "--auto-split",
        "--samples",
        "500",
        "--refine",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = stdout(&o);
    assert!(real_field(&r, "epsilon") <= 1e-15);
    assert!(real_field(&r, "eta") <= 1e-9);
}

#[test]
fn perturbed_scenario_bound_dominates() {
    let o = osqec(&[
        "bound",
        "--channel",
        &scenario("rep3-bitflip-p0.05-db2-perturbed.channel.json"),
        "--code",
        &rep3(),
        "--auto-split",
        "--t",
        "0.1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = stdout(&o);
    let (eps, eta) = (real_field(&r, "epsilon"), real_field(&r, "eta"));
    assert!(eps > 0.0 && eta > 0.0 && eta <= eps, "{eta} vs {eps}");
    assert_eq!(real_field(&r, "margin"), eps - eta);
}

#[test]
fn bad_user_split_exits_two_with_residual() {
    let fam = &perturbed_families()[0];
    let mut ops: Vec<ComplexMatrix> = vec![ComplexMatrix::zeros(8, 8); fam.base.len()];
    ops[0] = on_qubit(&x(), 0, 3) * on_qubit(&x(), 1, 3);
    let dir = tempfile::tempdir().unwrap();
    let split = dir.path().join("bad.split.json");
    std::fs::write(&split, split_to_json(&ops)).unwrap();
    let o = osqec(&[
        "bound",
        "--channel",
        &scenario("rep3-bitflip-p0.05-db1-perturbed.channel.json"),
        "--code",
        &rep3(),
        "--split",
        split.to_str().unwrap(),
        "--t",
        "0.1",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let r = stdout(&o);
    assert_eq!(field(&r, "verdict"), "span-violation");
    assert!(real_field(&r, "residual") > 0.1);
}

#[test]
fn user_split_matching_the_projection_is_accepted() {
    let fam = &perturbed_families()[0];
    let ch = fam.at(0.1).unwrap();
    let basis = osqec_core::perfect::correctable_basis(&fam.base, &fam.code, 1e-9).unwrap();
    let auto = osqec_core::approx::split_noise(
        &ch,
        &basis,
        &fam.code,
        osqec_core::approx::SplitMode::AutoProject,
        1e-9,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let split = dir.path().join("good.split.json");
    std::fs::write(&split, split_to_json(&auto.correctable)).unwrap();
    let common = [
        "--channel".to_string(),
        scenario("rep3-bitflip-p0.05-db1-perturbed.channel.json"),
        "--code".into(),
        rep3(),
        "--t".into(),
        "0.1".into(),
        "--samples".into(),
        "200".into(),
    ];
    let with_file: Vec<&str> = ["bound", "--split", split.to_str().unwrap()]
        .into_iter()
        .chain(common.iter().map(String::as_str))
        .collect();
    let with_auto: Vec<&str> = ["bound", "--auto-split"]
        .into_iter()
        .chain(common.iter().map(String::as_str))
        .collect();
    let a = stdout(&osqec(&with_file));
    let b = stdout(&osqec(&with_auto));
    assert_eq!(field(&a, "epsilon"), field(&b, "epsilon"));
}

#[test]
fn expansion_sweep_reports_cubic_slope() {
    let o = osqec(&[
        "verify-expansion",
        "--channel",
        &scenario("rep3-bitflip-p0.05-db2-perturbed.channel.json"),
        "--code",
        &rep3(),
        "--auto-split",
        "--t-sweep",
        "0.1,0.05,0.025",
        "--states",
        "20",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = stdout(&o);
    let slope = real_field(&r, "gap_slope");
    assert!((2.5..=3.5).contains(&slope), "{slope}");
    assert_eq!(csv_rows(&r, "expansion").len(), 3);
    assert_eq!(field(&r, "trace_violations"), "0");
}

#[test]
fn correctable_expansion_has_negligible_residuals() {
    let o = osqec(&[
        "verify-expansion",
        "--channel",
        &scenario("rep3-bitflip-p0.05-db3.channel.json"),
        "--code",
        &rep3(),
        "--auto-split",
        "--states",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = stdout(&o);
    assert_eq!(field(&r, "gap_slope"), "omitted");
    let rows = csv_rows(&r, "expansion");
    assert_eq!(rows.len(), 1);
    // Residual columns: exact identity through second-order relation.
    for cell in &rows[0][2..8] {
        assert!(cell.parse::<f64>().unwrap() <= 1e-10, "{cell}");
    }
}

#[test]
fn single_scale_omits_slope() {
    let o = osqec(&[
        "verify-expansion",
        "--channel",
        &scenario("rep3-bitflip-p0.05-db1-perturbed.channel.json"),
        "--code",
        &rep3(),
        "--auto-split",
        "--t-sweep",
        "0.05",
        "--states",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&stdout(&o), "gap_slope"), "omitted");
}

#[test]
fn worst_case_reports_argmax_state() {
    let o = osqec(&[
        "worst-case",
        "--channel",
        &scenario("rep3-bitflip-p0.05-db1-perturbed.channel.json"),
        "--code",
        &rep3(),
        "--t",
        "0.05",
        "--samples",
        "300",
        "--refine",
        "10",
        "--seed",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = stdout(&o);
    assert!(real_field(&r, "eta") >= real_field(&r, "eta_sampled"));
    assert_eq!(csv_rows(&r, "argmax_state").len(), 8);
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for path in [&a, &b] {
        let o = osqec(&["report", "--samples", "300", "--refine", "5", "--states", "5", "--out", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(!ta.is_empty());
    assert_eq!(ta, tb);
}
