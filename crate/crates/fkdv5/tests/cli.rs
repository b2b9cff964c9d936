//! Black-box tests of the `fkdv5` binary: exit codes, report shape, and the
//! CSV export / verify round trip.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fkdv5"))
        .args(args)
        .output()
        .expect("spawn fkdv5")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn classify_power_case() {
    let out = run(&["classify", "--n", "2", "--beta", "t^3", "--t-range", "1:2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("\"schema\": \"fkdv5-report/1\""));
    assert!(text.contains("\"case\": \"POWER\""));
    assert!(text.contains("3.000000000000e+00"), "ρ = 3 in fixed format");
    assert!(text.contains("\"algebra\""));
}

#[test]
fn classify_generic_exits_2_with_warning() {
    let out = run(&[
        "classify",
        "--n",
        "2",
        "--beta",
        "exp(t)+t^2",
        "--t-range",
        "0:1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("\"case\": \"GENERIC\""));
    assert!(stderr(&out).to_lowercase().contains("generic"));
}

#[test]
fn bad_input_exits_1() {
    // n = 1 is outside the class
    let out = run(&["classify", "--n", "1", "--beta", "1"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));

    // unparseable coefficient
    let out = run(&["classify", "--n", "2", "--beta", "t^^2"]);
    assert_eq!(out.status.code(), Some(1));

    // empty time window
    let out = run(&["classify", "--n", "2", "--beta", "1", "--t-range", "2:1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reduce_along_translations_is_rejected() {
    let out = run(&[
        "reduce",
        "--n",
        "2",
        "--beta",
        "t^3",
        "--subalgebra",
        "g0",
        "--ic",
        "0.1,0,0,0,0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("g0"));
}

#[test]
fn unknown_subalgebra_is_rejected() {
    let out = run(&[
        "reduce",
        "--n",
        "2",
        "--beta",
        "t^3",
        "--subalgebra",
        "g9.9",
        "--ic",
        "0.1,0,0,0,0",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reduce_csv_round_trips_through_verify() {
    let dir = std::env::temp_dir().join("fkdv5-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("solution.csv");
    let json = dir.join("report.json");

    let out = run(&[
        "reduce",
        "--n",
        "2",
        "--beta",
        "t^3",
        "--subalgebra",
        "g2.1",
        "--ic",
        "0.3,0.05,-0.02,0.01,0",
        "--omega-span",
        "-2:2",
        "--grid",
        "6x24",
        "--csv",
        csv.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    // --json writes exactly what was printed
    let report = std::fs::read_to_string(&json).unwrap();
    assert_eq!(report, stdout(&out));
    assert!(report.contains("\"command\": \"reduce\""));

    // CSV header and shape
    let data = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(data.lines().next().unwrap(), "t,x,u,residual");
    assert_eq!(data.lines().count(), 1 + 6 * 24);

    // the exported samples verify against the same equation
    let out = run(&[
        "verify",
        "--n",
        "2",
        "--beta",
        "t^3",
        "--solution",
        csv.to_str().unwrap(),
        "--tol",
        "1e-2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("\"max_rel\""));
}

#[test]
fn catalog_lists_three_families_for_negative_epsilon() {
    let out = run(&["catalog", "--n", "2", "--epsilon", "-1", "--t-range", "0:0.1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("stationary-algebraic"));
    assert!(text.contains("tanh-travelling:+"));
    assert!(text.contains("tanh-travelling:-"));
}

#[test]
fn criterion_subcommand_reports_constantization() {
    let out = run(&["criterion", "--n", "2", "--beta", "1/t", "--t-range", "1:2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("\"reducible\": true"));
    assert!(text.contains("\"alpha_out\""));
    assert!(text.contains("\"beta_out\""));
}
