//! End-to-end tests of the `vpower` binary: exit codes, formats, file I/O.

use std::process::{Command, Output};

fn vpower(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vpower"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn compute_markdown_default() {
    let out = vpower(&["compute", "--dataset", "eec1958"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("| FR | 23.3333 |"));
    assert!(text.contains("| LU | 0.0000 |"));
}

#[test]
fn compute_csv_carries_exact_fractions() {
    let out = vpower(&["compute", "--dataset", "eec1958", "--format", "csv"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("FR,23.3333,7,30"));
}

#[test]
fn compute_json_is_valid_and_exact() {
    let out = vpower(&["compute", "--dataset", "eec1958", "--format", "json"]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let fr = value["players"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["player"] == "FR")
        .unwrap();
    assert_eq!(fr["exact"]["num"], "7");
    assert_eq!(fr["exact"]["den"], "30");
}

#[test]
fn exit_subcommand_reproduces_france_row() {
    let out = vpower(&[
        "exit",
        "--dataset",
        "eec1958",
        "--leaver",
        "FR",
        "--quota",
        "9",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("0.720000"));
    assert!(text.contains("| DE | 23.3333 | 30.0000 | 21.6000 | 92.57 | -743 |"));
}

#[test]
fn usage_error_is_exit_code_1() {
    let out = vpower(&["compute", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_dataset_is_exit_code_2() {
    let out = vpower(&["compute", "--dataset", "atlantis"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("atlantis"));
}

#[test]
fn unknown_year_is_exit_code_2() {
    let out = vpower(&["compute", "--dataset", "eu28", "--year", "1999"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_passes() {
    let out = vpower(&["validate"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("all checks passed"));
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join("vpower-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("eec.csv");
    let out = vpower(&[
        "compute",
        "--dataset",
        "eec1958",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(std::fs::read_to_string(&path)
        .unwrap()
        .contains("FR,23.3333"));
}

#[test]
fn csv_dataset_round_trips_through_a_file() {
    let dir = std::env::temp_dir().join("vpower-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("tiny.csv");
    std::fs::write(
        &path,
        "code,name,pop_2015,pop_2020,pop_2030,contribution_pct\n\
         AA,Alpha,500,500,500,50.0\n\
         BB,Beta,300,300,300,30.0\n\
         CC,Gamma,200,200,200,20.0\n",
    )
    .unwrap();
    let out = vpower(&["compute", "--dataset", path.to_str().unwrap()]);
    assert!(out.status.success());
    // Lisbon rule over three members: quota 2 members and 65% population;
    // AA is needed in every winning coalition
    assert!(stdout(&out).contains("AA"));
}

#[test]
fn env_var_dataset_directory() {
    let dir = std::env::temp_dir().join("vpower-cli-env");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(
        dir.join("named.csv"),
        "code,name,pop_2015,pop_2020,pop_2030,contribution_pct\n\
         AA,Alpha,500,500,500,60.0\n\
         BB,Beta,500,500,500,40.0\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_vpower"))
        .args(["compute", "--dataset", "named"])
        .env("VPOWER_DATA_DIR", &dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(stdout(&out).contains("AA"));
}

#[test]
fn blockers_on_fixed_weight_game_is_empty() {
    let out = vpower(&["blockers", "--dataset", "eec1958", "--format", "json"]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(value["shortfall_coalitions"].as_array().unwrap().is_empty());
    for delta in value["deltas"].as_array().unwrap() {
        assert_eq!(delta["exact"]["num"], "0");
    }
}

#[test]
fn compute_with_blocking_rule_shifts_malta() {
    // Malta's index with the rule is its plain 0.008487 plus exactly 1/8190
    let out = vpower(&[
        "compute",
        "--dataset",
        "eu28",
        "--blocking-minority",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("MT,0.8609"));
}

#[test]
fn summary_and_blockers_run_on_eec_sized_input() {
    // blockers needs a Lisbon-rule dataset; eu27 in full is exercised by the
    // acceptance suite, here we only check the command wiring and format flag
    let out = vpower(&["blockers", "--dataset", "eu28", "--format", "json"]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(value["shortfall_coalitions"].as_array().unwrap().len() == 10);
}
