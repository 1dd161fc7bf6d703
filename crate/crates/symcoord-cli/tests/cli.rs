//! End-to-end checks of the `symcoord` binary: output contracts, exit
//! codes, and run-to-run determinism.

use std::process::{Command, Output};

fn symcoord(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symcoord"))
        .args(args)
        .env_remove("SYMCOORD_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn solve_example1_prints_the_exact_and_decimal_value() {
    let out = symcoord(&["solve", "--model", "example1", "--grid", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("J* = 1/2 (0.5)"), "stdout was:\n{text}");
}

#[test]
fn solve_deterministic_only_prints_one() {
    let out = symcoord(&["solve", "--model", "example1", "--deterministic-only"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("J* = 1 (1)"));
}

#[test]
fn solve_output_is_byte_identical_across_runs() {
    let a = symcoord(&["solve", "--model", "example3", "--grid", "4"]);
    let b = symcoord(&["solve", "--model", "example3", "--grid", "4"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn mc_example1_lands_within_four_stderr_of_a_half() {
    let out = symcoord(&[
        "mc", "--model", "example1", "--seed", "7", "--n", "100000",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    // Line shape: "estimate = <frac> (<dec>) +- <stderr> (seed 7, n = 100000)".
    let decimal: f64 = text
        .split('(')
        .nth(1)
        .and_then(|s| s.split(')').next())
        .expect("decimal rendering")
        .parse()
        .expect("parses");
    let stderr_value: f64 = text
        .split("+-")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .expect("stderr rendering")
        .parse()
        .expect("parses");
    assert!(stderr_value > 0.0);
    assert!(
        (decimal - 0.5).abs() <= 4.0 * stderr_value,
        "estimate {decimal} vs 0.5 +- 4*{stderr_value}"
    );

    // Determinism: same seed, same bytes.
    let again = symcoord(&[
        "mc", "--model", "example1", "--seed", "7", "--n", "100000",
    ]);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn verify_passing_scenario_exits_zero() {
    let out = symcoord(&["verify", "--scenario", "example2"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("all "));
}

#[test]
fn verify_full_table_reports_the_known_discrepancy() {
    // The full table carries the deliberately red row documenting that
    // the claimed reduced-history optimum 3/4 is beaten by 1/2; the
    // process must then exit 1 per the verification-failure contract.
    let out = symcoord(&["verify"]);
    let text = stdout(&out);
    assert!(text.contains("j_star_p1c_grid4"));
    let has_fail = text.lines().any(|l| l.ends_with("FAIL"));
    assert!(has_fail, "expected the documented red row:\n{text}");
    assert_eq!(out.status.code(), Some(1));
    assert!(text.contains("j_claimed_strategy_p1c"));
    assert!(text.contains("j_state_matching_strategy_p1c"));
}

#[test]
fn unknown_model_is_an_input_error() {
    let out = symcoord(&["solve", "--model", "no_such_model"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_scenario_is_an_input_error() {
    let out = symcoord(&["verify", "--scenario", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_model_file_is_an_input_error() {
    let dir = std::env::temp_dir().join("symcoord_cli_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad_kernel.toml");
    std::fs::write(
        &path,
        r#"
info_structure = "p1c"
horizon = 2
local_space = ["0", "1"]
action_space = ["0", "1"]
alpha = ["1/2", "1/2"]
cost_default = "0"

[[local_kernel]]
dist = ["3/10", "6/10"]
"#,
    )
    .unwrap();
    let out = symcoord(&["solve", "--model", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kernel row"));
}

#[test]
fn reduce_example2_reports_the_gap() {
    let out = symcoord(&["reduce", "--model", "example2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("symmetry gap = 1/15"), "{text}");
    assert!(text.contains("cost before"), "{text}");
}

#[test]
fn independence_subcommand_prints_the_witness_numbers() {
    let out = symcoord(&["independence", "--model", "p1d_independence"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("FAILS"));
    assert!(text.contains("3/20"));
    assert!(text.contains("1/10"));
    assert!(text.contains("1/4"));
    // Under reduced history the same model is independent.
    let out = symcoord(&[
        "independence",
        "--model",
        "p1d_independence",
        "--structure",
        "p1c",
    ]);
    assert!(stdout(&out).contains("holds"));
}

#[test]
fn belief_trace_streams_csv_to_stdout() {
    let out = symcoord(&["belief", "--model", "example2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("common,t,x0,private,pi1,pi2"));
    // Initial belief row: uniform over both states.
    assert!(text.contains("1/2"));
}

#[test]
fn solve_writes_csv_artifacts_with_out_dir() {
    let dir = std::env::temp_dir().join(format!("symcoord_out_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let out = symcoord(&[
        "solve",
        "--model",
        "example1",
        "--grid",
        "2",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let prescriptions = std::fs::read_to_string(dir.join("example1_prescriptions.csv")).unwrap();
    assert!(prescriptions.starts_with("t,common,x0,private,u=0,u=1"));
    assert!(prescriptions.contains("1/2"));
    assert!(dir.join("example1_beliefs.csv").exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn evaluate_uses_the_embedded_strategy() {
    let out = symcoord(&["evaluate", "--model", "example1"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("J = 1/2 (0.5)"));
    // example3 ships no strategy: input error.
    let out = symcoord(&["evaluate", "--model", "example3"]);
    assert_eq!(out.status.code(), Some(2));
}
