use std::path::PathBuf;
use std::process::{Command, Output};

use isoparity_cli::suites::VerifyReport;
use serde_json::Value;

fn isoparity(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isoparity")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

const Z9_DOUBLING: &str = r#"{"p":"3","exponents":[2],"action":{"rows":1,"cols":1,"entries":[["2"]]}}"#;

#[test]
fn brauer_find_recovers_the_s3_relation() {
    let o = isoparity(&["brauer", "find", "--group", "S3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("rank 1"), "{text}");
    assert!(text.contains("2C2+C3-2S3-{1}"), "{text}");

    let o = isoparity(&["--json", "brauer", "find", "--group", "s3"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let rels = v["relations"].as_array().unwrap();
    assert_eq!(rels.len(), 1);
    assert_eq!(rels[0]["display"], "2C2+C3-2S3-{1}");
    assert_eq!(serde_json::from_str::<Value>(&serde_json::to_string(&v).unwrap()).unwrap(), v);
}

#[test]
fn chi_of_doubling_on_z9_is_one() {
    let path = scratch("z9_doubling.json", Z9_DOUBLING);
    let o = isoparity(&["chi", "--file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("χ_M = 1 (mod 3)"), "{}", stdout(&o));
    for method in ["fast", "bruteforce"] {
        let o = isoparity(&["--json", "chi", "--file", path.to_str().unwrap(), "--method", method]);
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["chi"], 1);
        assert_eq!(v["p"], 3);
    }
}

#[test]
fn invalid_input_exits_with_two() {
    assert_eq!(isoparity(&["chi", "--file", "/nonexistent/instance.json"]).status.code(), Some(2));
    assert_eq!(isoparity(&["verify", "no-such-suite"]).status.code(), Some(2));
    assert_eq!(isoparity(&["brauer", "find", "--group", "A7"]).status.code(), Some(2));
    let bad = scratch("bad_action.json", r#"{"p":"3","exponents":[1],"action":{"rows":1,"cols":1,"entries":[["3"]]}}"#);
    assert_eq!(isoparity(&["chi", "--file", bad.to_str().unwrap()]).status.code(), Some(2));
    let o = isoparity(&["brauer", "regulator", "--group", "S3", "--relation", "C2-C3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn prop35_run_reports_json() {
    let o = isoparity(&["--json", "verify", "prop35", "--seed", "7", "--trials", "200", "--p", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let report: VerifyReport = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!((report.trials, report.passed), (200, 200));
    assert!(report.failures.is_empty());
    let again = serde_json::to_value(&report).unwrap();
    assert_eq!(again, serde_json::from_slice::<Value>(&o.stdout).unwrap());
}

#[test]
fn seeded_runs_are_byte_identical_across_job_counts() {
    let args = |jobs: &'static str| ["--json", "verify", "lemma32", "--seed", "21", "--trials", "30", "--jobs", jobs];
    let a = isoparity(&args("1"));
    let b = isoparity(&args("3"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let human = |jobs| isoparity(&["verify", "ex26", "--seed", "4", "--trials", "50", "--jobs", jobs]).stdout;
    assert_eq!(human("1"), human("2"));
}

#[test]
fn failure_reports_replay_to_the_same_failure() {
    let report = r#"{
        "suite": "lemma23",
        "seed": 0,
        "config": {"seed": 0, "p": 5, "max_rank": 5, "max_n": 6, "max_exponent": 4, "coefficient_bound": 3, "trials": 1, "retry_budget": 1000},
        "replay": false,
        "trials": 1,
        "passed": 0,
        "nontrivial": 1,
        "retries": 0,
        "strategies": {},
        "failures": [{
            "trial": 0,
            "instance": {"kind": "pgroup", "instance": {"p": "5", "exponents": [1], "action": {"rows": 1, "cols": 1, "entries": [["2"]]}}},
            "lhs": "2",
            "rhs": "4",
            "details": null
        }]
    }"#;
    let path = scratch("non_involution_report.json", report);
    let out_path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("non_involution_replay.json");
    let o = isoparity(&[
        "--json",
        "verify",
        "lemma23",
        "--replay",
        path.to_str().unwrap(),
        "--report",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let first: VerifyReport = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(first.failures.len(), 1);
    assert_eq!((first.failures[0].lhs.as_str(), first.failures[0].rhs.as_str()), ("2", "4"));

    let o2 = isoparity(&["--json", "verify", "lemma23", "--replay", out_path.to_str().unwrap()]);
    assert_eq!(o2.status.code(), Some(1));
    assert_eq!(o.stdout, o2.stdout);

    let wrong = isoparity(&["verify", "lemma25", "--replay", path.to_str().unwrap()]);
    assert_eq!(wrong.status.code(), Some(2));
}

#[test]
fn realize_and_regulator_commands() {
    let o = isoparity(&["--json", "brauer", "realize", "--group", "C2xC2", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_ne!(v["realization"]["determinant"], "0", "{v}");

    let o = isoparity(&["--json", "brauer", "regulator", "--group", "S3", "--rep", "trivial"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["constants"][0]["class"], "3", "{v}");
}

#[test]
fn tau_reports_pass() {
    let o = isoparity(&["brauer", "tau", "--group", "D10", "--p", "5", "--seed", "2", "--sums", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("20/20"));
}

#[test]
fn randomized_commands_print_their_seed() {
    let o = isoparity(&["verify", "ex26", "--trials", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.lines().any(|l| l.starts_with("seed: ")), "{err}");
}

#[test]
fn large_integers_are_abbreviated_only_in_human_output() {
    let phi = r#"{"phi":{"rows":1,"cols":1,"entries":[["123456789012345678901"]]}}"#;
    let path = scratch("big_zfun.json", phi);
    let human = stdout(&isoparity(&["zfun", "--file", path.to_str().unwrap()]));
    assert!(human.contains("123456…(21 digits)"), "{human}");
    let json = stdout(&isoparity(&["--json", "zfun", "--file", path.to_str().unwrap()]));
    assert!(json.contains("123456789012345678901"), "{json}");
}
