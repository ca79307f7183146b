use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_junta-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("junta-lab-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path
}

#[test]
fn stab_of_majority_at_zero() {
    let out = lab(&["stab", "--g", "maj", "--k", "3", "--mu", "0", "--rho", "0,0,0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["result"]["value"].as_f64(), Some(0.0));
}

#[test]
fn rho_out_of_range_is_a_usage_error() {
    let out = lab(&["stab", "--rho", "0,1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("rho_2") && err.contains("[0,1]"), "{err}");
}

#[test]
fn counterexample_one() {
    let out = lab(&["counterexample", "1", "--k", "3", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out);
    assert_eq!(v["result"]["quantities"]["equal_split_error"].as_f64(), Some(0.5));
}

#[test]
fn counterexamples_two_and_three_pass() {
    let two = lab(&["counterexample", "2", "--n", "10", "--k", "3", "--seed", "4"]);
    assert_eq!(two.status.code(), Some(0));
    let three = lab(&["counterexample", "3"]);
    assert_eq!(three.status.code(), Some(0));
    let gap = report(&three)["result"]["quantities"]["gap"].as_f64().unwrap();
    assert!((gap - 1.0 / 80.0).abs() < 1e-12);
    assert_eq!(lab(&["counterexample", "4"]).status.code(), Some(2));
}

#[test]
fn sampled_reports_are_reproducible() {
    let args = ["stab", "--g", "xor", "--k", "4", "--rho", "0.3,0.6,0.9,1", "--kind", "sampled", "--samples", "50000", "--seed", "7"];
    let a = lab(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_junta-lab"))
        .args(args)
        .env("RAYON_NUM_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
    assert!(report(&a)["result"]["stderr"].as_f64().unwrap() > 0.0);
}

#[test]
fn floats_round_trip() {
    let out = lab(&["stab", "--g", "maj", "--k", "5", "--mu", "0.3", "--rho", "0.1,0.2,0.3,0.4,0.5"]);
    let text = String::from_utf8(out.stdout).unwrap();
    // 17 significant digits in scientific notation
    assert!(text.contains("e-1") || text.contains("e0"), "{text}");
    let v: Value = serde_json::from_str(&text).unwrap();
    assert!(v["result"]["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn junta_rows_from_files() {
    let f = scratch("f.txt", "n=3\n-+++-+++\n");
    let d = scratch("d.txt", "n=3\n0.125 0.125 0.125 0.125 0.125 0.125 0.125 0.125\n");
    let out = lab(&["junta", "--f", f.to_str().unwrap(), "--dist", d.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows = report(&out)["result"]["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[2]["error"].as_f64(), Some(0.0));
    assert_eq!(rows[2]["coords"], serde_json::json!([1, 2]));
}

#[test]
fn bad_file_line_is_named() {
    let f = scratch("bad.txt", "n=2\n+-x+\n");
    let out = lab(&["junta", "--f", f.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn compose_checks() {
    for check in ["sandwich", "error4", "xorbound"] {
        let out = lab(&["compose", "--g", "maj", "--k", "3", "--f", "xor", "--n", "3", "--budget", "6", "--check", check]);
        assert_eq!(out.status.code(), Some(0), "{check}");
    }
    let v = report(&lab(&["compose", "--g", "maj", "--k", "3", "--f", "xor", "--n", "3", "--budget", "6"]));
    assert_eq!(v["result"]["canonical_adv"].as_f64(), Some(0.5));
}

#[test]
fn boost_modes() {
    let yes = lab(&["boost", "--f", "dict:2", "--n", "3", "--k", "4"]);
    assert_eq!(yes.status.code(), Some(0));
    let v = report(&yes);
    assert_eq!(v["result"]["verdict"], "Yes");
    assert_eq!(v["result"]["inner_queries"].as_u64(), Some(4 * 4096));
    let no = lab(&["boost", "--f", "xor", "--n", "3", "--k", "4"]);
    assert_eq!(report(&no)["result"]["verdict"], "No");
    let plan = lab(&["boost", "--mode", "tolerant-plan", "--eps", "0.03", "--r", "2"]);
    assert_eq!(plan.status.code(), Some(0));
    assert_eq!(report(&plan)["result"]["k"].as_u64(), Some(8));
}

#[test]
fn setcover_round() {
    let input = scratch("sc.txt", "3 3\n1 2\n3\n2\n");
    let out = lab(&["reduce-setcover", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out);
    assert_eq!(v["result"]["cover"], serde_json::json!([1, 2]));
    assert!(v["result"]["error_below_cover_size"].as_f64().unwrap() >= 0.25);
    let bad = scratch("sc_bad.txt", "3 1\n1 4\n");
    let out = lab(&["reduce-setcover", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn text_format_and_help() {
    let out = lab(&["counterexample", "1", "--format", "text"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("result.quantities.equal_split_error = 5.0000000000000000e-1"));
    for sub in ["stab", "junta", "compose", "boost", "reduce-setcover", "counterexample"] {
        let help = lab(&[sub, "--help"]);
        assert_eq!(help.status.code(), Some(0), "{sub}");
        assert!(!help.stdout.is_empty());
    }
}
