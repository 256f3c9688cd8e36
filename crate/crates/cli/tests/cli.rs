//! End-to-end runs of the `tracecount` binary on the files in `data/`.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tracecount::dnf::Dnf;
use tracecount::exact::count_exact_nf;
use tracecount::Nfa;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tracecount"))
        .args(args)
        .env_remove("TRACECOUNT_THREADS")
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn sample_lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn count_exact_on_data_files() {
    let intro = data("intro.json");
    let v = ok_json(&["count-exact", path(&intro), "-n", "6"]);
    assert_eq!(v["result"]["count"], 2);
    assert_eq!(v["command"], "count-exact");
    assert_eq!(v["input_sha256"].as_str().unwrap().len(), 64);
    let figure = data("figure.json");
    for method in ["nf-enum", "word-enum"] {
        let v = ok_json(&["count-exact", path(&figure), "-n", "4", "--method", method]);
        assert_eq!(v["result"]["count"], 16, "{method}");
    }
}

#[test]
fn count_reports_estimate_and_params() {
    let f = data("three_traces.json");
    let v = ok_json(&["count", path(&f), "-n", "3", "--seed", "7", "--beta", "50", "--gamma", "3", "--xi", "3"]);
    assert_eq!(v["seed"], 7);
    assert_eq!(v["params"]["beta"], 50);
    assert_eq!(v["result"]["runs"].as_array().unwrap().len(), 3);
    let est: Vec<f64> = v["result"]["estimate"]
        .as_str()
        .unwrap()
        .split('/')
        .map(|x| x.parse().unwrap())
        .collect();
    let est = if est.len() == 2 { est[0] / est[1] } else { est[0] };
    assert!((1.0..=6.0).contains(&est), "{est}");
}

#[test]
fn count_on_empty_slice_is_zero() {
    let v = ok_json(&["count", path(&data("figure.json")), "-n", "3"]);
    assert_eq!(v["result"]["estimate"], "0/1");
}

#[test]
fn count_is_deterministic_across_thread_counts() {
    let f = data("three_traces.json");
    let args = ["count", path(&f), "-n", "3", "--seed", "11", "--beta", "40", "--gamma", "3", "--xi", "4"];
    let one = ok_json(&[&["--threads", "1"], &args[..]].concat());
    let four = ok_json(&[&["--threads", "4"], &args[..]].concat());
    assert_eq!(one["result"], four["result"]);
}

#[test]
fn instrumented_count_writes_sample_sets() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("trace.jsonl");
    let f = data("three_traces.json");
    let args = ["count", path(&f), "-n", "3", "--seed", "3", "--beta", "8", "--gamma", "1", "--xi", "1"];
    let plain = ok_json(&args);
    let traced = ok_json(&[&args[..], &["--engine", "replica", "--trace-instrument", log.to_str().unwrap()]].concat());
    assert_eq!(plain["result"], traced["result"]);
    let text = std::fs::read_to_string(&log).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!lines.is_empty());
    assert!(lines.iter().all(|l| l["samples"].as_array().unwrap().len() == 8));
}

#[test]
fn sample_single_trace_with_exact_counter() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("single.json");
    std::fs::write(
        &f,
        r#"{"alphabet":["a","b"],"independence":[["a","b"]],"states":[0,1,2],"initial":0,
            "finals":[2],"transitions":[[0,"b",1],[1,"a",2]]}"#,
    )
    .unwrap();
    let out = run(&["sample", path(&f), "-n", "2", "--count", "20", "--counter", "exact", "--seed", "5"]);
    assert!(out.status.success());
    let lines = sample_lines(&out);
    assert_eq!(lines.len(), 20);
    for (i, l) in lines.iter().enumerate() {
        assert_eq!(l["index"], i);
        // the only trace, reported by its normal form
        assert!(l["bottom"] == true || l["sample"] == "ab", "{l}");
    }
    assert!(lines.iter().any(|l| l["sample"] == "ab"));
}

#[test]
fn sample_is_deterministic_across_thread_counts() {
    let f = data("three_traces.json");
    let args = ["sample", path(&f), "-n", "3", "--count", "6", "--counter", "exact", "--seed", "9"];
    let one = run(&[&["--threads", "1"], &args[..]].concat());
    let three = run(&[&["--threads", "3"], &args[..]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, three.stdout);
    for l in sample_lines(&one) {
        if let Some(s) = l["sample"].as_str() {
            assert!(["aaa", "aab", "bbb"].contains(&s), "{s}");
        }
    }
}

#[test]
fn sample_count_zero_prints_nothing() {
    let out = run(&["sample", path(&data("three_traces.json")), "-n", "3", "--count", "0"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
}

#[test]
fn member_and_nf() {
    let f = data("abc_loop.json");
    let v = ok_json(&["member", path(&f), "--word", "cab"]);
    assert_eq!(v["result"]["member"], true);
    let v = ok_json(&["member", path(&f), "--word", "aab"]);
    assert_eq!(v["result"]["member"], false);
    let v = ok_json(&["nf", "--alphabet", path(&f), "bacc"]);
    assert_eq!(v["result"]["normal_form"], "abcc");
}

#[test]
fn reduce_dnf_output_counts_models() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["x1.dnf", "three_terms.dnf"] {
        let out = dir.path().join(format!("{name}.json"));
        let status = run(&["reduce-dnf", path(&data(name)), "-o", out.to_str().unwrap()]).status;
        assert!(status.success());
        let nfa = Nfa::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
        let phi = Dnf::parse(&std::fs::read_to_string(data(name)).unwrap()).unwrap();
        assert_eq!(count_exact_nf(&nfa, phi.slice_length()).unwrap(), phi.model_count().unwrap(), "{name}");
    }
}

#[test]
fn prefix_automaton_is_valid_json() {
    let out = run(&["prefix-automaton", "--alphabet", path(&data("abc_loop.json")), "ab"]);
    assert!(out.status.success());
    let nfa = Nfa::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert!(nfa.is_deterministic());
    let w = |s: &str| nfa.alphabet().parse_word(s).unwrap();
    assert!(nfa.accepts(&w("ba")));
    assert!(!nfa.accepts(&w("aa")));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let f = data("three_traces.json");
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&["count-exact", missing.to_str().unwrap(), "-n", "2"]), 1);
    assert_eq!(code(&["count-exact", path(&f)]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["count-exact", bad.to_str().unwrap(), "-n", "2"]), 3);
    assert_eq!(code(&["member", path(&f), "--word", "abz"]), 3);
    assert_eq!(code(&["count", path(&f), "-n", "3", "--epsilon", "2"]), 4);
    assert_eq!(code(&["count-exact", path(&f), "-n", "3", "--budget", "2"]), 6);
    assert_eq!(code(&["sample", path(&data("figure.json")), "-n", "3"]), 7);
}
