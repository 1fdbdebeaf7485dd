use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use arbor::groups::GroupJson;
use arbor::stallings::GraphJson;
use arbor::LabeledGraph;
use serde_json::Value;

fn arbor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arbor")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: stdout={} stderr={}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fold_core_member() {
    let dir = tempfile::tempdir().unwrap();
    let core = dir.path().join("core.json");
    let dot = dir.path().join("core.dot");
    let out = arbor(&["core", "--gens", "a a", "a b a^-1", "--graph-out", path(&core), "--dot", path(&dot)]);
    assert!(out.status.success());
    let r = report(&out);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["vertices"], 2);
    assert_eq!(r["edges"], 3);
    assert!(fs::read_to_string(&dot).unwrap().starts_with("digraph"));

    // Emitted graph JSON re-parses to the same graph.
    let json: GraphJson = serde_json::from_str(&fs::read_to_string(&core).unwrap()).unwrap();
    let g = LabeledGraph::from_json(&json).unwrap();
    assert_eq!(serde_json::to_value(g.to_json()).unwrap(), r["graph"]);

    let r = report(&arbor(&["member", path(&core), "b", "a^-1 a", "a b b a^-1"]));
    let verdicts: Vec<bool> = r["results"].as_array().unwrap().iter().map(|x| x["member"].as_bool().unwrap()).collect();
    assert_eq!(verdicts, [false, true, true]);

    let r = report(&arbor(&["fold", path(&core)]));
    assert_eq!(r["folded"], true);
    let r = report(&arbor(&["fold", "--gens", "a a", "a b a^-1"]));
    assert_eq!(r["vertices"], 2);
}

#[test]
fn input_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"alphabet\": [\"a\", \"b\"],\n  \"vertices\": [0],\n  \"edges\": [{\"src\": 0, \"label\": \"z\", \"dst\": 0}]\n}\n").unwrap();
    let out = arbor(&["fold", path(&bad)]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("edges[0].label"), "{err}");

    fs::write(&bad, "{\n  \"vertices\": [0,\n").unwrap();
    let out = arbor(&["fold", path(&bad)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    assert_eq!(arbor(&["dissolve", "--H", "nope", "--G", "C2xC2"]).status.code(), Some(3));
    assert_eq!(arbor(&["extend", "C2xC2"]).status.code(), Some(3));
    assert_eq!(arbor(&["fold", "--no-such-flag"]).status.code(), Some(3));
    assert_eq!(arbor(&["--help"]).status.code(), Some(0));
}

#[test]
fn budget_exit_2() {
    let out = arbor(&["group", "S4", "--budget-enum", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let out = arbor(&["tower", "--base", "C2xC2", "--primes", "2,2", "--mode", "exhaustive"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["budget_exceeded"], true);
}

#[test]
fn group_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("d4.json");
    let r = report(&arbor(&["group", "D4", "--json-out", path(&file)]));
    assert_eq!(r["order"], 8);
    let again = report(&arbor(&["group", path(&file)]));
    assert_eq!(again["order"], 8);
    assert_eq!(again["group"], r["group"]);
    let parsed: GroupJson = serde_json::from_str(&fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!(serde_json::to_value(parsed).unwrap(), r["group"]);
    let r = report(&arbor(&["group", "C2xC2^C2"]));
    assert_eq!(r["order"], 128);
}

#[test]
fn extend_examples() {
    let r = report(&arbor(&["extend", "C2xC2", "--p", "2", "--eq", "a b", "b a", "--word", "a b"]));
    assert_eq!(r["order"], "128");
    assert_eq!(r["equalities"][0]["equal"], false);
    assert_eq!(r["words"][0]["cocycle"].as_array().unwrap().len(), 2);
    let r = report(&arbor(&["extend", "C2xC2", "--S", "A5", "--eq", "a b", "b a"]));
    assert_eq!(r["equalities"][0]["distinct"], true);
    let r = report(&arbor(&["extend", "C2xC2", "--S", "C2", "--exact", "--eq", "a a a a", ""]));
    assert_eq!(r["equalities"][0]["distinct"], false);
    // Non-separated base: warning, but the extension is still computed.
    let out = arbor(&["extend", "C2", "--p", "2"]);
    assert!(out.status.success());
    assert!(report(&out)["warning"].is_string());
}

#[test]
fn tower_dissolve_rz() {
    let out = arbor(&["tower", "--base", "C2xC2", "--primes", "2", "--mode", "exhaustive"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["passed"], true);

    let out = arbor(&["tower", "--base", "C2xC2", "--primes", "2", "--identity"]);
    assert_eq!(out.status.code(), Some(1));

    let out = arbor(&["dissolve", "--H", "C2xC2", "--G", "C2xC2"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert!(r["counterexamples"].as_u64().unwrap() > 0);
    assert_eq!(r["failures"][0]["verdict"], "counterexample");

    let out = arbor(&["dissolve", "--H", "C2xC2^C2", "--G", "C2xC2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["complete_proof"], true);

    let r = report(&arbor(&["rz", "--h1", "a", "--h2", "b", "--w", "b a"]));
    assert_eq!(r["member"], false);
    assert_eq!(r["status"], "separated");
    assert_eq!(r["separated_at"], 1);
    let r = report(&arbor(&["rz", "--h1", "a", "--h2", "b", "--w", "a b"]));
    assert_eq!(r["status"], "member");
    assert_eq!(r["factorization"], serde_json::json!(["a", "b"]));
}

#[test]
fn config_file_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tower.toml");
    fs::write(&cfg, "base = \"C2xC2\"\nprimes = [2, 2]\nsamples = 300\nmax_len = 8\nseed = 7\n").unwrap();
    let args = ["tower", "--config", path(&cfg), "--mode", "sampled"];
    let (a, b) = (arbor(&args), arbor(&args));
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
    let r = report(&a);
    assert_eq!(r["seed"], 7);
    assert_eq!(r["levels"][1]["outcome"], "pair_sample");

    fs::write(&cfg, "base = \"C2xC2\"\nprimes = [2]\nbogus = 1\n").unwrap();
    assert_eq!(arbor(&["tower", "--config", path(&cfg)]).status.code(), Some(3));
}
