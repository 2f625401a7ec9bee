use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn hhh(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hhh"))
        .args(args)
        .current_dir(dir)
        .env_remove("HHH_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = hhh(args, dir);
    assert!(
        out.status.success(),
        "hhh {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn error_kind(out: &Output) -> String {
    let line = String::from_utf8_lossy(&out.stderr);
    let doc: Value = serde_json::from_str(line.lines().last().unwrap()).unwrap();
    doc["error"]["kind"].as_str().unwrap().to_string()
}

/// The two-dimensional worked example: one pair seen ten times, then three
/// families of ten pairs that share generalizations. Letters are the byte
/// values 10 onwards.
fn pair_families_trace() -> String {
    let mut s = String::from("10.11.12.13,32.33.34.35,10\n");
    for i in 0..10 {
        s += &format!("10.11.12.{i},32.33.34.{i}\n");
        s += &format!("10.11.{i}.13,32.33.34.{i}\n");
        s += &format!("10.11.12.{i},32.{i}.34.35\n");
    }
    s
}

#[test]
fn pair_families_end_to_end() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    std::fs::write(p.join("pairs.csv"), pair_families_trace()).unwrap();
    let common = ["--dim", "2", "--format", "csv2d", "-i", "pairs.csv"];

    let mut run = vec!["run", "-e", "0.1", "-p", "0.25", "-o", "r.json"];
    run.extend(common);
    ok(&run, p);

    let mut oracle = vec!["oracle", "--report", "r.json"];
    oracle.extend(common);
    let doc: Value = serde_json::from_str(&ok(&oracle, p)).unwrap();
    assert_eq!(doc["n"], 40);
    assert_eq!(doc["threshold"], 10);
    assert_eq!(doc["verdict"]["pass"], true);
    let mut exact: Vec<&str> = doc["exact"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["prefix"].as_str().unwrap())
        .collect();
    exact.sort();
    assert_eq!(
        exact,
        [
            "(10.11.*.*,32.33.34.*)",
            "(10.11.12.*,32.*.*.*)",
            "(10.11.12.*,32.33.34.*)",
            "(10.11.12.13,32.33.34.35)",
        ]
    );

    let mut compare = vec!["compare", "--report", "r.json"];
    compare.extend(&common[4..]);
    let cmp: Value = serde_json::from_str(&ok(&compare, p)).unwrap();
    assert_eq!(cmp["pass"], true);
    assert_eq!(cmp["missed"], 0);
    assert!(cmp["relative_error"].as_f64().unwrap() <= 1.0);
}

#[test]
fn runs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let gen = ["gen", "--family", "zipf", "--n", "5000", "--seed", "9"];
    let a = ok(&gen, p);
    assert_eq!(a, ok(&gen, p));
    std::fs::write(p.join("t.csv"), &a).unwrap();

    let run = ["run", "-i", "t.csv", "-e", "0.01", "-p", "0.05", "--mode", "unitary"];
    let r1 = ok(&run, p);
    assert_eq!(r1, ok(&run, p));
    let mut par = run.to_vec();
    par.push("--parallel");
    assert_eq!(r1, ok(&par, p));

    let tcam = ["tcam", "-i", "t.csv", "-e", "0.02"];
    assert_eq!(ok(&tcam, p), ok(&tcam, p));
}

#[test]
fn seed_comes_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let run = |seed: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_hhh"));
        cmd.args(["gen", "--family", "uniform", "--n", "20"]).env_remove("HHH_SEED");
        if let Some(s) = seed {
            cmd.env("HHH_SEED", s);
        }
        cmd.current_dir(dir.path()).output().unwrap().stdout
    };
    assert_eq!(run(Some("3")), ok(&["gen", "--family", "uniform", "--n", "20", "--seed", "3"], dir.path()).into_bytes());
    assert_ne!(run(Some("3")), run(Some("4")));
}

#[test]
fn merge_of_split_stream() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    for (name, seed) in [("a.csv", "1"), ("b.csv", "2")] {
        let t = ok(&["gen", "--family", "zipf", "--n", "4000", "--seed", seed], p);
        std::fs::write(p.join(name), t).unwrap();
    }
    for (input, state) in [("a.csv", "a.state"), ("b.csv", "b.state")] {
        ok(&["run", "-i", input, "-e", "0.01", "-p", "0.1", "-o", "/dev/null", "--save-state", state], p);
    }
    let doc: Value = serde_json::from_str(&ok(
        &["merge", "a.state", "b.state", "-o", "m.state", "-p", "0.1", "--report", "m.json"],
        p,
    ))
    .unwrap();
    assert_eq!(doc["inputs"], 2);
    assert_eq!(doc["n"], 8000);
    assert_eq!(doc["epsilon_effective"], "0.03");
    assert!(doc["max_width_over_n"].as_f64().unwrap() <= 0.03);

    // The merged report holds against the concatenated stream.
    let both = std::fs::read_to_string(p.join("a.csv")).unwrap() + &std::fs::read_to_string(p.join("b.csv")).unwrap();
    std::fs::write(p.join("ab.csv"), both).unwrap();
    let v: Value = serde_json::from_str(&ok(&["oracle", "-i", "ab.csv", "--report", "m.json"], p)).unwrap();
    assert_eq!(v["verdict"]["pass"], true);
}

#[test]
fn tcam_counts() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    std::fs::write(p.join("t.csv"), "0.0.0.1\n0.0.0.2\n0.0.0.3\n").unwrap();
    let doc: Value = serde_json::from_str(&ok(&["tcam", "-i", "t.csv", "-e", "0.6"], p)).unwrap();
    assert_eq!(doc["packets"], 3);
    assert_eq!(doc["instances"], 5);
    assert_eq!(doc["tag_bits"], 3);
    assert_eq!(doc["total_ops"], 5 * 2 + (4 * 3 + 3) + (4 * 3 + 4));
    assert_eq!(doc["max_ops_per_packet_instance"], 4);

    let doc: Value = serde_json::from_str(&ok(&["tcam", "-i", "t.csv", "-e", "0.6", "--exclude-root"], p)).unwrap();
    assert_eq!(doc["instances"], 4);
    assert_eq!(doc["tag_bits"], 2);

    std::fs::write(p.join("cost.json"), r#"{"min_refresh": {"reads": 0}}"#).unwrap();
    let doc: Value = serde_json::from_str(&ok(&["tcam", "-i", "t.csv", "-e", "0.6", "--cost-model", "cost.json"], p)).unwrap();
    // Free refreshes drop the two minimum reads.
    assert_eq!(doc["total_ops"], 41 - 2);
}

#[test]
fn errors_are_structured() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    std::fs::write(p.join("t.csv"), "1.2.3.4\n").unwrap();
    std::fs::write(p.join("bad.csv"), "1.2.3.4\n1.2.3\n").unwrap();

    let out = hhh(&["run", "-i", "t.csv", "-e", "1.5", "-p", "0.5"], p);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "invalid_epsilon");

    let out = hhh(&["run", "-i", "t.csv", "-e", "0.1", "-p", "0"], p);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "invalid_phi");

    let out = hhh(&["run", "-i", "bad.csv", "-e", "0.1", "-p", "0.5"], p);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "trace");

    let out = hhh(&["run", "-i", "missing.csv", "-e", "0.1", "-p", "0.5"], p);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "io");

    std::fs::write(p.join("junk.state"), "not a state").unwrap();
    let out = hhh(&["merge", "junk.state", "-o", "m.state"], p);
    assert_eq!(out.status.code(), Some(2));

    // A report that misses a heavy hitter fails the check with status 1.
    ok(&["run", "-i", "t.csv", "-e", "0.1", "-p", "0.5", "-o", "r.json"], p);
    let mut report: Value = serde_json::from_str(&std::fs::read_to_string(p.join("r.json")).unwrap()).unwrap();
    report["entries"] = Value::Array(vec![]);
    std::fs::write(p.join("r.json"), report.to_string()).unwrap();
    let out = hhh(&["compare", "-i", "t.csv", "--report", "r.json"], p);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_kind(&out), "check_failed");
}

#[test]
fn unitary_mode_expands_counts() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    std::fs::write(p.join("c.csv"), "10.1.2.3,5\n10.1.2.4\n").unwrap();
    std::fs::write(p.join("u.csv"), "10.1.2.3\n".repeat(5) + "10.1.2.4\n").unwrap();
    let run = |input: &str, mode: &str| ok(&["run", "-i", input, "-e", "0.1", "-p", "0.5", "--mode", mode], p);
    let expanded = run("c.csv", "unitary");
    assert_eq!(expanded, run("u.csv", "unitary"));
    assert_eq!(expanded, run("c.csv", "weighted"));
}
