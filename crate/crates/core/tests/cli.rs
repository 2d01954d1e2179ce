use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_robgame"))
}

fn games() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("games")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn example1() -> String {
    games().join("example1.json").display().to_string()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

const CASE3: [&str; 14] = [
    "--a", "10", "--bhat", "0.6", "--ghat", "0.8", "--blo", "0.2", "--bhi", "1.0", "--glo", "0.2", "--ghi", "1.4",
];

#[test]
fn solve_lists_seven_equilibria() {
    let out = run(&["solve", &example1(), "--delta", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let eqs = v["equilibria"].as_array().unwrap();
    assert_eq!(eqs.len(), 7);
    let symmetric = eqs.iter().filter(|e| e["profile"][0] == e["profile"][1]).count();
    assert_eq!(symmetric, 1);

    let out = run(&["solve", &example1(), "--delta", "0"]);
    let v = json(&out);
    assert_eq!(v["equilibria"].as_array().unwrap().len(), 1);
    assert_eq!(v["equilibria"][0]["profile"][0].as_f64().unwrap(), 0.727272727);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["solve", "/nonexistent/game.json"]).status.code(), Some(1));
    assert_eq!(run(&["sweep", &example1(), "--from", "0.8", "--to", "0.2"]).status.code(), Some(1));
    assert_eq!(run(&["solve"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"players\": 1}").unwrap();
    let out = run(&["solve", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    // A convex own-action payoff fails validation.
    let convex = dir.path().join("convex.json");
    std::fs::write(
        &convex,
        r#"{"players": 1, "player": [{"action": [0, 1], "payoff": {"const": "x1^2", "terms": []},
            "uncertainty": {"vertices": [[0], [1]], "nominal": [0.5]}, "delta": 1}]}"#,
    )
    .unwrap();
    assert_eq!(run(&["validate", convex.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["solve", convex.to_str().unwrap()]).status.code(), Some(2));

    // Not an equilibrium.
    assert_eq!(run(&["trace", &example1(), "--start", "0.3,0.3"]).status.code(), Some(2));
}

#[test]
fn validate_example_is_clean() {
    let out = run(&["validate", &example1()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["findings"].as_array().unwrap().len(), 0);
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for k in 0..2 {
        let path = dir.path().join(format!("sweep{k}.csv"));
        let out = run(&[
            "sweep",
            &example1(),
            "--from",
            "0",
            "--to",
            "1",
            "--steps",
            "11",
            "--format",
            "csv",
            "--output",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        files.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let text = String::from_utf8(files.remove(0)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("delta,eq_index,player,action"));
    let last_block: Vec<_> = lines.filter(|l| l.starts_with("1,")).collect();
    let indices: std::collections::BTreeSet<_> = last_block.iter().map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(indices.len(), 7);
}

#[test]
fn single_level_sweep() {
    let out = run(&["sweep", &example1(), "--from", "0", "--to", "0", "--steps", "1", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "delta,eq_index,player,action\n0,0,1,0.727272727\n0,0,2,0.727272727\n");
}

#[test]
fn verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = run(&["solve", &example1(), "--output", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["solve", &example1(), "--verify", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["ok"], Value::Bool(true));
    assert_eq!(v["checks"].as_array().unwrap().len(), 7);

    // The same profiles are not equilibria of the nominal game.
    let out = run(&["solve", &example1(), "--delta", "0", "--verify", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cournot_subcommands() {
    let mut args = vec!["cournot", "roe-set"];
    args.extend(CASE3);
    args.extend(["--delta", "0.9"]);
    let v = json(&run(&args));
    assert_eq!(v["case"], "3iii");
    assert_eq!(v["equilibria"].as_array().unwrap().len(), 3);
    assert_eq!(v["equilibria"][0]["q"][0].as_f64().unwrap(), 4.01606426);

    let mut args = vec!["cournot", "delta-star"];
    args.extend(CASE3);
    let v = json(&run(&args));
    assert_eq!(v["delta_star"].as_f64().unwrap(), 0.714285714);

    let mut args = vec!["cournot", "nash", "--format", "csv"];
    args.extend(CASE3);
    assert_eq!(String::from_utf8(run(&args).stdout).unwrap(), "name,value\nq1,5\nq2,5\n");

    let mut args = vec!["cournot", "thresholds"];
    args.extend(CASE3);
    args.extend(["--delta", "0.9"]);
    let v = json(&run(&args));
    assert_eq!(v["q_lo"].as_f64().unwrap(), 3.18471338);

    let mut args = vec!["cournot", "reaction", "--q", "4"];
    args.extend(CASE3);
    args.extend(["--delta", "0.9"]);
    assert_eq!(json(&run(&args))["reaction"].as_f64().unwrap(), 6.0);

    let mut args = vec!["cournot", "profit", "--qi", "0", "--qopp", "3"];
    args.extend(CASE3);
    assert_eq!(json(&run(&args))["profit"].as_f64().unwrap(), 0.0);

    let mut args = vec!["cournot", "nash", "--bhi", "0.1"];
    args.extend(&CASE3[..8]);
    args.extend(["--glo", "0.2", "--ghi", "1.4"]);
    assert_eq!(run(&args).status.code(), Some(1));
}

#[test]
fn cost_embed_frontier_trace() {
    let v = json(&run(&["cost", &example1(), "--player", "1", "--profile", "0,0.727272727272727"]));
    let c = &v["costs"][0];
    assert_eq!(c["player"], 1);
    assert!((c["opportunity_cost"].as_f64().unwrap() - 0.044628).abs() < 1e-5);
    assert!((c["upper_bound"].as_f64().unwrap() - 0.288).abs() < 1e-9);

    let v = json(&run(&["embed", &example1(), "--profile", "1,0.5", "--eps", "0.004167", "--h", "1"]));
    assert!(v["residual"].as_f64().unwrap() <= 1e-9);
    assert_eq!(v["delta"].as_f64().unwrap(), 0.004167);
    // (1, 0.5) is not a 0.001-Nash point of the nominal game.
    assert_eq!(
        run(&["embed", &example1(), "--profile", "1,0.5", "--eps", "0.001", "--h", "1"]).status.code(),
        Some(2)
    );

    let v = json(&run(&["frontier", &example1(), "--player", "2", "--resolution", "5"]));
    assert_eq!(v["player"], 2);
    assert_eq!(v["vertices"].as_array().unwrap().len(), 2);

    let out = run(&["trace", &example1(), "--start", "0.916666666666667,0.916666666666667", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("delta,epsilon\n1,"));
    assert!(text.ends_with("\n0,0\n"), "{text}");

    let v = json(&run(&["trace", &example1(), "--start", "1,0.5"]));
    assert_eq!(v["path"]["status"]["status"], "broken");
    assert_eq!(v["cost_probe"], Value::Null);
}
