use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn society(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_society"))
        .args(args)
        .output()
        .expect("spawn society")
}

fn ok(args: &[&str]) -> PathBuf {
    let out = society(args);
    assert!(
        out.status.success(),
        "society {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    PathBuf::from(String::from_utf8(out.stdout).unwrap().trim())
}

fn summary(dir: &Path) -> Vec<serde_json::Value> {
    fs::read_to_string(dir.join("summary.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn write_config(dir: &Path, agents: usize, rounds: u32) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(
        &path,
        format!("[society]\nagents = {agents}\nk = 4\np = 0.1\nseed = 3\n\n[run]\nrounds = {rounds}\nseed = 9\n"),
    )
    .unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_graph_writes_half_nk_edges_reproducibly() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let args = ["gen-graph", "--n", "1000", "--k", "10", "--p", "0.1", "--seed", "7"];
    ok(&[&["--run-dir", s(&a)], &args[..]].concat());
    ok(&[&["--run-dir", s(&b)], &args[..]].concat());
    let edges = fs::read(a.join("edges.txt")).unwrap();
    let text = String::from_utf8(edges.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "1000 10 0.1 7 small_world");
    assert_eq!(lines.count(), 5000);
    assert_eq!(edges, fs::read(b.join("edges.txt")).unwrap());
    assert_eq!(summary(&a)[0]["edges"], 5000);
    assert_eq!(fs::read(a.join("MANIFEST")).unwrap(), fs::read(b.join("MANIFEST")).unwrap());
}

#[test]
fn gen_graph_rejects_bad_probability() {
    let out = society(&["--out-dir", "/nonexistent-unused", "gen-graph", "--p", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`p`"), "{err}");
}

#[test]
fn stub_run_logs_one_decision_per_agent_round() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), 10, 2);
    let dir = ok(&["--out-dir", s(tmp.path()), "run", s(&cfg)]);
    assert!(dir.starts_with(tmp.path()));
    let log = fs::read_to_string(dir.join("events.jsonl")).unwrap();
    let decisions = log.lines().filter(|l| l.contains("\"kind\":\"decision\"")).count();
    assert_eq!(decisions, 20);
    assert_eq!(summary(&dir)[0]["decisions"], 20);
    for f in ["config.toml", "meter.json", "snapshot.snap", "personas.jsonl", "MANIFEST"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
}

#[test]
fn missing_config_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let out = society(&["--out-dir", s(tmp.path()), "run", s(&tmp.path().join("absent.toml"))]);
    assert!(!out.status.success());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn invalid_config_is_a_user_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[memory]\nbeta = -1.0\n").unwrap();
    let out = society(&["--out-dir", s(tmp.path()), "run", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn resume_matches_uninterrupted_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), 20, 4);
    let full = tmp.path().join("full");
    let half = tmp.path().join("half");
    let rest = tmp.path().join("rest");
    ok(&["--run-dir", s(&full), "run", s(&cfg)]);
    ok(&["--run-dir", s(&half), "run", s(&cfg), "--stop-after", "2"]);
    assert_eq!(summary(&half)[0]["rounds_completed"], 2);
    ok(&["--run-dir", s(&rest), "run", "--resume", s(&half.join("snapshot.snap"))]);
    assert_eq!(
        fs::read(full.join("events.jsonl")).unwrap(),
        fs::read(rest.join("events.jsonl")).unwrap()
    );
    assert_eq!(
        fs::read(full.join("meter.json")).unwrap(),
        fs::read(rest.join("meter.json")).unwrap()
    );
}

#[test]
fn ground_truth_purchase_eval_is_perfect() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = ok(&["--out-dir", s(tmp.path()), "eval-purchase", "--policy", "ground-truth", "--users", "50"]);
    let rows = summary(&dir);
    assert_eq!(rows.len(), 4);
    for r in rows {
        assert_eq!(r["accuracy"], 100.0, "{r}");
    }
    let csv = fs::read_to_string(dir.join("accuracy.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn malformed_setting_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = society(&["--out-dir", s(tmp.path()), "eval-purchase", "--settings", "3@3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pmi_on_empty_ledger_fails_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let ledger = tmp.path().join("empty.jsonl");
    fs::write(&ledger, "").unwrap();
    let out = society(&["--out-dir", s(tmp.path()), "eval-pmi", "--ledger", s(&ledger)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));
}

#[test]
fn pmi_from_purchase_log() {
    let tmp = tempfile::tempdir().unwrap();
    let ledger = tmp.path().join("ledger.jsonl");
    let catalog = agent_society::sandbox::fixtures::catalog();
    let ids: Vec<_> = catalog.products().iter().take(6).map(|p| p.product_id.clone()).collect();
    let mut text = String::new();
    for u in 0..8 {
        for (t, id) in ids.iter().enumerate().skip(u % 3).step_by(2) {
            text.push_str(&format!("{{\"user_id\":\"u{u}\",\"product_id\":\"{id}\",\"timestamp\":{t}}}\n"));
        }
    }
    fs::write(&ledger, text).unwrap();
    let dir = ok(&["--out-dir", s(tmp.path()), "eval-pmi", "--ledger", s(&ledger)]);
    assert_eq!(summary(&dir)[0]["symmetric"], true);
    assert!(dir.join("pmi.csv").exists());
}

#[test]
fn network_eval_reports_three_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = ok(&[
        "--out-dir",
        s(tmp.path()),
        "eval-network",
        "--n",
        "300",
        "--k",
        "6",
        "--seeds",
        "4",
        "--rounds",
        "4",
    ]);
    let csv = fs::read_to_string(dir.join("network.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "round,random,small_world,ring_lattice");
    assert_eq!(lines.count(), 5);
    let s = &summary(&dir)[0];
    assert_eq!(s["mean_reach"].as_array().unwrap().len(), 3);
    assert!(s["tests"]["random_gt_small_world"]["p_value"].is_number());
}

#[test]
fn token_eval_from_meter_exports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), 10, 2);
    let fast = ok(&["--run-dir", s(&tmp.path().join("fast")), "run", s(&cfg)]);
    let slow = ok(&[
        "--run-dir",
        s(&tmp.path().join("slow")),
        "run",
        s(&cfg),
        "--fast-memory",
        "false",
    ]);
    let dir = ok(&[
        "--out-dir",
        s(tmp.path()),
        "eval-tokens",
        "--with",
        s(&fast.join("meter.json")),
        "--without",
        s(&slow.join("meter.json")),
    ]);
    let row = &summary(&dir)[0];
    assert!(row["with_fast"].as_u64().unwrap() < row["without_fast"].as_u64().unwrap());
}

#[test]
fn concentration_eval_covers_each_scale() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = ok(&["--out-dir", s(tmp.path()), "eval-concentration", "--scales", "10,50", "--seeds", "2"]);
    let top1 = summary(&dir)[0]["top1"].as_array().unwrap().clone();
    assert_eq!(top1.len(), 2);
}

#[test]
fn replay_rederives_run_statistics() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), 10, 2);
    let run = ok(&["--run-dir", s(&tmp.path().join("run")), "run", s(&cfg)]);
    let dir = ok(&["--out-dir", s(tmp.path()), "replay", s(&run.join("events.jsonl"))]);
    let (r, s) = (&summary(&run)[0], &summary(&dir)[0]);
    assert_eq!(r["log_digest"], s["log_digest"]);
    assert_eq!(r["calls"], s["backend_calls"]);
    assert_eq!(r["tokens"], s["tokens"]);
}

#[test]
fn repeated_commands_reproduce_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), 12, 3);
    for (name, args) in [
        ("run", vec!["run", s(&cfg)]),
        ("purchase", vec!["eval-purchase", "--users", "40", "--settings", "1@6"]),
        ("network", vec!["eval-network", "--n", "200", "--k", "4", "--seeds", "3"]),
    ] {
        let a = tmp.path().join(format!("{name}-a"));
        let b = tmp.path().join(format!("{name}-b"));
        ok(&[&["--run-dir", s(&a)], &args[..]].concat());
        ok(&[&["--run-dir", s(&b)], &args[..]].concat());
        assert_eq!(
            fs::read(a.join("MANIFEST")).unwrap(),
            fs::read(b.join("MANIFEST")).unwrap(),
            "{name} outputs differ"
        );
    }
}
