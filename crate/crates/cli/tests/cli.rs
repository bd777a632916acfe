//! End-to-end runs of the `karel` binary.

use std::path::Path;
use std::process::{Command, Output};

fn karel(dir: &Path, workers: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_karel"))
        .current_dir(dir)
        .env("KAREL_WORKERS", workers)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn search_outputs_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["search", "--tasks", "maze,topoff", "--seeds", "0-3", "--k", "30", "--budget", "1500"];
    ok(karel(dir.path(), "1", &[&args[..], &["--out", "one"]].concat()));
    ok(karel(dir.path(), "3", &[&args[..], &["--out", "three"]].concat()));
    for ext in ["jsonl", "curve.csv", "summary.csv"] {
        let a = read(dir.path(), &format!("one.{ext}"));
        let b = read(dir.path(), &format!("three.{ext}"));
        // Only the recorded output prefix differs.
        let a = String::from_utf8(a).unwrap().replace("one", "X");
        let b = String::from_utf8(b).unwrap().replace("three", "X");
        assert_eq!(a, b, "{ext}");
    }
    let jsonl = String::from_utf8(read(dir.path(), "one.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 1 + 8);
    assert!(jsonl.lines().next().unwrap().starts_with(r#"{"header":"#));
}

#[test]
fn flags_override_config_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "n = 4\nseed = 9\n").unwrap();
    let text = ok(karel(dir.path(), "1", &["--config", "run.cfg", "sample", "--n", "2"]));
    assert!(text.contains("# n=2\n"));
    assert!(text.contains("# seed=9\n"));
    assert!(text.contains("# max_tokens=45\n"));
    assert_eq!(text.lines().filter(|l| l.starts_with("DEF")).count(), 2);
    // The same settings from the command line alone give the same programs.
    let direct = ok(karel(dir.path(), "1", &["sample", "--n", "2", "--seed", "9"]));
    let progs = |t: &str| t.lines().filter(|l| l.starts_with("DEF")).map(String::from).collect::<Vec<_>>();
    assert_eq!(progs(&text), progs(&direct));
}

#[test]
fn sampled_programs_feed_eval() {
    let dir = tempfile::tempdir().unwrap();
    ok(karel(dir.path(), "1", &["sample", "--n", "3", "--seed", "4", "--out", "p.txt"]));
    let csv = ok(karel(dir.path(), "1", &["eval", "--program", "p.txt", "--task", "seeder", "--num-states", "2"]));
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "program,state,return,steps,terminal");
    assert_eq!(rows.len(), 1 + 3 * 3);
    assert!(rows[3].starts_with("0,mean,"));
}

#[test]
fn idle_program_scores_zero_on_seeder() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("idle.txt"), "DEF run m( turnLeft m)\n").unwrap();
    let csv = ok(karel(dir.path(), "1", &["eval", "--program", "idle.txt", "--task", "seeder", "--num-states", "8"]));
    assert!(csv.lines().any(|l| l == "0,mean,0.0,,"), "{csv}");
}

#[test]
fn failures_exit_nonzero_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.txt"), "DEF run m( move\n").unwrap();
    let out = karel(dir.path(), "1", &["eval", "--program", "bad.txt", "--out", "never.csv"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 1") && err.contains("token"), "{err}");
    assert!(!dir.path().join("never.csv").exists());

    let out = karel(dir.path(), "0", &["sample"]);
    assert!(!out.status.success());
    let out = karel(dir.path(), "1", &["metrics"]);
    assert!(!out.status.success());
    let out = karel(dir.path(), "1", &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn metrics_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let b = ok(karel(dir.path(), "2", &["metrics", "behavior", "--programs", "20", "--states", "2", "--n-mut", "1-3"]));
    let rows: Vec<&str> = b.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "n_mutations,mean,ci_low,ci_high,metric,n");
    assert_eq!(rows.len(), 4);
    let c = ok(karel(
        dir.path(),
        "2",
        &["metrics", "convergence", "--tasks", "maze", "--ks", "5", "--inits", "6", "--budget", "200", "--targets", "4"],
    ));
    let rows: Vec<&str> = c.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "task,crashable,K,g_target,rate,ci_low,ci_high,n");
    assert!(rows[1].starts_with("maze,false,5,0.0,1.0,0.6096"), "{}", rows[1]);
    assert_eq!(rows.len(), 6);
}
