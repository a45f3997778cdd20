use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("cellfree").chain(args.iter().copied());
    let code = cellfree::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

const TINY_PLAN: &str = r#"
seed = 3

[network]
aps = 3
ues = 2
subnetworks = 2

[clustering]
algorithm = "ddqn"
episodes = 2
steps = 2
eval_slots = 2

[agent]
batch_size = 2
"#;

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_cellfree");
    let ok = Command::new(bin).args(["flops", "--state", "4", "--action", "2"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let usage = Command::new(bin).arg("no-such-command").output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
    let stderr = String::from_utf8(usage.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1);
    assert!(stderr.contains("Usage"));
}

#[test]
fn help_and_version_succeed() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("count-configs"));
    assert_eq!(run(&["--version"]).0, 0);
}

#[test]
fn bad_arguments_give_one_line() {
    for args in [&["flops", "--state", "x", "--action", "1"][..], &["count-configs", "4"], &["simulate", "--draws"]] {
        let (code, out, err) = run(args);
        assert_eq!(code, 2, "{args:?}");
        assert!(out.is_empty());
        assert_eq!(err.lines().count(), 1, "{err}");
    }
}

#[test]
fn runtime_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.toml");
    let (code, _, err) = run(&["train-cluster", "--config", missing.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error: "));
    assert_eq!(err.lines().count(), 1);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[network]\nbogus = 1\n").unwrap();
    let (code, _, err) = run(&["train-cluster", "--config", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(err.lines().count(), 1);

    let (code, _, err) = run(&["count-configs", "2", "3", "4", "1"]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn flops_output() {
    let (code, out, _) = run(&["flops", "--state", "10", "--action", "4"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("flops_estimate = "));
    assert!(lines[1].starts_with("table_form = "));
}

#[test]
fn count_configs_output() {
    let (code, out, _) = run(&["count-configs", "4", "3", "2", "2"]);
    assert_eq!(code, 0);
    assert!(out.contains("enumerated = 42"), "{out}");
    assert!(out.contains("closed_form = 42"), "{out}");
}

#[test]
fn train_then_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.toml");
    std::fs::write(&plan, TINY_PLAN).unwrap();
    let out_dir = dir.path().join("run");
    let (code, _, err) = run(&["--quiet", "--config", plan.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "train-cluster"]);
    assert_eq!(code, 0, "{err}");
    for f in ["cluster_log.csv", "cluster_agent.txt", "plan.toml", "summary.txt"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let agent = out_dir.join("cluster_agent.txt");
    let eval_dir = dir.path().join("eval");
    let (code, out, err) = run(&[
        "--config",
        plan.to_str().unwrap(),
        "--out",
        eval_dir.to_str().unwrap(),
        "eval",
        "--agent",
        agent.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("oracle_ratio"));
    let rows = std::fs::read_to_string(eval_dir.join("eval.csv")).unwrap();
    assert_eq!(rows.lines().count(), 3);
}

#[test]
fn quiet_suppresses_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(&[
        "--quiet",
        "--out",
        dir.path().to_str().unwrap(),
        "simulate",
        "--powers",
        "30",
        "--draws",
        "1",
        "--subnetworks",
        "1",
    ]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let csv = std::fs::read_to_string(dir.path().join("simulate.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}
