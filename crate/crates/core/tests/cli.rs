use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tabrl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tabrl")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = tabrl(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn run_writes_logs_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = ok(&["run", "--S", "2", "--A", "2", "--H", "3", "--episodes", "50", "--out", out, "--strict"]);
    let episodes = read(dir.path(), "episodes.csv");
    let mut lines = episodes.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,episode_regret,cum_regret,cum_switching_cost,cum_q_updates,cum_optimism_violations,ref_states_fixed"
    );
    assert_eq!(lines.count(), 50);
    assert_eq!(read(dir.path(), "q.csv").lines().count(), 1 + 3 * 2 * 2);
    assert_eq!(read(dir.path(), "v.csv").lines().next().unwrap(), "h,s,V,Vref");
    let summary = String::from_utf8(res.stderr).unwrap();
    assert!(summary.contains("algo=advantage episodes=50 T=150"), "{summary}");
}

#[test]
fn run_is_repeatable_and_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, "# desk run\nS = 2\nA = 3\nH = 2\nepisodes = 40\nseed = 5\nalgo = classic-qucb\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let a = ok(&["run", "--config", cfg]);
    let b = ok(&["run", "--config", cfg]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(String::from_utf8_lossy(&a.stdout).lines().count(), 41);
    let c = ok(&["run", "--config", cfg, "--episodes", "10"]);
    assert_eq!(String::from_utf8_lossy(&c.stdout).lines().count(), 11);
    assert!(String::from_utf8_lossy(&c.stderr).contains("algo=classic-qucb"));
}

#[test]
fn sweep_emits_one_row_per_checkpoint_and_seed() {
    let res = ok(&["sweep", "--episodes", "20", "--multipliers", "1,2", "--seeds", "3,4,5", "--H", "2"]);
    let text = String::from_utf8(res.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "T,seed,cum_regret");
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert!(lines[1].starts_with("40,3,"));
    assert!(lines[6].starts_with("80,5,"));
}

#[test]
fn concurrent_writes_rounds() {
    let res = ok(&["concurrent", "--S", "2", "--A", "1", "--H", "2", "--agents", "8", "--k-eps-override", "103", "--strict"]);
    let text = String::from_utf8(res.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "round,consumed,update_triggered,policy_version");
    // a single action never changes the greedy policy
    assert_eq!(lines.len(), 1 + 13);
    assert!(String::from_utf8_lossy(&res.stderr).contains("episodes_used=104"));
}

#[test]
fn dumped_model_solves_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["solve", "--env", "jao", "--H", "6", "--gap", "0.2", "--delta", "0.4", "--dump-model", "--out", out]);
    let model = dir.path().join("model.txt");
    let again = dir.path().join("again");
    ok(&["solve", "--env", &format!("file:{}", model.display()), "--out", again.to_str().unwrap()]);
    assert_eq!(read(dir.path(), "v_star.csv"), read(&again, "v_star.csv"));
    assert_eq!(read(dir.path(), "q_star.csv"), read(&again, "q_star.csv"));
    assert_eq!(read(dir.path(), "v_star.csv").lines().next().unwrap(), "h,s,V,action");
}

#[test]
fn schedule_table() {
    let res = ok(&["schedule", "--H", "2", "--n-max", "10"]);
    assert_eq!(String::from_utf8(res.stdout).unwrap(), "i,e_i,end_i\n1,2,2\n2,3,5\n3,4,9\n4,6,15\n");
}

#[test]
fn algos_lists_registry() {
    let text = String::from_utf8(ok(&["algos"]).stdout).unwrap();
    for name in ["advantage", "hoeffding-stage", "classic-qucb", "oracle"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing from {text}");
    }
}

#[test]
fn errors_exit_nonzero_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "2 1 1\nP 1 0 0 0.5 0.4\nP 1 1 0 1 0\nR 1 0 0 0\nR 1 1 0 0\n").unwrap();
    let garbled = dir.path().join("garbled.txt");
    fs::write(&garbled, "2 1 1\nP 1 0 0 x 0.5\n").unwrap();
    let cases: Vec<(Vec<String>, &str)> = vec![
        (vec!["run".into(), "--algo".into(), "nope".into()], "nope"),
        (vec!["run".into(), "--env".into(), format!("file:{}", bad.display())], "probability vector"),
        (vec!["run".into(), "--env".into(), format!("file:{}", garbled.display())], "line 2"),
        (vec!["run".into(), "--env".into(), "jao".into(), "--H".into(), "10".into(), "--gap".into(), "0.9".into()], "epsilon"),
        (vec!["run".into(), "--p".into(), "1.5".into()], "p"),
    ];
    for (args, needle) in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = tabrl(&args);
        assert!(!out.status.success(), "{args:?} should fail");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.starts_with("error: ") && err.contains(needle), "{args:?}: {err}");
    }
}
