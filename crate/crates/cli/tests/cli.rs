use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("env.conf"), "episode_length = 5\n").unwrap();
        Workspace { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_resilgrid"))
            .arg("--env-config")
            .arg(self.path("env.conf"))
            .arg("--out-dir")
            .arg(self.path("out"))
            .args(args)
            .output()
            .unwrap()
    }

    fn train(&self, extra: &[&str]) -> Output {
        let mut args = vec!["train", "--episodes", "50", "--update-every", "25"];
        args.extend_from_slice(extra);
        if !extra.contains(&"--checkpoint-interval") {
            args.extend(["--checkpoint-interval", "25"]);
        }
        let out = self.run(&args);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        out
    }
}

fn checkpoint_dirs(root: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(root)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("ckpt_"))
        .collect();
    names.sort();
    names
}

#[test]
fn train_writes_metrics_and_checkpoints() {
    let ws = Workspace::new();
    ws.train(&[]);
    let rewards = fs::read_to_string(ws.path("out/rewards.csv")).unwrap();
    let mut lines = rewards.lines();
    assert_eq!(lines.next(), Some("episode,reward,moving_avg50"));
    assert_eq!(lines.count(), 50);
    let updates = fs::read_to_string(ws.path("out/updates.csv")).unwrap();
    // Two rounds, one row per agent each.
    assert_eq!(updates.lines().count(), 1 + 4);
    assert_eq!(
        checkpoint_dirs(&ws.path("out/checkpoints")),
        ["ckpt_25", "ckpt_50"]
    );
}

#[test]
fn unusable_resume_path_starts_fresh() {
    let ws = Workspace::new();
    let out = ws.train(&["--resume", ws.path("nowhere").to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("episodes 1..=50"));
}

#[test]
fn resume_continues_after_the_checkpoint() {
    let ws = Workspace::new();
    ws.train(&[]);
    let ckpt = ws.path("out/checkpoints/ckpt_25");
    let out = ws.run(&[
        "train",
        "--episodes",
        "50",
        "--resume",
        ckpt.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("episodes 26..=50"));
}

#[test]
fn save_best_keeps_at_most_k_checkpoints() {
    let ws = Workspace::new();
    ws.train(&["--checkpoint-interval", "10", "--save-best", "--keep", "2"]);
    let dirs = checkpoint_dirs(&ws.path("out/checkpoints"));
    assert!(!dirs.is_empty() && dirs.len() <= 2, "{dirs:?}");
    assert!(dirs.contains(&"ckpt_50".to_string()), "{dirs:?}");
}

#[test]
fn evaluate_is_deterministic() {
    let ws = Workspace::new();
    ws.train(&[]);
    let ckpt = ws.path("out/checkpoints");
    let args = [
        "evaluate",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--episodes",
        "2",
        "--steps",
        "6",
    ];
    let first = ws.run(&args);
    assert_eq!(
        first.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let stdout = String::from_utf8_lossy(&first.stdout);
    assert!(
        stdout.lines().any(|l| l.replace(' ', "") == "episodes=2"),
        "{stdout}"
    );
    let trace = fs::read_to_string(ws.path("out/eval/trace_1.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 6);
    let summary = fs::read_to_string(ws.path("out/eval/summary.txt")).unwrap();
    let second = ws.run(&args);
    assert_eq!(second.stdout, first.stdout);
    assert_eq!(
        fs::read_to_string(ws.path("out/eval/trace_1.csv")).unwrap(),
        trace
    );
    assert_eq!(
        fs::read_to_string(ws.path("out/eval/summary.txt")).unwrap(),
        summary
    );
}

#[test]
fn recommend_writes_a_report() {
    let ws = Workspace::new();
    ws.train(&[]);
    let ckpt = ws.path("out/checkpoints");
    let out = ws.run(&[
        "recommend",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--scenario",
        "flood",
        "--steps",
        "4",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = fs::read_to_string(ws.path("out/recommend/report.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(
        lines[0],
        "contingency,weather,recommendation,switches,total_cost"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("C1,Normal,"), "{}", lines[1]);
    assert!(lines[2].starts_with("C1,Flood,"), "{}", lines[2]);
}

#[test]
fn recommend_rejects_unknown_scenario() {
    let ws = Workspace::new();
    ws.train(&[]);
    let ckpt = ws.path("out/checkpoints");
    let out = ws.run(&[
        "recommend",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--scenario",
        "volcano",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("volcano"));
}

#[test]
fn report_handles_empty_and_malformed_input() {
    let ws = Workspace::new();
    let metrics = ws.path("metrics");
    fs::create_dir_all(&metrics).unwrap();
    fs::write(metrics.join("rewards.csv"), "").unwrap();
    let out = ws.run(&["report", "--metrics", metrics.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(ws.path("out/plots/rewards.csv").exists());

    fs::write(
        metrics.join("rewards.csv"),
        "episode,reward,moving_avg50\n1,abc,\n",
    )
    .unwrap();
    let out = ws.run(&["report", "--metrics", metrics.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_after_training_splits_agents() {
    let ws = Workspace::new();
    ws.train(&[]);
    let out = ws.run(&["report"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for agent in ["strategic", "tactical"] {
        let text =
            fs::read_to_string(ws.path(&format!("out/plots/kl_entropy_{agent}.csv"))).unwrap();
        assert_eq!(text.lines().next(), Some("update,approx_kl,entropy"));
        assert_eq!(text.lines().count(), 3);
    }
}

#[test]
fn exit_codes_distinguish_failure_kinds() {
    let ws = Workspace::new();
    assert_eq!(
        ws.run(&["train", "--episodes", "nope"]).status.code(),
        Some(1)
    );
    assert_eq!(ws.run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ws.run(&["train", "--episodes", "0"]).status.code(), Some(1));
    let missing = ws.path("missing");
    assert_eq!(
        ws.run(&["evaluate", "--checkpoint", missing.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
    let bad_env = ws.path("bad.conf");
    fs::write(&bad_env, "episode_length = -3\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_resilgrid"))
        .arg("--env-config")
        .arg(&bad_env)
        .arg("--out-dir")
        .arg(ws.path("out"))
        .args(["train", "--episodes", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(
        Command::new(env!("CARGO_BIN_EXE_resilgrid"))
            .arg("--help")
            .output()
            .unwrap()
            .status
            .code(),
        Some(0)
    );
}
