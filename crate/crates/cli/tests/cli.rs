use std::path::Path;
use std::process::{Command, Output};

fn hetuav(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetuav"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

const SCENARIO: &str = "n_slots = 3\n[s2dc]\nn_iter = 2\n";

const EXPERIMENT: &str = r#"
scenario_file = "scenario.toml"
methods = ["llm-hemarl-s2dc", "masac"]
seeds = [30]
episodes = 2
out_dir = "runs"
[learner]
hidden = [8]
batch_size = 4
distill_batch_size = 8
[distill]
dataset_episodes = 2
updates = 3
"#;

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("scenario.toml"), SCENARIO).unwrap();
    std::fs::write(dir.path().join("exp.toml"), EXPERIMENT).unwrap();
    dir
}

#[test]
fn simulate_and_collect_write_transitions() {
    let dir = workspace();
    let d = dir.path();
    let out = ok(&hetuav(&["simulate", "--config", "scenario.toml", "--out", "sim.jsonl"], d));
    assert!(out.contains("6 records"), "{out}");
    assert_eq!(std::fs::read_to_string(d.join("sim.jsonl")).unwrap().lines().count(), 6);
    ok(&hetuav(&["collect", "--config", "scenario.toml", "--episodes", "2", "--out", "data.jsonl"], d));
    assert_eq!(std::fs::read_to_string(d.join("data.jsonl")).unwrap().lines().count(), 12);

    let out = ok(&hetuav(
        &["distill", "--config", "exp.toml", "--method", "llm-hemarl-s2dc", "--dataset", "data.jsonl", "--updates", "2"],
        d,
    ));
    assert!(out.contains("greedy agreement"), "{out}");
    assert!(d.join("runs/distilled.ckpt").exists());
}

#[test]
fn train_plot_and_evaluate() {
    let dir = workspace();
    let d = dir.path();
    let out = ok(&hetuav(&["train", "--config", "exp.toml"], d));
    assert!(out.contains("masac seed 30"), "{out}");
    let metrics = std::fs::read_to_string(d.join("runs/metrics.csv")).unwrap();
    assert!(metrics.starts_with("# hetuav-metrics v1"));
    assert_eq!(metrics.lines().count(), 2 + 4);

    let out = ok(&hetuav(&["plot-data", "--metrics", "runs/metrics.csv", "--out", "plots"], d));
    assert_eq!(out.lines().count(), 4);
    assert!(d.join("plots/fig6_scaling.csv").exists());

    let out = ok(&hetuav(
        &[
            "evaluate",
            "--config",
            "exp.toml",
            "--method",
            "masac",
            "--checkpoint",
            "runs/checkpoints/masac_n2_seed30_final.ckpt",
            "--out",
            "eval",
        ],
        d,
    ));
    assert!(out.contains("masac seed 30 ep 1"), "{out}");
    assert!(d.join("eval/evaluation.csv").exists());
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = workspace();
    let d = dir.path();
    let out = hetuav(&["train", "--config", "exp.toml", "--method", "qmix"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("qmix"));
    let out = hetuav(&["simulate", "--config", "missing.toml"], d);
    assert!(!out.status.success());
    let out = hetuav(&["simulate", "--expert", "oracle"], d);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown expert"));
}
