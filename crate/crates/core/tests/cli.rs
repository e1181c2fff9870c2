//! End-to-end CLI checks: train a tiny run, aggregate it, plot it, and
//! validate the files the subcommands leave behind.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_resetlab"))
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn train_tiny(dir: &Path, seed: u64) {
    let status = bin()
        .args([
            "train",
            "--env",
            "pendulum_dense",
            "--seed",
            &seed.to_string(),
            "--steps",
            "1500",
            "--set",
            "min_buffer_size=300",
            "--set",
            "eval_every=300",
            "--set",
            "eval_episodes=2",
            "--set",
            "sac.hidden_sizes=8,8",
            "--set",
            "sac.batch_size=16",
            "--out",
        ])
        .arg(dir)
        .status()
        .expect("spawn resetlab");
    assert!(status.success());
}

#[test]
fn envs_lists_catalog() {
    let out = bin().arg("envs").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for id in ["pendulum_dense", "pendulum_sparse", "reacher2d_dense", "reacher2d_sparse"] {
        assert!(text.contains(id), "catalog missing {id}");
    }
}

#[test]
fn train_aggregate_plot_pipeline() {
    let root = tmp("cli_pipeline");
    let _ = std::fs::remove_dir_all(&root);
    let run_a = root.join("s0");
    let run_b = root.join("s1");
    train_tiny(&run_a, 0);
    train_tiny(&run_b, 1);

    for dir in [&run_a, &run_b] {
        for f in ["log.csv", "run.meta", "buffer.snap", "agent.ckpt"] {
            assert!(dir.join(f).exists(), "{} missing {f}", dir.display());
        }
        let log = std::fs::read_to_string(dir.join("log.csv")).unwrap();
        assert!(log.starts_with(
            "env_step,kind,episode_return,critic_loss,actor_loss,alpha,q_mean,q_max,param_norm,grad_norm"
        ));
    }

    let agg = root.join("agg.csv");
    let out = bin()
        .args(["aggregate"])
        .args([&run_a, &run_b])
        .args(["--stat", "iqm", "--out"])
        .arg(&agg)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&agg).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "statistic,point,ci_low,ci_high,tasks,seeds");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "iqm");
    let point: f64 = row[1].parse().unwrap();
    let lo: f64 = row[2].parse().unwrap();
    let hi: f64 = row[3].parse().unwrap();
    assert!(lo <= point && point <= hi);
    assert_eq!(row[4], "1"); // one task
    assert_eq!(row[5], "2"); // two seeds

    let svg = root.join("curves.svg");
    let out = bin()
        .args(["plot"])
        .args([&run_a, &run_b])
        .args(["--kind", "curves", "--out"])
        .arg(&svg)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg_text = std::fs::read_to_string(&svg).unwrap();
    assert!(svg_text.starts_with("<?xml"));
    assert!(svg_text.contains("</svg>"));
    assert!(root.join("curves.csv").exists());

    let iv = root.join("intervals.svg");
    let out = bin()
        .args(["plot"])
        .arg(&agg)
        .args(["--kind", "intervals", "--out"])
        .arg(&iv)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(iv.exists());
}

#[test]
fn unknown_env_fails_cleanly() {
    let out = bin()
        .args(["train", "--env", "humanoid-run", "--steps", "10"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("unknown environment"), "stderr: {err}");
}

#[test]
fn config_file_drives_run() {
    let root = tmp("cli_config");
    let _ = std::fs::remove_dir_all(&root);
    std::fs::create_dir_all(&root).unwrap();
    let cfg = root.join("run.cfg");
    std::fs::write(
        &cfg,
        "env=pendulum_sparse\nseed=5\ntotal_steps=800\nmin_buffer_size=200\n\
         eval_every=400\neval_episodes=1\nsac.hidden_sizes=8,8\nsac.batch_size=8\n",
    )
    .unwrap();
    let dir = root.join("out");
    let status = bin()
        .args(["train", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let meta = std::fs::read_to_string(dir.join("run.meta")).unwrap();
    assert!(meta.contains("env_id=pendulum_sparse"));
    assert!(meta.contains("seed=5"));
    assert!(meta.contains("total_steps=800"));
}
