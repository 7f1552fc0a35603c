use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
schema_version = 1
world_seed = 0
probe_seed = 0
seed_grid = "1x2"
conditions = ["baseline", "mixed"]
out_dir = "unused"
jobs = 1

[stage1]
sigma_left = 0.6
sigma_right = 0.03
total_steps = 480
steps_per_episode = 240
learning_rate = 0.0003
fixed_alpha = 0.1
actor_period = 16

[stage1.loss]
pred = 1.0
smooth = 0.1
actor = 0.5
entropy = 0.01

[stage2]
sigma_left = 0.2
sigma_right = 0.1
episodes = 6
block_len = 2
steps_per_episode = 120
alpha_bounds = [0.03, 0.3]
learning_rate = 0.0003

[stage2.loss]
pred = 1.0
smooth = 0.1
actor = 0.0
entropy = 0.0
"#;

fn pagc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pagc"))
        .env_remove("PAGC_OUT")
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tiny.toml"), TINY).unwrap();
    dir
}

fn with<'a>(base: &[&'a str], extra: &[&'a str]) -> Vec<&'a str> {
    base.iter().chain(extra).copied().collect()
}

fn entries(path: &Path) -> usize {
    std::fs::read_dir(path).map(|d| d.count()).unwrap_or(0)
}

#[test]
fn unknown_condition_exits_2_and_writes_nothing() {
    let dir = setup();
    let o = pagc(dir.path(), &["--config", "tiny.toml", "--out", "out", "run", "--condition", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("bogus") && err.contains("ablation-rigid"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = setup();
    std::fs::write(dir.path().join("bad.toml"), TINY.replace("[stage1]\n", "[stage1]\nsurprise = true\n")).unwrap();
    let o = pagc(dir.path(), &["--config", "bad.toml", "--out", "out", "train-stage1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("bad.toml"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn bad_seed_grid_exits_2() {
    let dir = setup();
    let o = pagc(dir.path(), &["--out", "out", "--seed-grid", "5by6", "train-stage1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn pipeline_overwrite_probe_and_tamper() {
    let dir = setup();
    let base = ["--config", "tiny.toml", "--out", "out"];

    let o = pagc(dir.path(), &with(&base, &["train-stage1"]));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let ckpt = dir.path().join("out/checkpoints/stage1_seed0.ckpt");
    assert!(ckpt.exists());
    assert!(dir.path().join("out/checkpoints/stage1_metrics.csv").exists());

    let before = std::fs::read(&ckpt).unwrap();
    let o = pagc(dir.path(), &with(&base, &["train-stage1"]));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--force"), "{}", stderr(&o));
    assert_eq!(std::fs::read(&ckpt).unwrap(), before);
    let o = pagc(dir.path(), &with(&base, &["--force", "train-stage1"]));
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(&ckpt).unwrap(), before, "retraining is deterministic");

    let o = pagc(dir.path(), &with(&base, &["run", "--condition", "all"]));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for c in ["baseline", "mixed"] {
        let runs = dir.path().join("out/runs").join(c);
        assert!(runs.join("manifest.json").exists());
        assert!(runs.join("s0-0.csv").exists() && runs.join("s0-1.csv").exists());
    }

    let o = pagc(dir.path(), &with(&base, &["probe", "--run", "baseline/s0-0"]));
    assert_eq!(o.status.code(), Some(2));

    let o = pagc(dir.path(), &with(&base, &["probe"]));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("out/probes/probe_set.json").exists());
    assert!(dir.path().join("out/probes/mixed_s0-1.json").exists());

    let o = pagc(dir.path(), &with(&base, &["analyze"]));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for t in ["fig3_residue", "fig4a_pca", "fig4b_diff", "fig4c_gamma", "fig5a_alpha", "fig5b_gnorm"] {
        assert!(dir.path().join(format!("out/tables/{t}.csv")).exists(), "{t}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/tables/acceptance.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "incomplete", "ablation conditions were not run");

    let run_ckpt = dir.path().join("out/runs/mixed/s0-0.ckpt");
    let mut bytes = std::fs::read(&run_ckpt).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    std::fs::write(&run_ckpt, bytes).unwrap();
    let o = pagc(dir.path(), &with(&base, &["--force", "probe", "--run", "mixed/s0-0"]));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("s0-0.ckpt"), "{}", stderr(&o));
}

#[test]
fn env_out_overrides_flag() {
    let dir = setup();
    let o = Command::new(env!("CARGO_BIN_EXE_pagc"))
        .env("PAGC_OUT", dir.path().join("from_env"))
        .current_dir(dir.path())
        .args(["--config", "tiny.toml", "--out", "from_flag", "--seed-grid", "1x1", "train-stage1"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(entries(&dir.path().join("from_env/checkpoints")) > 0);
    assert!(!dir.path().join("from_flag").exists());
}

#[test]
fn check_subcommand_passes() {
    let dir = setup();
    let o = pagc(dir.path(), &["--out", "out", "check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5, "{text}");
}
