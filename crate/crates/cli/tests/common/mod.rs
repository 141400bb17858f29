#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use affect_cli::RunConfig;
use affect_core::{ExpertConfig, Family};

pub fn mini_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mini")
}

pub fn mini(rel: &str) -> PathBuf {
    mini_dir().join(rel)
}

pub fn affect(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_affect")).args(args).output().expect("run affect")
}

/// Run and require success, echoing stderr on failure.
pub fn affect_ok(args: &[&str]) -> Output {
    let out = affect(args);
    assert!(
        out.status.success(),
        "affect {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// The mini config with a small, fast roster, written into `dir`.
pub fn quick_config(dir: &Path) -> PathBuf {
    let mut cfg = RunConfig::load(&mini("mini.toml")).unwrap();
    cfg.experts = vec![
        ExpertConfig::new("ridge", Family::Ridge),
        ExpertConfig::new("forest", Family::RandomForest).with("n_estimators", 20.0).with("max_depth", 3.0),
        ExpertConfig::new("boost", Family::GradientBoosting).with("n_estimators", 30.0),
    ];
    let path = dir.join("quick.toml");
    std::fs::write(&path, cfg.to_toml().unwrap()).unwrap();
    path
}
