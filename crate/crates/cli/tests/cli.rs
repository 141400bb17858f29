mod common;

use std::fs;

use affect_cli::{mini, RunConfig};
use affect_core::corpus::load_tsv;
use affect_core::{Split, TaskKind};
use common::*;

#[test]
fn committed_mini_corpus_matches_generator() {
    let tmp = tempfile::tempdir().unwrap();
    let written = mini::generate(tmp.path(), mini::DEFAULT_SEED).unwrap();
    assert!(!written.is_empty());
    for path in written {
        let rel = path.strip_prefix(tmp.path()).unwrap();
        let committed = fs::read(mini_dir().join(rel)).unwrap_or_else(|e| panic!("{}: {e}", rel.display()));
        assert!(fs::read(&path).unwrap() == committed, "{} differs from the generator", rel.display());
    }
}

#[test]
fn mini_corpus_parses_with_expected_sizes() {
    for task in mini::tasks() {
        for (split, n) in [(Split::Train, mini::TRAIN), (Split::Dev, mini::DEV), (Split::Test, mini::TEST)] {
            let ds = load_tsv(mini_dir().join(mini::task_file(task, split)), task, split).unwrap();
            assert_eq!(ds.len(), n, "{task} {split:?}");
            assert!(ds.samples().iter().all(|s| s.target.is_some()));
        }
    }
}

/// Train on train+dev, predict test, evaluate; returns the report text.
fn pipeline(tmp: &std::path::Path, task: &str, dir: &str, file: &str) -> String {
    let cfg = quick_config(tmp);
    let model = tmp.join("model");
    let pred = tmp.join("pred.tsv");
    let report = tmp.join("report");
    let f = |split: &str| mini(&format!("{dir}/{file}{split}.tsv"));
    affect_ok(&[
        "train", "--config", s(&cfg), "--task", task, "--train", s(&f("train")), "--dev", s(&f("dev")),
        "--model-dir", s(&model),
    ]);
    affect_ok(&["predict", "--model-dir", s(&model), "--test", s(&f("test")), "--out", s(&pred)]);
    let out = affect_ok(&[
        "evaluate", "--task", task, "--gold", s(&f("test")), "--pred", s(&pred), "--report-dir", s(&report),
    ]);
    assert!(report.join("report.txt").exists() && report.join("report.csv").exists());
    String::from_utf8(out.stdout).unwrap()
}

fn metric(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no `{key}` in\n{report}"))
        .parse()
        .unwrap()
}

#[test]
fn ei_reg_pipeline_scores_a_valid_correlation() {
    let tmp = tempfile::tempdir().unwrap();
    let report = pipeline(tmp.path(), "EI-reg", "EI-reg", "anger-");
    let r = metric(&report, "anger.pearson");
    assert!((-1.0..=1.0).contains(&r), "{r}");
    // the synthetic corpus is easy; a working pipeline correlates strongly
    assert!(r > 0.5, "{report}");
}

#[test]
fn ordinal_and_valence_pipelines_run() {
    for (task, dir, file, key) in [
        ("EI-oc", "EI-oc", "joy-", "joy.pearson"),
        ("V-reg", "V-reg", "", "pearson"),
        ("V-oc", "V-oc", "", "pearson"),
    ] {
        let tmp = tempfile::tempdir().unwrap();
        let report = pipeline(tmp.path(), task, dir, file);
        let r = metric(&report, key);
        assert!((-1.0..=1.0).contains(&r), "{task}: {r}");
    }
}

#[test]
fn ec_pipeline_scores_set_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let report = pipeline(tmp.path(), "E-c", "E-c", "");
    for key in ["jaccard", "micro_f1", "macro_f1"] {
        let v = metric(&report, key);
        assert!((0.0..=1.0).contains(&v), "{key} = {v}");
    }
}

#[test]
fn evaluating_gold_against_itself_is_perfect() {
    let tmp = tempfile::tempdir().unwrap();
    let gold = mini("EI-reg/sadness-test.tsv");
    let out = affect_ok(&["evaluate", "--task", "EI-reg", "--gold", s(&gold), "--pred", s(&gold), "--report-dir", s(tmp.path())]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(metric(&text, "sadness.pearson"), 1.0);
    let gold = mini("E-c/test.tsv");
    let out = affect_ok(&["evaluate", "--task", "E-c", "--gold", s(&gold), "--pred", s(&gold), "--report-dir", s(tmp.path())]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(metric(&text, "jaccard"), 1.0);
    assert_eq!(metric(&text, "macro_f1"), 1.0);
}

#[test]
fn missing_cache_path_fails_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::load(&mini("mini.toml")).unwrap();
    cfg.features.caches.remove("deepemoji");
    let path = tmp.path().join("broken.toml");
    fs::write(&path, cfg.to_toml().unwrap()).unwrap();
    let out = affect(&[
        "train", "--config", s(&path), "--task", "EI-reg:anger", "--train", s(&mini("EI-reg/anger-train.tsv")),
        "--model-dir", s(&tmp.path().join("m")),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("features.caches.deepemoji"), "{err}");
    assert!(!tmp.path().join("m").exists());
}

#[test]
fn bad_inputs_exit_nonzero_with_a_message() {
    let train = mini("EI-reg/anger-train.tsv");
    for args in [
        vec!["train", "--task", "EI-nope", "--train", s(&train), "--model-dir", "/nonexistent/x"],
        vec!["train", "--task", "EI-reg", "--train", s(&train)],
        vec!["train", "--task", "EI-reg", "--train", "/nonexistent/anger-train.tsv", "--model-dir", "/tmp/x"],
        vec!["evaluate", "--task", "EI-reg", "--gold", s(&train), "--report-dir", "/tmp/x"],
    ] {
        let out = affect(&args);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(!out.stderr.is_empty(), "{args:?} printed no error");
    }
}

#[test]
fn run_config_is_persisted_and_reloadable() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick_config(tmp.path());
    let model = tmp.path().join("model");
    affect_ok(&[
        "train", "--config", s(&cfg), "--task", "V-reg", "--train", s(&mini("V-reg/train.tsv")), "--seed", "11",
        "--eta", "0.05", "--model-dir", s(&model),
    ]);
    let saved = RunConfig::load(&model.join("config.toml")).unwrap();
    assert_eq!(saved.task, Some(TaskKind::VReg));
    assert_eq!(saved.seed, 11);
    assert_eq!(saved.gating.eta, 0.05);
    assert_eq!(saved.experts.len(), 3);
    assert!(saved.features.caches["deepemoji"].is_absolute());
    // the persisted config alone reproduces the model
    let again = tmp.path().join("again");
    affect_ok(&["train", "--config", s(&model.join("config.toml")), "--model-dir", s(&again)]);
    for f in ["manifest.txt", "features.json"] {
        assert_eq!(fs::read(model.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn featurize_writes_caches_for_each_split() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick_config(tmp.path());
    let out = tmp.path().join("feat");
    affect_ok(&[
        "featurize", "--config", s(&cfg), "--task", "EI-reg", "--train", s(&mini("EI-reg/joy-train.tsv")),
        "--test", s(&mini("EI-reg/joy-test.tsv")), "--out", s(&out),
    ]);
    let train = affect_core::features::DenseCache::load(&out.join("train.features.tsv")).unwrap();
    let test = affect_core::features::DenseCache::load(&out.join("test.features.tsv")).unwrap();
    assert_eq!(train.len(), mini::TRAIN);
    assert_eq!(test.len(), mini::TEST);
    assert!(out.join("features.json").exists() && out.join("config.toml").exists());
}

#[test]
fn gridsearch_writes_table_and_best_config() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::load(&quick_config(tmp.path())).unwrap();
    cfg.grid.insert("ridge".into(), [("l2".to_string(), vec![0.1, 10.0])].into());
    let path = tmp.path().join("grid.toml");
    fs::write(&path, cfg.to_toml().unwrap()).unwrap();
    let report = tmp.path().join("grid");
    affect_ok(&[
        "gridsearch", "--config", s(&path), "--task", "EI-reg", "--train", s(&mini("EI-reg/fear-train.tsv")),
        "--k", "3", "--report-dir", s(&report),
    ]);
    let table = fs::read_to_string(report.join("gridsearch-ridge.csv")).unwrap();
    assert_eq!(table.lines().count(), 3, "{table}");
    assert!(table.starts_with("expert,l2,mean_pearson"), "{table}");
    let best = RunConfig::load(&report.join("best_config.toml")).unwrap();
    let l2 = best.experts[0].params["l2"];
    assert!(l2 == 0.1 || l2 == 10.0);
}

#[test]
fn ablation_covers_every_group_and_the_concatenation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick_config(tmp.path());
    let report = tmp.path().join("abl");
    affect_ok(&[
        "ablate", "--config", s(&cfg), "--task", "EI-reg", "--train", s(&mini("EI-reg/anger-train.tsv")), "--train",
        s(&mini("EI-reg/joy-train.tsv")), "--groups", "lexicons,tfidf,deepemoji", "--k", "3", "--report-dir",
        s(&report),
    ]);
    let csv = fs::read_to_string(report.join("ablation.csv")).unwrap();
    for g in ["lexicons", "tfidf", "deepemoji", "concatenated"] {
        for e in ["anger", "joy"] {
            assert!(csv.lines().any(|l| l.starts_with(&format!("{g},{e},"))), "{g}/{e} missing:\n{csv}");
        }
    }
}
