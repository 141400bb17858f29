use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use affect_cli::commands::{self, TaskSpec};
use affect_cli::{mini, RunConfig};
use affect_core::features::{LexiconKind, LexiconSpec};

#[derive(Parser)]
#[command(name = "affect", version, about = "Train and evaluate the gated experts model on tweet affect tasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the feature pipeline and write feature caches.
    Featurize {
        #[command(flatten)]
        run: RunArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train experts and gate; write the model directory.
    Train {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Predict a task file with a trained model.
    Predict {
        #[arg(long)]
        model_dir: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Output TSV; defaults to predictions.tsv in the model directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score predictions against gold labels.
    Evaluate {
        /// Task family (`EI-reg`) or full task (`EI-reg:anger`).
        #[arg(long)]
        task: String,
        /// Gold file; repeat together with --pred for several emotions.
        #[arg(long, required = true)]
        gold: Vec<PathBuf>,
        #[arg(long, required = true)]
        pred: Vec<PathBuf>,
        #[arg(long)]
        report_dir: PathBuf,
    },
    /// Cross-validated grid search over `[grid.<expert>]` tables.
    Gridsearch {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Per-feature-group ablation.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Write the synthetic mini-corpus.
    MiniCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = mini::DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML run config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Full task (`EI-reg:anger`), or a family to read the emotion from the train file.
    #[arg(long)]
    task: Option<String>,
    /// Training file; repeatable for ablation across emotions.
    #[arg(long)]
    train: Vec<PathBuf>,
    #[arg(long)]
    dev: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    model_dir: Option<PathBuf>,
    #[arg(long)]
    report_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Folds for out-of-fold gate training, search and ablation.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Train the gate on in-sample expert predictions.
    #[arg(long)]
    in_sample_gating: bool,
    /// Use the exact softmax gradient for the gate weights.
    #[arg(long)]
    exact_gate_gradient: bool,
    /// Comma-separated feature groups.
    #[arg(long, value_delimiter = ',')]
    groups: Vec<String>,
    #[arg(long)]
    contractions: Option<PathBuf>,
    #[arg(long)]
    acronyms: Option<PathBuf>,
    #[arg(long)]
    symbols: Option<PathBuf>,
    #[arg(long)]
    spelling: Option<PathBuf>,
    #[arg(long)]
    pos_lexicon: Option<PathBuf>,
    #[arg(long)]
    mood_dictionary: Option<PathBuf>,
    /// `name:kind:path`, kind one of score, polarity, sentiwordnet, affect.
    #[arg(long)]
    lexicon: Vec<String>,
    /// `name=path` of a word-vector table.
    #[arg(long)]
    embedding: Vec<String>,
    /// `name=path` of a dense feature cache.
    #[arg(long)]
    cache: Vec<String>,
}

fn key_value(s: &str, flag: &str) -> Result<(String, PathBuf)> {
    let (k, v) = s.split_once('=').ok_or_else(|| anyhow!("--{flag} expects name=path, got `{s}`"))?;
    Ok((k.to_string(), PathBuf::from(v)))
}

impl RunArgs {
    /// The config file (if any) with flags applied, plus the task spec.
    fn resolve(&self) -> Result<(RunConfig, Option<TaskSpec>)> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let mut spec = cfg.task.map(TaskSpec::Kind);
        if let Some(t) = &self.task {
            spec = Some(t.parse()?);
        }
        if let Some(t) = self.train.first() {
            cfg.train = Some(t.clone());
        }
        macro_rules! set {
            ($($field:ident).+ = $flag:expr) => {
                if let Some(v) = &$flag {
                    cfg.$($field).+ = Some(v.clone());
                }
            };
        }
        set!(dev = self.dev);
        set!(test = self.test);
        set!(model_dir = self.model_dir);
        set!(report_dir = self.report_dir);
        set!(features.rules.contractions = self.contractions);
        set!(features.rules.acronyms = self.acronyms);
        set!(features.rules.symbols = self.symbols);
        set!(features.rules.spelling = self.spelling);
        set!(features.pos_lexicon = self.pos_lexicon);
        set!(features.mood_dictionary = self.mood_dictionary);
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(e) = self.eta {
            cfg.gating.eta = e;
        }
        if let Some(e) = self.epochs {
            cfg.gating.epochs = e;
        }
        cfg.gating.in_sample |= self.in_sample_gating;
        cfg.gating.exact_gradient |= self.exact_gate_gradient;
        if !self.groups.is_empty() {
            cfg.features.groups = self.groups.clone();
        }
        for l in &self.lexicon {
            let mut parts = l.splitn(3, ':');
            let (Some(name), Some(kind), Some(path)) = (parts.next(), parts.next(), parts.next()) else {
                bail!("--lexicon expects name:kind:path, got `{l}`");
            };
            let kind: LexiconKind = kind.parse().with_context(|| format!("--lexicon {l}"))?;
            cfg.features.lexicons.retain(|x| x.name != name);
            cfg.features.lexicons.push(LexiconSpec { name: name.to_string(), kind, path: path.into() });
        }
        for e in &self.embedding {
            let (k, v) = key_value(e, "embedding")?;
            cfg.features.embeddings.insert(k, v);
        }
        for c in &self.cache {
            let (k, v) = key_value(c, "cache")?;
            cfg.features.caches.insert(k, v);
        }
        // a family alone is pinned down by the first train file
        if let Some(s) = spec {
            if cfg.task.is_none() || self.task.is_some() {
                cfg.task = match (s, &cfg.train) {
                    (TaskSpec::Kind(k), _) => Some(k),
                    (TaskSpec::Family(_), Some(train)) => Some(s.resolve(train)?),
                    (TaskSpec::Family(_), None) => None,
                };
            }
        }
        Ok((cfg, spec))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Featurize { run, out } => {
            let (cfg, _) = run.resolve()?;
            let written = commands::featurize(&cfg, &out)?;
            println!("wrote {} files to {}", written.len(), out.display());
        }
        Command::Train { run } => {
            let (cfg, _) = run.resolve()?;
            let dir = commands::train(&cfg)?;
            println!("model written to {}", dir.display());
        }
        Command::Predict { model_dir, test, out } => {
            let out = out.unwrap_or_else(|| model_dir.join("predictions.tsv"));
            commands::predict(&model_dir, &test, &out)?;
            println!("predictions written to {}", out.display());
        }
        Command::Evaluate { task, gold, pred, report_dir } => {
            if gold.len() != pred.len() {
                bail!("--gold given {} times but --pred {} times", gold.len(), pred.len());
            }
            let pairs: Vec<_> = gold.into_iter().zip(pred).collect();
            let report = commands::evaluate(task.parse()?, &pairs, &report_dir)?;
            print!("{}", report.to_text());
        }
        Command::Gridsearch { run } => {
            let (cfg, _) = run.resolve()?;
            for p in commands::gridsearch(&cfg)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Ablate { run } => {
            let (cfg, spec) = run.resolve()?;
            let spec = spec.ok_or_else(|| anyhow!("missing --task (flag or config field `task`)"))?;
            let trains = if run.train.is_empty() { cfg.train.iter().cloned().collect() } else { run.train.clone() };
            let rows = commands::ablate(&cfg, spec, &trains)?;
            let dir = cfg.report_dir.as_deref().unwrap_or(Path::new("."));
            println!("{} ablation rows written to {}", rows.len(), dir.join("ablation.csv").display());
        }
        Command::MiniCorpus { out, seed } => {
            let written = mini::generate(&out, seed)?;
            println!("wrote {} files to {}", written.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
