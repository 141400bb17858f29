//! Deterministic synthetic mini-corpus for tests and demos.
//!
//! Every task gets 50 training tweets plus 10 dev and 10 test tweets, built
//! from a small emotion vocabulary whose words carry known intensities, so
//! labels are pseudo-gold that the features can actually explain. Alongside
//! the task files the generator writes rule files, lexicons, a POS lexicon,
//! a hashtag mood dictionary, a word-vector table, two dense caches and a
//! ready-to-use run config.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use affect_core::corpus::write_tsv;
use affect_core::features::dense::DenseCache;
use affect_core::{Dataset, Emotion, LabelSet, Sample, Split, Target, TaskKind};

pub const DEFAULT_SEED: u64 = 2018;
pub const TRAIN: usize = 50;
pub const DEV: usize = 10;
pub const TEST: usize = 10;

const EMOTION_WORDS: [(Emotion, [(&str, f64); 6]); 4] = [
    (
        Emotion::Anger,
        [("furious", 0.9), ("angry", 0.7), ("annoyed", 0.4), ("irritated", 0.5), ("rage", 0.95), ("mad", 0.6)],
    ),
    (
        Emotion::Fear,
        [("terrified", 0.9), ("scared", 0.7), ("nervous", 0.45), ("anxious", 0.55), ("panic", 0.85), ("worried", 0.5)],
    ),
    (
        Emotion::Joy,
        [("ecstatic", 0.95), ("happy", 0.7), ("glad", 0.5), ("cheerful", 0.6), ("delighted", 0.85), ("smiling", 0.45)],
    ),
    (
        Emotion::Sadness,
        [("devastated", 0.95), ("sad", 0.7), ("down", 0.4), ("lonely", 0.6), ("miserable", 0.85), ("gloomy", 0.5)],
    ),
];

/// Extra E-c labels and the word that signals each.
const EXTRA_LABELS: [(&str, &str); 7] = [
    ("anticipation", "waiting"),
    ("disgust", "gross"),
    ("love", "love"),
    ("optimism", "hopeful"),
    ("pessimism", "hopeless"),
    ("surprise", "wow"),
    ("trust", "trust"),
];

const FILLER: [&str; 20] = [
    "today", "the", "weather", "work", "my", "friend", "at", "this", "morning", "again", "and", "we", "game",
    "coffee", "bus", "class", "phone", "news", "weekend", "team",
];

const BOOSTERS: [&str; 3] = ["so", "really", "sooo"];
const CONTRACTED: [&str; 4] = ["can't", "don't", "i'm", "won't"];
const ACRONYMS: [&str; 3] = ["lol", "omg", "smh"];
const EMOTICONS: [(Emotion, &str); 4] = [
    (Emotion::Anger, ">:("),
    (Emotion::Fear, ":-S"),
    (Emotion::Joy, ":)"),
    (Emotion::Sadness, ":("),
];

/// Latent state behind one synthetic tweet.
struct Draft {
    text: String,
    intensity: [f64; 4],
    extras: Vec<usize>,
}

fn emotion_index(e: Emotion) -> usize {
    Emotion::ALL.iter().position(|x| *x == e).expect("known emotion")
}

fn draft(rng: &mut ChaCha8Rng, focus: Option<Emotion>) -> Draft {
    let mut words: Vec<String> = Vec::new();
    let mut intensity = [0.0; 4];
    let n_emotion = rng.random_range(1..=2);
    for _ in 0..n_emotion {
        let e = match focus {
            Some(e) if rng.random_bool(0.8) => e,
            _ => *Emotion::ALL.choose(rng).expect("non-empty"),
        };
        let i = emotion_index(e);
        let (word, v) = *EMOTION_WORDS[i].1.choose(rng).expect("non-empty");
        let boosted = rng.random_bool(0.3);
        if boosted {
            words.push(BOOSTERS.choose(rng).expect("non-empty").to_string());
        }
        words.push(if word == "happy" && rng.random_bool(0.3) { "hapy".to_string() } else { word.to_string() });
        let v = if boosted { v + 0.08 } else { v };
        intensity[i] = f64::max(intensity[i], v);
    }
    for _ in 0..rng.random_range(2..=5) {
        let at = rng.random_range(0..=words.len());
        words.insert(at, FILLER.choose(rng).expect("non-empty").to_string());
    }
    if rng.random_bool(0.25) {
        words.insert(0, CONTRACTED.choose(rng).expect("non-empty").to_string());
    }
    if rng.random_bool(0.2) {
        words.push(ACRONYMS.choose(rng).expect("non-empty").to_string());
    }
    if rng.random_bool(0.1) {
        words.push(format!("${}", rng.random_range(1..100)));
    }
    let mut extras = Vec::new();
    for (k, (_, word)) in EXTRA_LABELS.iter().enumerate() {
        if rng.random_bool(0.15) {
            words.push(word.to_string());
            extras.push(k);
        }
    }
    let strongest = (0..4).max_by(|&a, &b| intensity[a].total_cmp(&intensity[b])).expect("four emotions");
    if rng.random_bool(0.4) {
        let (word, _) = *EMOTION_WORDS[strongest].1.choose(rng).expect("non-empty");
        words.push(format!("#{word}"));
    }
    if rng.random_bool(0.35) {
        words.push(EMOTICONS[strongest].1.to_string());
    }
    if rng.random_bool(0.3) {
        words.push("!".repeat(rng.random_range(1..=3)));
    }
    for v in &mut intensity {
        if *v > 0.0 {
            *v = (*v + rng.random_range(-0.05..0.05)).clamp(0.0, 1.0);
        }
    }
    Draft {
        text: words.join(" "),
        intensity,
        extras,
    }
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

fn valence(d: &Draft) -> f64 {
    let neg = d.intensity[0].max(d.intensity[1]).max(d.intensity[3]);
    (0.5 + 0.5 * (d.intensity[2] - neg)).clamp(0.0, 1.0)
}

fn target(task: TaskKind, d: &Draft) -> Target {
    match task {
        TaskKind::EiReg(e) => Target::Scalar(round3(d.intensity[emotion_index(e)])),
        TaskKind::EiOc(e) => {
            let v = d.intensity[emotion_index(e)];
            Target::Ordinal(match v {
                v if v < 0.3 => 0,
                v if v < 0.55 => 1,
                v if v < 0.8 => 2,
                _ => 3,
            })
        }
        TaskKind::VReg => Target::Scalar(round3(valence(d))),
        // stored classes 0..=6 stand for valence -3..=3
        TaskKind::VOc => Target::Ordinal((((valence(d) - 0.5) * 6.0).round().clamp(-3.0, 3.0) + 3.0) as u8),
        TaskKind::Ec => {
            let mut l = LabelSet::empty();
            for (i, e) in Emotion::ALL.iter().enumerate() {
                if d.intensity[i] >= 0.5 {
                    let k = affect_core::EC_LABELS.iter().position(|n| *n == e.as_str()).expect("EI emotion is an E-c label");
                    l.set(k, true);
                }
            }
            for &x in &d.extras {
                let k = affect_core::EC_LABELS.iter().position(|n| *n == EXTRA_LABELS[x].0).expect("extra label");
                l.set(k, true);
            }
            Target::LabelSet(l)
        }
    }
}

/// All mini-corpus tasks, in generation order.
pub fn tasks() -> Vec<TaskKind> {
    let mut t: Vec<TaskKind> = Emotion::ALL.iter().map(|&e| TaskKind::EiReg(e)).collect();
    t.extend(Emotion::ALL.iter().map(|&e| TaskKind::EiOc(e)));
    t.extend([TaskKind::VReg, TaskKind::VOc, TaskKind::Ec]);
    t
}

/// Relative path of a task split inside the corpus directory.
pub fn task_file(task: TaskKind, split: Split) -> PathBuf {
    let split = split_name(split);
    let dir = task.family().to_string();
    match task.emotion() {
        Some(e) => Path::new(&dir).join(format!("{e}-{split}.tsv")),
        None => Path::new(&dir).join(format!("{split}.tsv")),
    }
}

fn slug(task: TaskKind) -> String {
    task.to_string().to_lowercase().replace(':', "-")
}

fn vocabulary() -> Vec<String> {
    let mut v: Vec<String> = EMOTION_WORDS.iter().flat_map(|(_, ws)| ws.iter().map(|(w, _)| w.to_string())).collect();
    v.extend(EXTRA_LABELS.iter().map(|(_, w)| w.to_string()));
    v.extend(FILLER.iter().map(|w| w.to_string()));
    v.extend(["so", "really", "cannot", "do", "not", "i", "am", "will", "laughing", "out", "loud", "oh", "god", "dollar"].map(String::from));
    v
}

fn write(dir: &Path, rel: impl AsRef<Path>, body: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    written.push(path);
    Ok(())
}

fn resource_files() -> Vec<(&'static str, String)> {
    let mut files = Vec::new();
    files.push((
        "rules/contractions.tsv",
        "# contraction\texpansion\ncan't\tcannot\ndon't\tdo not\ni'm\ti am\nwon't\twill not\nisn't\tis not\nit's\tit is\n".to_string(),
    ));
    files.push(("rules/acronyms.tsv", "lol\tlaughing out loud\nomg\toh my god\nsmh\tshaking my head\n".to_string()));
    files.push(("rules/symbols.tsv", "$\tdollar\n&\tand\n%\tpercent\n".to_string()));
    files.push(("rules/spelling.tsv", "hapy\thappy\nsooo\tso\nrealy\treally\n".to_string()));

    let (mut afinn, mut bing, mut swn, mut nrc, mut mood, mut pos) =
        (String::new(), String::new(), String::new(), String::new(), String::new(), String::new());
    for (e, words) in EMOTION_WORDS {
        let sign = if e == Emotion::Joy { 1.0 } else { -1.0 };
        for (w, v) in words {
            let _ = writeln!(afinn, "{w}\t{}", (sign * (v * 5.0_f64).round()) as i64);
            let _ = writeln!(bing, "{w}\t{}", if sign > 0.0 { "positive" } else { "negative" });
            let (p, n) = if sign > 0.0 { (v * 0.8, 0.0) } else { (0.0, v * 0.8) };
            let _ = writeln!(swn, "{w}\t{p:.3}\t{n:.3}");
            let _ = writeln!(nrc, "{w}\t{e}\t{v:.3}");
            let _ = writeln!(mood, "{w}\t{v:.3}");
            let _ = writeln!(pos, "{w}\tADJ");
        }
    }
    for (w, s) in [("hopeful", 2), ("hopeless", -3), ("love", 3), ("gross", -2), ("trust", 1)] {
        let _ = writeln!(afinn, "{w}\t{s}");
        let _ = writeln!(bing, "{w}\t{}", if s > 0 { "positive" } else { "negative" });
    }
    for w in FILLER.iter().filter(|w| !matches!(**w, "the" | "at" | "this" | "my" | "and" | "we" | "again")) {
        let _ = writeln!(pos, "{w}\tNOUN");
    }
    for w in ["so", "really", "again"] {
        let _ = writeln!(pos, "{w}\tADV");
    }
    files.push(("lexicons/afinn.tsv", afinn));
    files.push(("lexicons/bingliu.tsv", bing));
    files.push(("lexicons/sentiwordnet.tsv", swn));
    files.push(("lexicons/nrc_affect.tsv", nrc));
    files.push(("mood.tsv", mood));
    files.push(("pos.tsv", pos));
    files
}

fn embedding_table(rng: &mut ChaCha8Rng) -> String {
    const DIM: usize = 8;
    let words = vocabulary();
    let mut out = format!("{} {DIM}\n", words.len());
    for w in &words {
        let mut v: Vec<f64> = (0..DIM).map(|_| rng.random_range(-0.1..0.1)).collect();
        if let Some((i, x)) = EMOTION_WORDS
            .iter()
            .enumerate()
            .find_map(|(i, (_, ws))| ws.iter().find(|(x, _)| x == w).map(|(_, x)| (i, *x)))
        {
            v[i] += x;
            v[4 + i] += 0.5 * x;
        }
        let vals: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
        let _ = writeln!(out, "{w} {}", vals.join(" "));
    }
    out
}

const CONFIG: &str = r#"# Run configuration for the synthetic mini-corpus.
# Paths are relative to this file. The expert roster is left empty, so every
# task trains its default roster.
seed = 7
k = 5

[features]
groups = ["lexicons", "hashtag_intensity", "stylometric", "embedding_glove", "tfidf", "deepemoji", "skipthought"]
min_df = 2
pos_lexicon = "pos.tsv"
mood_dictionary = "mood.tsv"

[features.rules]
contractions = "rules/contractions.tsv"
acronyms = "rules/acronyms.tsv"
symbols = "rules/symbols.tsv"
spelling = "rules/spelling.tsv"

[[features.lexicons]]
name = "afinn"
kind = "score"
path = "lexicons/afinn.tsv"

[[features.lexicons]]
name = "bingliu"
kind = "polarity"
path = "lexicons/bingliu.tsv"

[[features.lexicons]]
name = "sentiwordnet"
kind = "sentiwordnet"
path = "lexicons/sentiwordnet.tsv"

[[features.lexicons]]
name = "nrc_affect"
kind = "affect"
path = "lexicons/nrc_affect.tsv"

[features.embeddings]
glove = "embeddings/glove.txt"

[features.caches]
deepemoji = "caches/deepemoji.tsv"
skipthought = "caches/skipthought.tsv"

[gating]
eta = 0.01
epochs = 100
"#;

pub const CONFIG_NAME: &str = "mini.toml";

/// Write the corpus into `dir` and return every file written, in order.
pub fn generate(dir: &Path, seed: u64) -> Result<Vec<PathBuf>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut written = Vec::new();
    let mut deepemoji = DenseCache::new("deepemoji", 8);
    let mut skipthought = DenseCache::new("skipthought", 12);
    let mut ids: Vec<String> = Vec::new();
    let proj: Vec<Vec<f64>> = (0..20).map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();

    for task in tasks() {
        for (split, n) in [(Split::Train, TRAIN), (Split::Dev, DEV), (Split::Test, TEST)] {
            let mut samples = Vec::with_capacity(n);
            for i in 0..n {
                let d = draft(&mut rng, task.emotion());
                let id = format!("mini-{}-{}-{:03}", slug(task), split_name(split), i + 1);
                let latent = [d.intensity[0], d.intensity[1], d.intensity[2], d.intensity[3], valence(&d)];
                let row = |offset: usize, dim: usize, noise: f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
                    (0..dim)
                        .map(|j| {
                            let v: f64 = proj[offset + j].iter().zip(&latent).map(|(a, b)| a * b).sum();
                            ((v + rng.random_range(-noise..noise)) * 1e4).round() / 1e4
                        })
                        .collect()
                };
                deepemoji.insert(&id, row(0, 8, 0.1, &mut rng))?;
                skipthought.insert(&id, row(8, 12, 0.3, &mut rng))?;
                ids.push(id.clone());
                samples.push(Sample {
                    id,
                    text: d.text.clone(),
                    target: Some(target(task, &d)),
                });
            }
            let ds = Dataset::new(task, split, samples)?;
            let mut buf = Vec::new();
            write_tsv(&ds, &mut buf)?;
            write(dir, task_file(task, split), &String::from_utf8(buf)?, &mut written)?;
        }
    }

    for (rel, body) in resource_files() {
        write(dir, rel, &body, &mut written)?;
    }
    write(dir, "embeddings/glove.txt", &embedding_table(&mut rng), &mut written)?;
    let id_refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    for (rel, cache) in [("caches/deepemoji.tsv", &deepemoji), ("caches/skipthought.tsv", &skipthought)] {
        let mut buf = Vec::new();
        cache.write(&id_refs, &mut buf)?;
        write(dir, rel, &String::from_utf8(buf)?, &mut written)?;
    }
    write(dir, CONFIG_NAME, CONFIG, &mut written)?;
    Ok(written)
}

fn split_name(split: Split) -> &'static str {
    match split {
        Split::Train => "train",
        Split::Dev => "dev",
        Split::Test => "test",
        Split::Merged => "merged",
    }
}
