//! Per-tweet feature extraction and the concatenated model input.
//!
//! A [`PipelineConfig`] names the feature groups in output order. Groups are
//! either computed from the tokenized tweet (lexicons, hashtag intensity,
//! stylometric, bag-of-words, TF-IDF, mean word embeddings) or read from a
//! precomputed [`DenseCache`] keyed by sample id (Deep-Emoji, Skip-Thought,
//! sentiment neuron, or any other encoder output).
//!
//! [`FittedPipeline::fit`] learns the vocabulary and, when enabled, the
//! per-dimension z-score statistics from the training split only.

pub mod bow;
pub mod dense;
pub mod embedding;
pub mod lexicon;
pub mod surface;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bow::{fit_bow_tfidf, transform_bow_tfidf, TfidfVocabulary};
pub use dense::DenseCache;
pub use embedding::EmbeddingTable;
pub use lexicon::{Lexicon, LexiconKind, LexiconSet, LexiconSpec, ScoreDictionary};
pub use surface::{hashtag_intensity, stylometric_features, PosLexicon, STYLOMETRIC_DIM};

use crate::corpus::Sample;
use crate::error::{Error, Result};
use crate::preprocess::{normalize, tokenize, NormalizationRules, RulePaths, TokenizedTweet};

/// One named feature family.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupSpec {
    Lexicons,
    HashtagIntensity,
    Stylometric,
    Bow,
    Tfidf,
    /// `embedding_<name>`: mean word vector from the named table.
    Embedding(String),
    /// Any other name: rows from the dense cache of that name.
    Dense(String),
}

impl GroupSpec {
    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::Lexicons => f.write_str("lexicons"),
            GroupSpec::HashtagIntensity => f.write_str("hashtag_intensity"),
            GroupSpec::Stylometric => f.write_str("stylometric"),
            GroupSpec::Bow => f.write_str("bow"),
            GroupSpec::Tfidf => f.write_str("tfidf"),
            GroupSpec::Embedding(n) => write!(f, "embedding_{n}"),
            GroupSpec::Dense(n) => f.write_str(n),
        }
    }
}

impl FromStr for GroupSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "" => return Err(Error::Config("empty feature group name".into())),
            "lexicons" => GroupSpec::Lexicons,
            "hashtag_intensity" => GroupSpec::HashtagIntensity,
            "stylometric" => GroupSpec::Stylometric,
            "bow" => GroupSpec::Bow,
            "tfidf" => GroupSpec::Tfidf,
            _ => match s.strip_prefix("embedding_") {
                Some("") => return Err(Error::Config("`embedding_` needs a table name".into())),
                Some(name) => GroupSpec::Embedding(name.to_string()),
                None => GroupSpec::Dense(s.to_string()),
            },
        })
    }
}

fn default_true() -> bool {
    true
}

fn default_min_df() -> usize {
    1
}

/// Feature pipeline description, usually the `[features]` table of a run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Group names in concatenation order.
    pub groups: Vec<String>,
    #[serde(default = "default_true")]
    pub standardize: bool,
    #[serde(default = "default_min_df")]
    pub min_df: usize,
    /// Vocabulary cap; absent means unlimited.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_features: Option<usize>,
    #[serde(default)]
    pub rules: RulePaths,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos_lexicon: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mood_dictionary: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lexicons: Vec<LexiconSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub embeddings: BTreeMap<String, PathBuf>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub caches: BTreeMap<String, PathBuf>,
}

impl PipelineConfig {
    pub fn with_groups(groups: &[&str]) -> Self {
        PipelineConfig {
            groups: groups.iter().map(|s| s.to_string()).collect(),
            standardize: true,
            min_df: 1,
            max_features: None,
            rules: RulePaths::default(),
            pos_lexicon: None,
            mood_dictionary: None,
            lexicons: Vec::new(),
            embeddings: BTreeMap::new(),
            caches: BTreeMap::new(),
        }
    }

    /// Parsed groups, checked against the resources the config declares.
    pub fn group_specs(&self) -> Result<Vec<GroupSpec>> {
        if self.groups.is_empty() {
            return Err(Error::Config("features.groups is empty".into()));
        }
        let mut seen = HashSet::new();
        let mut specs = Vec::with_capacity(self.groups.len());
        for g in &self.groups {
            let spec: GroupSpec = g.parse()?;
            if !seen.insert(spec.clone()) {
                return Err(Error::Config(format!("features.groups lists `{g}` twice")));
            }
            match &spec {
                GroupSpec::Lexicons if self.lexicons.is_empty() => {
                    return Err(Error::Config("group `lexicons` enabled but features.lexicons is empty".into()))
                }
                GroupSpec::HashtagIntensity if self.mood_dictionary.is_none() => {
                    return Err(Error::Config(
                        "group `hashtag_intensity` enabled but features.mood_dictionary is not set".into(),
                    ))
                }
                GroupSpec::Stylometric if self.pos_lexicon.is_none() => {
                    return Err(Error::Config("group `stylometric` enabled but features.pos_lexicon is not set".into()))
                }
                GroupSpec::Embedding(n) if !self.embeddings.contains_key(n) => {
                    return Err(Error::Config(format!(
                        "group `{spec}` enabled but features.embeddings.{n} is not set"
                    )))
                }
                GroupSpec::Dense(n) if !self.caches.contains_key(n) => {
                    return Err(Error::Config(format!(
                        "dense group `{n}` enabled but features.caches.{n} is not set"
                    )))
                }
                _ => {}
            }
            specs.push(spec);
        }
        Ok(specs)
    }

    /// Make every relative path relative to `base` instead of the working directory.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.rules.contractions,
            &mut self.rules.acronyms,
            &mut self.rules.symbols,
            &mut self.rules.spelling,
            &mut self.pos_lexicon,
            &mut self.mood_dictionary,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        self.lexicons.iter_mut().for_each(|l| fix(&mut l.path));
        self.embeddings.values_mut().for_each(fix);
        self.caches.values_mut().for_each(fix);
    }

    /// Same config restricted to a single group (used by ablation).
    pub fn only(&self, group: &str) -> PipelineConfig {
        PipelineConfig {
            groups: vec![group.to_string()],
            ..self.clone()
        }
    }
}

/// Loaded lookup tables and caches for a pipeline config.
#[derive(Debug, Clone, Default)]
pub struct FeatureResources {
    pub rules: NormalizationRules,
    pub lexicons: LexiconSet,
    pub mood: ScoreDictionary,
    pub pos: PosLexicon,
    pub embeddings: BTreeMap<String, EmbeddingTable>,
    pub caches: BTreeMap<String, DenseCache>,
}

impl FeatureResources {
    /// Load everything the configured groups need (and the rule files).
    pub fn load(config: &PipelineConfig) -> Result<Self> {
        let specs = config.group_specs()?;
        let mut res = FeatureResources {
            rules: NormalizationRules::load(&config.rules)?,
            ..Default::default()
        };
        for spec in &specs {
            match spec {
                GroupSpec::Lexicons => res.lexicons = LexiconSet::load(&config.lexicons)?,
                GroupSpec::HashtagIntensity => {
                    res.mood = ScoreDictionary::load(config.mood_dictionary.as_ref().expect("checked"))?
                }
                GroupSpec::Stylometric => res.pos = PosLexicon::load(config.pos_lexicon.as_ref().expect("checked"))?,
                GroupSpec::Embedding(n) => {
                    res.embeddings.insert(n.clone(), EmbeddingTable::load(&config.embeddings[n])?);
                }
                GroupSpec::Dense(n) => {
                    let cache = DenseCache::load(&config.caches[n])?;
                    res.caches.insert(n.clone(), cache);
                }
                GroupSpec::Bow | GroupSpec::Tfidf => {}
            }
        }
        Ok(res)
    }

    pub fn prepare(&self, text: &str) -> TokenizedTweet {
        tokenize(&normalize(text, &self.rules))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGroup {
    pub name: String,
    pub values: Vec<f64>,
}

impl FeatureGroup {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Model input for one sample: the groups plus their concatenation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub sample_id: String,
    pub groups: Vec<FeatureGroup>,
    pub concatenated: Vec<f64>,
}

/// Per-dimension z-score with train-split statistics. Constant dimensions map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut mean = Vec::with_capacity(dim);
        let mut scale = Vec::with_capacity(dim);
        let mut column = vec![0.0; rows.len()];
        for j in 0..dim {
            for (c, r) in column.iter_mut().zip(rows) {
                if r.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
                }
                *c = r[j];
            }
            let (m, var) = crate::stats::mean_variance(&column);
            mean.push(m);
            scale.push(var.sqrt());
        }
        Ok(Standardizer { mean, scale })
    }

    pub fn apply(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
            *v = if *s > 0.0 { (*v - m) / s } else { 0.0 };
        }
    }
}

/// A pipeline with its learned state: vocabulary, group widths, standardizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub config: PipelineConfig,
    pub vocabulary: Option<TfidfVocabulary>,
    pub group_dims: Vec<(String, usize)>,
    pub standardizer: Option<Standardizer>,
}

impl FittedPipeline {
    pub fn fit(config: &PipelineConfig, resources: &FeatureResources, train: &[Sample]) -> Result<Self> {
        let specs = config.group_specs()?;
        let needs_vocab = specs.iter().any(|s| matches!(s, GroupSpec::Bow | GroupSpec::Tfidf));
        let tweets: Vec<TokenizedTweet> = train.iter().map(|s| resources.prepare(&s.text)).collect();
        let vocabulary = if needs_vocab {
            Some(fit_bow_tfidf(&tweets, config.min_df, config.max_features)?)
        } else {
            None
        };
        let mut fitted = FittedPipeline {
            config: config.clone(),
            vocabulary,
            group_dims: Vec::new(),
            standardizer: None,
        };
        let raw: Vec<Vec<FeatureGroup>> = train
            .iter()
            .zip(&tweets)
            .map(|(s, t)| fitted.raw_groups(&specs, s, t, resources))
            .collect::<Result<_>>()?;
        fitted.group_dims = match raw.first() {
            Some(groups) => groups.iter().map(|g| (g.name.clone(), g.dim())).collect(),
            None => return Err(Error::InvalidInput("cannot fit a feature pipeline on zero samples".into())),
        };
        if config.standardize {
            let rows: Vec<Vec<f64>> = raw.iter().map(|gs| concat(gs)).collect();
            fitted.standardizer = Some(Standardizer::fit(&rows)?);
        }
        Ok(fitted)
    }

    pub fn dim(&self) -> usize {
        self.group_dims.iter().map(|(_, d)| d).sum()
    }

    fn raw_groups(
        &self,
        specs: &[GroupSpec],
        sample: &Sample,
        tweet: &TokenizedTweet,
        res: &FeatureResources,
    ) -> Result<Vec<FeatureGroup>> {
        let mut groups = Vec::with_capacity(specs.len() + 1);
        let mut bow_tfidf: Option<(Vec<f64>, Vec<f64>)> = None;
        for spec in specs {
            let values = match spec {
                GroupSpec::Lexicons => res.lexicons.features(tweet),
                GroupSpec::HashtagIntensity => vec![hashtag_intensity(tweet, &res.mood)],
                GroupSpec::Stylometric => stylometric_features(tweet, &res.pos).to_vec(),
                GroupSpec::Bow | GroupSpec::Tfidf => {
                    let vocab = self
                        .vocabulary
                        .as_ref()
                        .ok_or_else(|| Error::Config("bow/tfidf group without a fitted vocabulary".into()))?;
                    let (b, t) = bow_tfidf.get_or_insert_with(|| transform_bow_tfidf(tweet, vocab));
                    if *spec == GroupSpec::Bow {
                        b.clone()
                    } else {
                        t.clone()
                    }
                }
                GroupSpec::Embedding(n) => res
                    .embeddings
                    .get(n)
                    .ok_or_else(|| Error::Config(format!("embedding table `{n}` not loaded")))?
                    .mean_vector(tweet),
                GroupSpec::Dense(n) => {
                    let cache = res
                        .caches
                        .get(n)
                        .ok_or_else(|| Error::Config(format!("dense cache `{n}` not loaded")))?;
                    cache
                        .get(&sample.id)
                        .ok_or_else(|| Error::MissingRow {
                            sample_id: sample.id.clone(),
                            group: n.clone(),
                        })?
                        .to_vec()
                }
            };
            groups.push(FeatureGroup {
                name: spec.name(),
                values,
            });
        }
        Ok(groups)
    }

    /// Features of one sample: groups in config order, concatenated, then
    /// standardized when the pipeline was fitted with standardization.
    pub fn assemble(&self, sample: &Sample, resources: &FeatureResources) -> Result<FeatureVector> {
        let specs = self.config.group_specs()?;
        let tweet = resources.prepare(&sample.text);
        let mut groups = self.raw_groups(&specs, sample, &tweet, resources)?;
        for (g, (name, dim)) in groups.iter().zip(&self.group_dims) {
            if g.dim() != *dim {
                return Err(Error::Config(format!(
                    "group `{name}` produced {} values, fitted width is {dim}",
                    g.dim()
                )));
            }
        }
        let mut concatenated = concat(&groups);
        if let Some(st) = &self.standardizer {
            st.apply(&mut concatenated);
            let mut offset = 0;
            for g in &mut groups {
                let d = g.values.len();
                g.values.copy_from_slice(&concatenated[offset..offset + d]);
                offset += d;
            }
        }
        Ok(FeatureVector {
            sample_id: sample.id.clone(),
            groups,
            concatenated,
        })
    }

    /// Concatenated rows for many samples, in order.
    pub fn transform(&self, samples: &[Sample], resources: &FeatureResources) -> Result<Vec<Vec<f64>>> {
        samples
            .iter()
            .map(|s| self.assemble(s, resources).map(|fv| fv.concatenated))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut p: FittedPipeline = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        p.vocabulary = p.vocabulary.map(TfidfVocabulary::reindex);
        Ok(p)
    }
}

fn concat(groups: &[FeatureGroup]) -> Vec<f64> {
    groups.iter().flat_map(|g| g.values.iter().copied()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn sample(id: &str, text: &str) -> Sample {
        Sample {
            id: id.into(),
            text: text.into(),
            target: None,
        }
    }

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn group_names_roundtrip() {
        for name in ["lexicons", "bow", "tfidf", "stylometric", "hashtag_intensity", "embedding_glove", "skipthought"] {
            assert_eq!(name.parse::<GroupSpec>().unwrap().name(), name);
        }
        assert!("embedding_".parse::<GroupSpec>().is_err());
    }

    #[test]
    fn config_contradictions_name_the_field() {
        let err = PipelineConfig::with_groups(&["deepemoji_softmax"]).group_specs().unwrap_err();
        assert!(err.to_string().contains("features.caches.deepemoji_softmax"), "{err}");
        let err = PipelineConfig::with_groups(&["stylometric"]).group_specs().unwrap_err();
        assert!(err.to_string().contains("pos_lexicon"), "{err}");
        let err = PipelineConfig::with_groups(&["bow", "bow"]).group_specs().unwrap_err();
        assert!(err.to_string().contains("twice"));
    }

    #[test]
    fn widths_add_up() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = PipelineConfig::with_groups(&["stylometric"]);
        cfg.pos_lexicon = Some(write(dir.path(), "pos.tsv", "dog\tNOUN\n"));
        cfg.mood_dictionary = Some(write(dir.path(), "mood.tsv", "joy\t0.8\n"));
        let res = FeatureResources::load(&cfg).unwrap();
        let train = [sample("1", "happy dog :)"), sample("2", "sad #joy")];
        let fitted = FittedPipeline::fit(&cfg, &res, &train).unwrap();
        assert_eq!(fitted.dim(), 7);

        cfg.groups = vec!["stylometric".into(), "hashtag_intensity".into()];
        let res = FeatureResources::load(&cfg).unwrap();
        let fitted = FittedPipeline::fit(&cfg, &res, &train).unwrap();
        assert_eq!(fitted.dim(), 8);
        let fv = fitted.assemble(&train[0], &res).unwrap();
        assert_eq!(fv.concatenated.len(), 8);
        assert_eq!(fv.groups.iter().map(|g| g.name.as_str()).collect::<Vec<_>>(), ["stylometric", "hashtag_intensity"]);
    }

    #[test]
    fn encoder_groups_contribute_cited_widths() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = PipelineConfig::with_groups(&["deepemoji_softmax", "deepemoji_attention", "skipthought"]);
        cfg.standardize = false;
        for (name, dim) in [("deepemoji_softmax", 64), ("deepemoji_attention", 2304), ("skipthought", 4800)] {
            let mut c = DenseCache::new(name, dim);
            c.insert("t1", vec![0.5; dim]).unwrap();
            let p = dir.path().join(format!("{name}.cache"));
            c.write(&["t1"], std::fs::File::create(&p).unwrap()).unwrap();
            cfg.caches.insert(name.into(), p);
        }
        let res = FeatureResources::load(&cfg).unwrap();
        let fitted = FittedPipeline::fit(&cfg, &res, &[sample("t1", "x")]).unwrap();
        assert_eq!(fitted.dim(), 7168);

        let err = fitted.assemble(&sample("t9", "y"), &res).unwrap_err().to_string();
        assert!(err.contains("t9") && err.contains("deepemoji_softmax"), "{err}");
    }

    #[test]
    fn standardizer_constant_columns_go_to_zero() {
        let rows = vec![vec![1.0, 5.0], vec![3.0, 5.0], vec![5.0, 5.0]];
        let st = Standardizer::fit(&rows).unwrap();
        let mut r = rows[0].clone();
        st.apply(&mut r);
        assert_eq!(r[1], 0.0);
        assert!((r[0] + (1.5f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fitted_pipeline_json_roundtrip() {
        let cfg = PipelineConfig::with_groups(&["bow", "tfidf"]);
        let res = FeatureResources::load(&cfg).unwrap();
        let train = [sample("1", "a b a"), sample("2", "b c")];
        let fitted = FittedPipeline::fit(&cfg, &res, &train).unwrap();
        let back = FittedPipeline::from_json(&fitted.to_json().unwrap()).unwrap();
        let s = sample("3", "a c d");
        assert_eq!(fitted.assemble(&s, &res).unwrap(), back.assemble(&s, &res).unwrap());
    }
}
