//! Sentiment and affect lexicons.
//!
//! Every lexicon file is tab-separated text, `#` lines are comments, and
//! lookups are lowercase. What a lexicon contributes depends on its
//! [`LexiconKind`]:
//!
//! | kind           | line format                      | features                              |
//! |----------------|----------------------------------|---------------------------------------|
//! | `score`        | `token<TAB>score`                | sum of positive, sum of negative      |
//! | `polarity`     | `token<TAB>polarity[<TAB>score]` | count of positive, count of negative  |
//! | `sentiwordnet` | `token<TAB>pos<TAB>neg`          | sum pos, sum neg, sum (1 - pos - neg) |
//! | `affect`       | `token<TAB>dimension<TAB>score`  | per-dimension sums, dimensions sorted |
//!
//! AFINN, Sentiment140 and NRC-Hashtag use `score`; MPQA and Bing Liu use
//! `polarity`; the NRC affect-intensity and word-emotion lexicons use
//! `affect`. Negative sums keep their sign.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::TokenizedTweet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LexiconKind {
    Score,
    Polarity,
    SentiWordNet,
    Affect,
}

impl FromStr for LexiconKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "score" => Ok(LexiconKind::Score),
            "polarity" => Ok(LexiconKind::Polarity),
            "sentiwordnet" => Ok(LexiconKind::SentiWordNet),
            "affect" => Ok(LexiconKind::Affect),
            other => Err(Error::Config(format!("unknown lexicon kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

impl Polarity {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" | "pos" | "+" | "+1" | "1" => Some(Polarity::Positive),
            "negative" | "neg" | "-" | "-1" => Some(Polarity::Negative),
            "neutral" | "neu" | "both" | "0" => Some(Polarity::Neutral),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
enum Entries {
    Score(HashMap<String, f64>),
    Polarity(HashMap<String, Polarity>),
    SentiWordNet(HashMap<String, (f64, f64)>),
    Affect {
        dimensions: Vec<String>,
        scores: HashMap<String, Vec<f64>>,
    },
}

/// One loaded lexicon.
#[derive(Debug, Clone)]
pub struct Lexicon {
    pub name: String,
    entries: Entries,
}

impl Lexicon {
    pub fn kind(&self) -> LexiconKind {
        match self.entries {
            Entries::Score(_) => LexiconKind::Score,
            Entries::Polarity(_) => LexiconKind::Polarity,
            Entries::SentiWordNet(_) => LexiconKind::SentiWordNet,
            Entries::Affect { .. } => LexiconKind::Affect,
        }
    }

    /// Width of this lexicon's feature tuple.
    pub fn dim(&self) -> usize {
        match &self.entries {
            Entries::Score(_) | Entries::Polarity(_) => 2,
            Entries::SentiWordNet(_) => 3,
            Entries::Affect { dimensions, .. } => dimensions.len(),
        }
    }

    pub fn parse(name: &str, kind: LexiconKind, text: &str, source_name: &str) -> Result<Self> {
        let rows = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
            .map(|(i, l)| (i + 1, l.split('\t').map(str::trim).collect::<Vec<_>>()));
        let num = |s: &str, line: usize| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(source_name, line, format!("bad score `{s}`")))
        };
        let too_short = |line: usize, want: usize| Error::parse(source_name, line, format!("expected {want} columns"));

        let entries = match kind {
            LexiconKind::Score => {
                let mut map = HashMap::new();
                for (line, cols) in rows {
                    if cols.len() < 2 {
                        return Err(too_short(line, 2));
                    }
                    map.entry(cols[0].to_lowercase()).or_insert(num(cols[1], line)?);
                }
                Entries::Score(map)
            }
            LexiconKind::Polarity => {
                let mut map = HashMap::new();
                for (line, cols) in rows {
                    if cols.len() < 2 {
                        return Err(too_short(line, 2));
                    }
                    let pol = Polarity::parse(cols[1])
                        .ok_or_else(|| Error::parse(source_name, line, format!("bad polarity `{}`", cols[1])))?;
                    map.entry(cols[0].to_lowercase()).or_insert(pol);
                }
                Entries::Polarity(map)
            }
            LexiconKind::SentiWordNet => {
                let mut map = HashMap::new();
                for (line, cols) in rows {
                    if cols.len() < 3 {
                        return Err(too_short(line, 3));
                    }
                    let (p, n) = (num(cols[1], line)?, num(cols[2], line)?);
                    if p < 0.0 || n < 0.0 || p + n > 1.0 + 1e-9 {
                        return Err(Error::parse(source_name, line, "positive/negative scores must lie in [0, 1] and sum to at most 1"));
                    }
                    map.entry(cols[0].to_lowercase()).or_insert((p, n));
                }
                Entries::SentiWordNet(map)
            }
            LexiconKind::Affect => {
                let mut raw: Vec<(String, String, f64)> = Vec::new();
                for (line, cols) in rows {
                    if cols.len() < 3 {
                        return Err(too_short(line, 3));
                    }
                    raw.push((cols[0].to_lowercase(), cols[1].to_lowercase(), num(cols[2], line)?));
                }
                let dimensions: Vec<String> = raw.iter().map(|r| r.1.clone()).collect::<BTreeSet<_>>().into_iter().collect();
                let index: BTreeMap<&str, usize> = dimensions.iter().enumerate().map(|(i, d)| (d.as_str(), i)).collect();
                let mut scores: HashMap<String, Vec<f64>> = HashMap::new();
                for (tok, dim, v) in &raw {
                    let row = scores.entry(tok.clone()).or_insert_with(|| vec![0.0; dimensions.len()]);
                    row[index[dim.as_str()]] = *v;
                }
                Entries::Affect { dimensions, scores }
            }
        };
        Ok(Lexicon {
            name: name.to_string(),
            entries,
        })
    }

    pub fn load(name: &str, kind: LexiconKind, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(name, kind, &text, &path.display().to_string())
    }

    /// Feature tuple for one tweet; tokens missing from the lexicon add nothing.
    pub fn features(&self, tweet: &TokenizedTweet, out: &mut Vec<f64>) {
        let lowered = tweet.tokens.iter().map(|t| t.to_lowercase());
        match &self.entries {
            Entries::Score(map) => {
                let (mut pos, mut neg) = (0.0, 0.0);
                for t in lowered {
                    match map.get(&t) {
                        Some(&v) if v > 0.0 => pos += v,
                        Some(&v) if v < 0.0 => neg += v,
                        _ => {}
                    }
                }
                out.extend([pos, neg]);
            }
            Entries::Polarity(map) => {
                let (mut pos, mut neg) = (0.0, 0.0);
                for t in lowered {
                    match map.get(&t) {
                        Some(Polarity::Positive) => pos += 1.0,
                        Some(Polarity::Negative) => neg += 1.0,
                        _ => {}
                    }
                }
                out.extend([pos, neg]);
            }
            Entries::SentiWordNet(map) => {
                let (mut pos, mut neg, mut neu) = (0.0, 0.0, 0.0);
                for t in lowered {
                    if let Some(&(p, n)) = map.get(&t) {
                        pos += p;
                        neg += n;
                        neu += 1.0 - p - n;
                    }
                }
                out.extend([pos, neg, neu]);
            }
            Entries::Affect { dimensions, scores } => {
                let start = out.len();
                out.resize(start + dimensions.len(), 0.0);
                for t in lowered {
                    if let Some(row) = scores.get(&t) {
                        for (acc, v) in out[start..].iter_mut().zip(row) {
                            *acc += v;
                        }
                    }
                }
            }
        }
    }
}

/// Where to find one lexicon, as declared in the pipeline config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconSpec {
    pub name: String,
    pub kind: LexiconKind,
    pub path: PathBuf,
}

/// Lexicons in declaration order; their tuples concatenate in that order.
#[derive(Debug, Clone, Default)]
pub struct LexiconSet {
    pub lexicons: Vec<Lexicon>,
}

impl LexiconSet {
    pub fn load(specs: &[LexiconSpec]) -> Result<Self> {
        let lexicons = specs
            .iter()
            .map(|s| Lexicon::load(&s.name, s.kind, &s.path))
            .collect::<Result<_>>()?;
        Ok(LexiconSet { lexicons })
    }

    pub fn dim(&self) -> usize {
        self.lexicons.iter().map(Lexicon::dim).sum()
    }

    pub fn features(&self, tweet: &TokenizedTweet) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        for lex in &self.lexicons {
            lex.features(tweet, &mut out);
        }
        out
    }
}

/// A plain `token<TAB>intensity` dictionary (hashtag mood intensities).
#[derive(Debug, Clone, Default)]
pub struct ScoreDictionary {
    scores: HashMap<String, f64>,
}

impl ScoreDictionary {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        ScoreDictionary {
            scores: pairs.into_iter().map(|(k, v)| (k.to_lowercase(), v)).collect(),
        }
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let lex = Lexicon::parse("dictionary", LexiconKind::Score, text, source_name)?;
        match lex.entries {
            Entries::Score(scores) => Ok(ScoreDictionary { scores }),
            _ => unreachable!(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.scores.get(&token.to_lowercase()).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tweet(tokens: &[&str]) -> TokenizedTweet {
        TokenizedTweet::from_tokens(tokens.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn afinn_style_sums() {
        let lex = Lexicon::parse("afinn", LexiconKind::Score, "good\t3\nawful\t-3\n", "t").unwrap();
        let mut out = Vec::new();
        lex.features(&tweet(&["good", "good"]), &mut out);
        assert_eq!(out, [6.0, 0.0]);
        out.clear();
        lex.features(&tweet(&["GOOD", "awful", "meh"]), &mut out);
        assert_eq!(out, [3.0, -3.0]);
    }

    #[test]
    fn polarity_counts() {
        let lex = Lexicon::parse("bingliu", LexiconKind::Polarity, "bad\tnegative\nnice\tpositive\n", "t").unwrap();
        let mut out = Vec::new();
        lex.features(&tweet(&["bad"]), &mut out);
        assert_eq!(out, [0.0, 1.0]);
    }

    #[test]
    fn sentiwordnet_triples() {
        let lex = Lexicon::parse("swn", LexiconKind::SentiWordNet, "ok\t0.25\t0.125\n", "t").unwrap();
        let mut out = Vec::new();
        lex.features(&tweet(&["ok", "ok"]), &mut out);
        assert_eq!(out, [0.5, 0.25, 1.25]);
        assert!(Lexicon::parse("swn", LexiconKind::SentiWordNet, "ok\t0.8\t0.8\n", "t").is_err());
    }

    #[test]
    fn affect_dimensions_sorted() {
        let lex = Lexicon::parse(
            "nrc",
            LexiconKind::Affect,
            "furious\tanger\t0.9\nscared\tfear\t0.7\nfurious\tfear\t0.1\n",
            "t",
        )
        .unwrap();
        assert_eq!(lex.dim(), 2);
        let mut out = Vec::new();
        lex.features(&tweet(&["furious", "scared"]), &mut out);
        assert_eq!(out, [0.9, 0.7999999999999999]);
    }

    #[test]
    fn no_hits_gives_zero_group() {
        let set = LexiconSet {
            lexicons: vec![
                Lexicon::parse("a", LexiconKind::Score, "good\t3\n", "t").unwrap(),
                Lexicon::parse("b", LexiconKind::Polarity, "bad\tneg\n", "t").unwrap(),
            ],
        };
        assert_eq!(set.features(&tweet(&["zzz", "qqq"])), vec![0.0; 4]);
    }

    #[test]
    fn malformed_lines_rejected() {
        assert!(Lexicon::parse("a", LexiconKind::Score, "good\n", "t").is_err());
        assert!(Lexicon::parse("a", LexiconKind::Score, "good\tvery\n", "t").is_err());
        assert!(Lexicon::parse("a", LexiconKind::Polarity, "good\tmaybe\n", "t").is_err());
    }
}
