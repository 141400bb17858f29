//! Hashtag intensity and stylometric counts.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::lexicon::ScoreDictionary;
use crate::preprocess::{is_emoticon, TokenizedTweet};

/// Mean dictionary intensity over the hashtags that the dictionary knows.
/// Zero when no hashtag hits.
pub fn hashtag_intensity(tweet: &TokenizedTweet, mood: &ScoreDictionary) -> f64 {
    let hits: Vec<f64> = tweet
        .hashtags
        .iter()
        .filter_map(|h| mood.get(h.trim_start_matches('#')))
        .collect();
    if hits.is_empty() {
        0.0
    } else {
        hits.iter().sum::<f64>() / hits.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoarseTag {
    Noun,
    Adverb,
    Adjective,
    Other,
}

impl CoarseTag {
    /// Accepts universal (`NOUN`, `ADV`, `ADJ`) and Penn (`NN*`, `RB*`, `JJ*`) tags.
    pub fn from_tag(tag: &str) -> Self {
        let t = tag.trim().to_ascii_uppercase();
        if t == "NOUN" || t == "PROPN" || t.starts_with("NN") {
            CoarseTag::Noun
        } else if t == "ADV" || t.starts_with("RB") {
            CoarseTag::Adverb
        } else if t == "ADJ" || t.starts_with("JJ") {
            CoarseTag::Adjective
        } else {
            CoarseTag::Other
        }
    }
}

/// Most-frequent-tag lookup: `token<TAB>tag` per line.
#[derive(Debug, Clone, Default)]
pub struct PosLexicon {
    tags: HashMap<String, CoarseTag>,
}

impl PosLexicon {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        PosLexicon {
            tags: pairs
                .into_iter()
                .map(|(tok, tag)| (tok.to_lowercase(), CoarseTag::from_tag(tag)))
                .collect(),
        }
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut tags = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (tok, tag) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(source_name, i + 1, "expected `token<TAB>tag`"))?;
            tags.entry(tok.trim().to_lowercase()).or_insert(CoarseTag::from_tag(tag));
        }
        Ok(PosLexicon { tags })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn tag(&self, token: &str) -> CoarseTag {
        self.tags.get(&token.to_lowercase()).copied().unwrap_or(CoarseTag::Other)
    }
}

pub const STYLOMETRIC_DIM: usize = 7;

fn is_url(token: &str) -> bool {
    let t = token.to_ascii_lowercase();
    t.starts_with("http://") || t.starts_with("https://") || t.starts_with("www.")
}

fn is_word(token: &str) -> bool {
    token.chars().next().is_some_and(char::is_alphanumeric) && !is_url(token) && !is_emoticon(token)
}

fn is_punctuation(token: &str) -> bool {
    !token.is_empty() && !is_emoticon(token) && token.chars().all(|c| !c.is_alphanumeric() && !c.is_whitespace())
}

/// `[emoticons, nouns, adverbs, adjectives, punctuation tokens, word tokens, mean word length]`.
pub fn stylometric_features(tweet: &TokenizedTweet, pos: &PosLexicon) -> [f64; STYLOMETRIC_DIM] {
    let (mut nouns, mut adverbs, mut adjectives, mut punct) = (0usize, 0usize, 0usize, 0usize);
    let (mut words, mut word_chars) = (0usize, 0usize);
    for tok in &tweet.tokens {
        match pos.tag(tok) {
            CoarseTag::Noun => nouns += 1,
            CoarseTag::Adverb => adverbs += 1,
            CoarseTag::Adjective => adjectives += 1,
            CoarseTag::Other => {}
        }
        if is_punctuation(tok) {
            punct += 1;
        } else if is_word(tok) {
            words += 1;
            word_chars += tok.chars().count();
        }
    }
    let avg_len = if words == 0 { 0.0 } else { word_chars as f64 / words as f64 };
    [
        tweet.emoticon_count as f64,
        nouns as f64,
        adverbs as f64,
        adjectives as f64,
        punct as f64,
        words as f64,
        avg_len,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::tokenize;

    fn tweet(tokens: &[&str]) -> TokenizedTweet {
        TokenizedTweet::from_tokens(tokens.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn hashtag_means_over_hits() {
        let mood = ScoreDictionary::from_pairs([("joy", 0.8), ("rage", 0.4)]);
        assert_eq!(hashtag_intensity(&tweet(&["no", "tags"]), &mood), 0.0);
        let v = hashtag_intensity(&tweet(&["#joy", "#rage"]), &mood);
        assert!((v - 0.6).abs() < 1e-15);
        let only_joy = ScoreDictionary::from_pairs([("joy", 0.8)]);
        assert_eq!(hashtag_intensity(&tweet(&["#JOY", "#unknowntag"]), &only_joy), 0.8);
        assert_eq!(hashtag_intensity(&tweet(&["#unknowntag"]), &only_joy), 0.0);
    }

    #[test]
    fn stylometric_counts() {
        let pos = PosLexicon::from_pairs([("happy", "ADJ"), ("dog", "NOUN")]);
        let f = stylometric_features(&tweet(&["happy", "dog", ":)"]), &pos);
        assert_eq!(f, [1.0, 1.0, 0.0, 1.0, 0.0, 2.0, 4.0]);
        assert_eq!(stylometric_features(&tweet(&[]), &pos), [0.0; 7]);
    }

    #[test]
    fn punctuation_and_entities() {
        let pos = PosLexicon::parse("really\tRB\nsky\tNN\nblue\tJJ\n", "p").unwrap();
        let f = stylometric_features(&tokenize("Really, the sky is blue!! #nice @bob http://x.co :("), &pos);
        // tokens: Really , the sky is blue ! ! #nice @bob http://x.co :(
        assert_eq!(f[0], 1.0);
        assert_eq!(f[1..4], [1.0, 1.0, 1.0]);
        assert_eq!(f[4], 3.0);
        assert_eq!(f[5], 5.0);
        assert_eq!(f[6], (6 + 3 + 3 + 2 + 4) as f64 / 5.0);
    }
}
