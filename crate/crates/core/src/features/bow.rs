//! Bag-of-words counts and smoothed TF-IDF over a fitted vocabulary.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::TokenizedTweet;

/// Vocabulary with per-term document frequency and idf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfVocabulary {
    pub terms: Vec<String>,
    pub document_frequency: Vec<usize>,
    pub idf: Vec<f64>,
    pub n_documents: usize,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl TfidfVocabulary {
    fn from_parts(terms: Vec<String>, document_frequency: Vec<usize>, idf: Vec<f64>, n_documents: usize) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        TfidfVocabulary {
            terms,
            document_frequency,
            idf,
            n_documents,
            index,
        }
    }

    /// Rebuild the lookup index after deserialization.
    pub fn reindex(mut self) -> Self {
        self.index = self.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        self
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn position(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }
}

/// Smoothed inverse document frequency.
pub fn smoothed_idf(n_documents: usize, df: usize) -> f64 {
    ((1.0 + n_documents as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Keep lowercased tokens with document frequency at least `min_df`, order
/// them by total corpus count (descending) then lexicographically, and
/// truncate to `max_features` when given.
pub fn fit_bow_tfidf(corpus: &[TokenizedTweet], min_df: usize, max_features: Option<usize>) -> Result<TfidfVocabulary> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput("cannot fit a vocabulary on an empty corpus".into()));
    }
    let mut df: HashMap<String, usize> = HashMap::new();
    let mut tf: HashMap<String, usize> = HashMap::new();
    for doc in corpus {
        let mut seen = std::collections::HashSet::new();
        for tok in &doc.tokens {
            let t = tok.to_lowercase();
            *tf.entry(t.clone()).or_default() += 1;
            if seen.insert(t.clone()) {
                *df.entry(t).or_default() += 1;
            }
        }
    }
    let mut kept: Vec<(String, usize)> = tf.into_iter().filter(|(t, _)| df[t] >= min_df.max(1)).collect();
    kept.sort_by(|(ta, ca), (tb, cb)| cb.cmp(ca).then_with(|| ta.cmp(tb)));
    if let Some(m) = max_features {
        kept.truncate(m);
    }
    let n = corpus.len();
    let terms: Vec<String> = kept.into_iter().map(|(t, _)| t).collect();
    let dfs: Vec<usize> = terms.iter().map(|t| df[t]).collect();
    let idf = dfs.iter().map(|&d| smoothed_idf(n, d)).collect();
    Ok(TfidfVocabulary::from_parts(terms, dfs, idf, n))
}

/// Raw counts and L2-normalized count x idf, both in vocabulary order.
pub fn transform_bow_tfidf(tweet: &TokenizedTweet, vocab: &TfidfVocabulary) -> (Vec<f64>, Vec<f64>) {
    let mut bow = vec![0.0; vocab.len()];
    for tok in &tweet.tokens {
        if let Some(i) = vocab.position(&tok.to_lowercase()) {
            bow[i] += 1.0;
        }
    }
    let mut tfidf: Vec<f64> = bow.iter().zip(&vocab.idf).map(|(c, w)| c * w).collect();
    let norm = tfidf.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        tfidf.iter_mut().for_each(|v| *v /= norm);
    }
    (bow, tfidf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(tokens: &[&str]) -> TokenizedTweet {
        TokenizedTweet::from_tokens(tokens.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn single_document_vocabulary() {
        let v = fit_bow_tfidf(&[doc(&["a", "a", "b"])], 1, None).unwrap();
        assert_eq!(v.terms, ["a", "b"]);
        assert_eq!(v.document_frequency, [1, 1]);
        assert!(fit_bow_tfidf(&[], 1, None).is_err());
    }

    #[test]
    fn min_df_and_max_features() {
        let corpus = [doc(&["x", "y", "Y"]), doc(&["y", "z"]), doc(&["z"])];
        let v = fit_bow_tfidf(&corpus, 2, None).unwrap();
        assert_eq!(v.terms, ["y", "z"]);
        let v = fit_bow_tfidf(&corpus, 1, Some(1)).unwrap();
        assert_eq!(v.terms, ["y"]);
    }

    #[test]
    fn idf_matches_formula() {
        // ln(3/2) + 1 = 1.405465108108164381978013115464349136571990423...
        assert!((smoothed_idf(2, 1) - 1.405_465_108_108_164_4).abs() < 1e-15);
        let v = fit_bow_tfidf(&[doc(&["a"]), doc(&["b"])], 1, None).unwrap();
        assert_eq!(v.idf, [smoothed_idf(2, 1); 2]);
    }

    #[test]
    fn transform_counts_and_normalizes() {
        let mut v = fit_bow_tfidf(&[doc(&["a", "a", "b"])], 1, None).unwrap();
        v.idf = vec![1.0, 1.0];
        let (bow, tfidf) = transform_bow_tfidf(&doc(&["a", "a"]), &v);
        assert_eq!(bow, [2.0, 0.0]);
        assert_eq!(tfidf, [1.0, 0.0]);
        let (bow, tfidf) = transform_bow_tfidf(&doc(&["q"]), &v);
        assert_eq!((bow, tfidf), (vec![0.0, 0.0], vec![0.0, 0.0]));
    }
}
