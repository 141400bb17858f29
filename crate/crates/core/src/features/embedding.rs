//! Word-vector tables in word2vec text format.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::preprocess::TokenizedTweet;

#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, vectors: HashMap<String, Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("embedding dimension must be positive".into()));
        }
        if let Some((tok, v)) = vectors.iter().find(|(_, v)| v.len() != dim) {
            return Err(Error::InvalidInput(format!(
                "vector for `{tok}` has length {}, table dim is {dim}",
                v.len()
            )));
        }
        let vectors = vectors.into_iter().map(|(k, v)| (k.to_lowercase(), v)).collect();
        Ok(EmbeddingTable { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(&token.to_lowercase()).map(Vec::as_slice)
    }

    /// `token v1 ... vD` per line, with an optional leading `count dim`
    /// header. The first occurrence of a (lowercased) token wins.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut dim: Option<usize> = None;
        let mut vectors = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(token) = parts.next() else { continue };
            let rest: Vec<&str> = parts.collect();
            if i == 0 && rest.len() == 1 {
                if let (Ok(_), Ok(d)) = (token.parse::<usize>(), rest[0].parse::<usize>()) {
                    dim = Some(d);
                    continue;
                }
            }
            let values = rest
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::parse(source_name, i + 1, "non-numeric vector component"))?;
            let want = *dim.get_or_insert(values.len());
            if values.len() != want {
                return Err(Error::parse(
                    source_name,
                    i + 1,
                    format!("vector has {} components, expected {want}", values.len()),
                ));
            }
            vectors.entry(token.to_lowercase()).or_insert(values);
        }
        let dim = dim.ok_or_else(|| Error::parse(source_name, 1, "empty embedding file"))?;
        EmbeddingTable::new(dim, vectors)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Elementwise mean over in-vocabulary tokens; zeros when none hit.
    pub fn mean_vector(&self, tweet: &TokenizedTweet) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        let mut hits = 0usize;
        for v in tweet.tokens.iter().filter_map(|t| self.get(t)) {
            for (a, x) in acc.iter_mut().zip(v) {
                *a += x;
            }
            hits += 1;
        }
        if hits > 0 {
            let n = hits as f64;
            acc.iter_mut().for_each(|a| *a /= n);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tweet(tokens: &[&str]) -> TokenizedTweet {
        TokenizedTweet::from_tokens(tokens.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn hand_average() {
        let t = EmbeddingTable::parse("a 1 3\nb 3 1\n", "t").unwrap();
        assert_eq!(t.mean_vector(&tweet(&["a", "b"])), [2.0, 2.0]);
        assert_eq!(t.mean_vector(&tweet(&["A", "zzz"])), [1.0, 3.0]);
        assert_eq!(t.mean_vector(&tweet(&["x", "y"])), [0.0, 0.0]);
    }

    #[test]
    fn header_line_and_errors() {
        let t = EmbeddingTable::parse("2 3\nfoo 1 2 3\nbar 4 5 6\n", "t").unwrap();
        assert_eq!((t.dim(), t.len()), (3, 2));
        assert!(EmbeddingTable::parse("2 3\nfoo 1 2\n", "t").is_err());
        assert!(EmbeddingTable::parse("foo 1 2\nbar 1\n", "t").is_err());
        assert!(EmbeddingTable::parse("", "t").is_err());
    }

    #[test]
    fn glove_width() {
        let line: String = std::iter::once("the".to_string())
            .chain((0..300).map(|i| format!("{}", i as f64 / 300.0)))
            .collect::<Vec<_>>()
            .join(" ");
        let t = EmbeddingTable::parse(&line, "glove").unwrap();
        assert_eq!(t.mean_vector(&tweet(&["the"])).len(), 300);
    }
}
