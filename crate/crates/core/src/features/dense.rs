//! Precomputed per-tweet vectors from external encoders.
//!
//! File layout: a `#dim <D> #name <group>` header, then one
//! `sample_id<TAB>v1 v2 ... vD` line per tweet.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseCache {
    pub name: String,
    pub dim: usize,
    rows: HashMap<String, Vec<f64>>,
}

impl DenseCache {
    pub fn new(name: impl Into<String>, dim: usize) -> Self {
        DenseCache {
            name: name.into(),
            dim,
            rows: HashMap::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, row: Vec<f64>) -> Result<()> {
        let id = id.into();
        if row.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "row `{id}` has {} values, cache `{}` has dim {}",
                row.len(),
                self.name,
                self.dim
            )));
        }
        if self.rows.contains_key(&id) {
            return Err(Error::InvalidInput(format!("duplicate id `{id}` in cache `{}`", self.name)));
        }
        self.rows.insert(id, row);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.rows.get(id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(source_name, 1, "missing `#dim <D> #name <group>` header"))?;
        let (dim, name) = parse_header(header).ok_or_else(|| {
            Error::parse(source_name, 1, format!("bad header `{header}`; expected `#dim <D> #name <group>`"))
        })?;
        let mut cache = DenseCache::new(name, dim);
        for (i, line) in lines {
            let (id, values) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(source_name, i + 1, "expected `sample_id<TAB>values`"))?;
            let row = values
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::parse(source_name, i + 1, format!("non-numeric value for `{id}`")))?;
            if row.len() != dim {
                return Err(Error::parse(
                    source_name,
                    i + 1,
                    format!("sample `{id}` has {} values, header dim is {dim}", row.len()),
                ));
            }
            if cache.rows.contains_key(id) {
                return Err(Error::parse(source_name, i + 1, format!("duplicate sample id `{id}`")));
            }
            cache.rows.insert(id.to_string(), row);
        }
        Ok(cache)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Write rows in the given id order.
    pub fn write<W: Write>(&self, ids: &[&str], mut out: W) -> Result<()> {
        let io = |e| Error::io("<dense cache>", e);
        writeln!(out, "#dim {} #name {}", self.dim, self.name).map_err(io)?;
        for id in ids {
            let row = self.get(id).ok_or_else(|| Error::MissingRow {
                sample_id: id.to_string(),
                group: self.name.clone(),
            })?;
            let values: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "{id}\t{}", values.join(" ")).map_err(io)?;
        }
        Ok(())
    }
}

fn parse_header(line: &str) -> Option<(usize, String)> {
    let mut parts = line.split_whitespace();
    if parts.next()? != "#dim" {
        return None;
    }
    let dim: usize = parts.next()?.parse().ok().filter(|&d| d > 0)?;
    if parts.next()? != "#name" {
        return None;
    }
    let name = parts.next()?.to_string();
    parts.next().is_none().then_some((dim, name))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cache_text(name: &str, dim: usize, ids: &[&str]) -> String {
        let mut s = format!("#dim {dim} #name {name}\n");
        for (i, id) in ids.iter().enumerate() {
            let row: Vec<String> = (0..dim).map(|j| format!("{}", (i * dim + j) as f64 * 0.5)).collect();
            s.push_str(&format!("{id}\t{}\n", row.join(" ")));
        }
        s
    }

    #[test]
    fn encoder_widths() {
        for (name, dim) in [("deepemoji_softmax", 64), ("skipthought", 4800), ("sentiment_neuron", 4096)] {
            let c = DenseCache::parse(&cache_text(name, dim, &["t1", "t2"]), "c").unwrap();
            assert_eq!(c.dim, dim);
            assert_eq!(c.name, name);
            assert_eq!(c.get("t2").unwrap().len(), dim);
        }
    }

    #[test]
    fn row_width_mismatch_names_sample() {
        let text = "#dim 3 #name x\nt1\t1 2 3\nt2\t1 2\n";
        let err = DenseCache::parse(text, "c").unwrap_err().to_string();
        assert!(err.contains("t2"), "{err}");
    }

    #[test]
    fn duplicates_and_bad_headers() {
        assert!(DenseCache::parse("#dim 1 #name x\nt1\t1\nt1\t2\n", "c").is_err());
        assert!(DenseCache::parse("#dim 0 #name x\n", "c").is_err());
        assert!(DenseCache::parse("dim 3\n", "c").is_err());
        assert!(DenseCache::parse("", "c").is_err());
    }

    #[test]
    fn write_then_parse() {
        let c = DenseCache::parse(&cache_text("g", 4, &["a", "b", "c"]), "c").unwrap();
        let mut buf = Vec::new();
        c.write(&["a", "b", "c"], &mut buf).unwrap();
        let back = DenseCache::parse(std::str::from_utf8(&buf).unwrap(), "c").unwrap();
        assert_eq!(back, c);
    }
}
