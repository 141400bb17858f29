//! Tweet normalization and tokenization.
//!
//! Normalization rewrites text through four lookup maps in a fixed order:
//! contractions, spelling, acronyms, symbols. Tokenization is a regex tweet
//! tokenizer that keeps URLs, mentions, hashtags and emoticons whole.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One rewrite table, compiled to a single longest-match-first alternation.
#[derive(Debug, Clone)]
pub struct RuleMap {
    entries: BTreeMap<String, String>,
    pattern: Option<Regex>,
    bounded: bool,
}

impl RuleMap {
    /// A word-bounded map: a key only matches where it is not glued to
    /// surrounding word characters.
    pub fn words(entries: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        Self::build(entries, true)
    }

    /// A map whose keys match anywhere; replacements are padded with spaces.
    pub fn symbols(entries: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        Self::build(entries, false)
    }

    fn build(entries: impl IntoIterator<Item = (String, String)>, bounded: bool) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, v) in entries {
            if k.is_empty() {
                return Err(Error::InvalidInput("rule with empty key".into()));
            }
            map.insert(k.to_lowercase(), v);
        }
        let pattern = if map.is_empty() {
            None
        } else {
            let mut keys: Vec<&String> = map.keys().collect();
            // longest first so the alternation prefers "can't" over "can"
            keys.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));
            let alts: Vec<String> = keys.iter().map(|k| regex::escape(k)).collect();
            let re = format!("(?i)(?:{})", alts.join("|"));
            Some(Regex::new(&re).map_err(|e| Error::InvalidInput(format!("rule pattern: {e}")))?)
        };
        Ok(RuleMap {
            entries: map,
            pattern,
            bounded,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn apply(&self, text: &str) -> String {
        let Some(re) = &self.pattern else {
            return text.to_string();
        };
        let mut out = String::with_capacity(text.len());
        let mut last = 0;
        let mut pos = 0;
        while let Some(m) = re.find_at(text, pos) {
            if self.bounded && !is_word_bounded(text, m.start(), m.end()) {
                // retry one char later; a shorter key may still fit here
                pos = m.start() + text[m.start()..].chars().next().map_or(1, char::len_utf8);
                if let Some(m2) = self.shorter_bounded_match(text, m.start(), m.end()) {
                    out.push_str(&text[last..m.start()]);
                    out.push_str(&self.entries[&text[m.start()..m2].to_lowercase()]);
                    last = m2;
                    pos = m2;
                }
                continue;
            }
            out.push_str(&text[last..m.start()]);
            let value = &self.entries[&m.as_str().to_lowercase()];
            if self.bounded {
                out.push_str(value);
            } else {
                out.push(' ');
                out.push_str(value);
                out.push(' ');
            }
            last = m.end();
            pos = m.end().max(m.start() + 1);
        }
        out.push_str(&text[last..]);
        if self.bounded {
            out
        } else {
            collapse_whitespace(&out)
        }
    }

    /// Longest key starting at `start`, shorter than the rejected match, that
    /// is word-bounded.
    fn shorter_bounded_match(&self, text: &str, start: usize, end: usize) -> Option<usize> {
        let mut ends: Vec<usize> = text[start..end].char_indices().map(|(i, _)| start + i).skip(1).collect();
        ends.reverse();
        ends.into_iter().find(|&e| {
            self.entries.contains_key(&text[start..e].to_lowercase()) && is_word_bounded(text, start, e)
        })
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_word_bounded(text: &str, start: usize, end: usize) -> bool {
    let matched = &text[start..end];
    let first_word = matched.chars().next().is_some_and(is_word_char);
    let last_word = matched.chars().next_back().is_some_and(is_word_char);
    let before_ok = !first_word || !text[..start].chars().next_back().is_some_and(|c| is_word_char(c) || c == '\'');
    let after_ok = !last_word || !text[end..].chars().next().is_some_and(|c| is_word_char(c) || c == '\'');
    before_ok && after_ok
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// The four normalization tables.
#[derive(Debug, Clone)]
pub struct NormalizationRules {
    pub contractions: RuleMap,
    pub acronyms: RuleMap,
    pub symbols: RuleMap,
    pub spelling: RuleMap,
}

impl Default for NormalizationRules {
    fn default() -> Self {
        let empty = || RuleMap::words(Vec::new()).expect("empty rule map");
        NormalizationRules {
            contractions: empty(),
            acronyms: empty(),
            symbols: RuleMap::symbols(Vec::new()).expect("empty rule map"),
            spelling: empty(),
        }
    }
}

/// Paths of the four rule files; any may be absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RulePaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contractions: Option<std::path::PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acronyms: Option<std::path::PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbols: Option<std::path::PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spelling: Option<std::path::PathBuf>,
}

impl NormalizationRules {
    pub fn load(paths: &RulePaths) -> Result<Self> {
        let words = |p: &Option<std::path::PathBuf>| -> Result<RuleMap> {
            match p {
                Some(p) => RuleMap::words(read_rule_file(p)?),
                None => RuleMap::words(Vec::new()),
            }
        };
        Ok(NormalizationRules {
            contractions: words(&paths.contractions)?,
            acronyms: words(&paths.acronyms)?,
            symbols: match &paths.symbols {
                Some(p) => RuleMap::symbols(read_rule_file(p)?)?,
                None => RuleMap::symbols(Vec::new())?,
            },
            spelling: words(&paths.spelling)?,
        })
    }
}

/// Parse `key<TAB>value` lines; blank lines and `#` comments are skipped.
pub fn parse_rules(text: &str, source_name: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(source_name, i + 1, "expected `key<TAB>value`"))?;
        if k.is_empty() {
            return Err(Error::parse(source_name, i + 1, "empty key"));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

pub fn read_rule_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_rules(&text, &path.display().to_string())
}

/// Contractions, then spelling, then acronyms, then symbols.
pub fn normalize(text: &str, rules: &NormalizationRules) -> String {
    let s = rules.contractions.apply(text);
    let s = rules.spelling.apply(&s);
    let s = rules.acronyms.apply(&s);
    rules.symbols.apply(&s)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenizedTweet {
    pub tokens: Vec<String>,
    pub hashtags: Vec<String>,
    pub emoticon_count: usize,
}

impl TokenizedTweet {
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let hashtags = tokens.iter().filter(|t| t.starts_with('#')).cloned().collect();
        let emoticon_count = tokens.iter().filter(|t| is_emoticon(t)).count();
        TokenizedTweet {
            tokens,
            hashtags,
            emoticon_count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

const EMOTICON: &str = r#"(?:[<>]?[:;=8][\-o\*']?[\)\]\(\[dDpP/:\}\{@\|\\]|[\)\]\(\[dDpP/:\}\{@\|\\][\-o\*']?[:;=8][<>]?|</?3)"#;
const PICTOGRAPH: &str = r"[\x{1F000}-\x{1FAFF}\x{2600}-\x{27BF}]";

static TOKEN_RE: LazyLock<Regex> = LazyLock::new(|| {
    let parts = [
        r"(?:https?://|www\.)\S+",
        EMOTICON,
        PICTOGRAPH,
        r"@\w+",
        r"#\w+",
        r"\d+(?:[.,:/]\d+)+",
        r"\w(?:[\w'’\-]*\w)?",
        r"\.(?:\s*\.){1,}",
        r"…",
        r"\S",
    ];
    Regex::new(&parts.join("|")).expect("token pattern")
});

static EMOTICON_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!("^(?:{EMOTICON}|{PICTOGRAPH})$")).expect("emoticon pattern"));

/// Whether a whole token is an emoticon or pictographic emoji.
pub fn is_emoticon(token: &str) -> bool {
    EMOTICON_RE.is_match(token)
}

/// Split a tweet into tokens. Case is preserved; only whitespace is dropped.
pub fn tokenize(text: &str) -> TokenizedTweet {
    let tokens = TOKEN_RE.find_iter(text).map(|m| m.as_str().to_string()).collect();
    TokenizedTweet::from_tokens(tokens)
}
