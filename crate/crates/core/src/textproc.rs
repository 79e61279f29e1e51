//! Tokenization, n-gram extraction, stopword filtering, and Jaccard similarity.
//!
//! Everything here is a pure function over immutable inputs; callers may
//! parallelize freely.

use std::collections::BTreeSet;
use std::path::Path;

use thiserror::Error;

/// Bundled stopword list shipped with the crate (`data/stopwords.txt`).
pub const BUILTIN_STOPWORDS: &str = include_str!("../data/stopwords.txt");

#[derive(Debug, Error)]
pub enum TextError {
    #[error("failed to read stopword file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// A tokenized string: lowercased tokens plus their byte offsets in the
/// source text.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    /// Half-open byte ranges `(start, end)` into the source, one per token,
    /// monotonically increasing.
    pub spans: Vec<(usize, usize)>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn as_strs(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Lowercasing word tokenizer. Contractions stay intact ("don't" is one
/// token); runs of punctuation split off as their own tokens ("..." is a
/// single token). An apostrophe is part of a word only when alphanumerics
/// flank it on both sides.
pub fn tokenize(text: &str) -> TokenSequence {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let n = chars.len();
    let mut tokens = Vec::new();
    let mut spans = Vec::new();
    let mut i = 0;

    let end_of = |idx: usize| -> usize {
        if idx + 1 < n {
            chars[idx + 1].0
        } else {
            text.len()
        }
    };

    while i < n {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if is_word_char(c) {
            let mut j = i;
            while j + 1 < n {
                let next = chars[j + 1].1;
                if is_word_char(next) {
                    j += 1;
                } else if next == '\'' && j + 2 < n && is_word_char(chars[j + 2].1) {
                    // interior apostrophe: don't, you're
                    j += 2;
                } else {
                    break;
                }
            }
            let end = end_of(j);
            tokens.push(text[start..end].to_lowercase());
            spans.push((start, end));
            i = j + 1;
        } else {
            // run of identical-category punctuation/symbols
            let mut j = i;
            while j + 1 < n {
                let next = chars[j + 1].1;
                if next.is_whitespace() || is_word_char(next) {
                    break;
                }
                j += 1;
            }
            let end = end_of(j);
            tokens.push(text[start..end].to_lowercase());
            spans.push((start, end));
            i = j + 1;
        }
    }

    TokenSequence { tokens, spans }
}

/// Contiguous n-grams joined by single spaces, in source order.
/// Yields `max(0, len - n + 1)` grams.
pub fn ngrams(tokens: &[String], n: usize) -> Vec<String> {
    assert!(n >= 1, "n-gram order must be at least 1");
    if tokens.len() < n {
        return Vec::new();
    }
    tokens.windows(n).map(|w| w.join(" ")).collect()
}

/// Jaccard similarity of two token sets after stopword removal.
/// Defined as 0 when the union is empty (e.g. both sides all stopwords).
pub fn jaccard<'a, A, B>(a: A, b: B, stopwords: &StopwordList) -> f64
where
    A: IntoIterator<Item = &'a str>,
    B: IntoIterator<Item = &'a str>,
{
    let sa: BTreeSet<&str> = a.into_iter().filter(|t| !stopwords.contains(t)).collect();
    let sb: BTreeSet<&str> = b.into_iter().filter(|t| !stopwords.contains(t)).collect();
    let union = sa.union(&sb).count();
    if union == 0 {
        return 0.0;
    }
    let inter = sa.intersection(&sb).count();
    inter as f64 / union as f64
}

/// A lowercase stopword set loaded from a list file.
#[derive(Debug, Clone, Default)]
pub struct StopwordList {
    words: BTreeSet<String>,
}

impl StopwordList {
    /// Parse from list text: one token per line, `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(|l| l.trim())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.to_lowercase())
            .collect();
        StopwordList { words }
    }

    /// The list shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_STOPWORDS)
    }

    pub fn load(path: &Path) -> Result<Self, TextError> {
        let text = std::fs::read_to_string(path).map_err(|source| TextError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}
