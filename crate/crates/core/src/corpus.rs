//! Threaded-discussion corpus ingestion, sentence segmentation, and
//! extraction of discourse-marker instances with context windows and
//! persuasion-outcome flags.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textproc::tokenize;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}:{line}: malformed record: {detail}")]
    Malformed {
        path: String,
        line: usize,
        detail: String,
    },
    #[error("{path}:{line}: duplicate comment id `{id}` with differing text")]
    ConflictingDuplicate {
        path: String,
        line: usize,
        id: String,
    },
    #[error("{path}:{line}: invariant violation: {detail}")]
    Invariant {
        path: String,
        line: usize,
        detail: String,
    },
    #[error("unsupported corpus format `{0}` (supported: jsonl-v1)")]
    UnknownFormat(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// One comment in a discussion thread.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub id: String,
    pub thread_id: String,
    pub parent_id: Option<String>,
    pub author_id: String,
    pub text: String,
    pub is_original_post: bool,
    pub delta_awarded: bool,
}

/// The four polysemous target markers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Marker {
    But,
    Though,
    However,
    While,
}

impl Marker {
    pub const ALL: [Marker; 4] = [Marker::But, Marker::Though, Marker::However, Marker::While];

    pub fn as_str(&self) -> &'static str {
        match self {
            Marker::But => "but",
            Marker::Though => "though",
            Marker::However => "however",
            Marker::While => "while",
        }
    }
}

impl fmt::Display for Marker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Marker {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "but" => Ok(Marker::But),
            "though" => Ok(Marker::Though),
            "however" => Ok(Marker::However),
            "while" => Ok(Marker::While),
            other => Err(format!("unknown marker `{other}`")),
        }
    }
}

/// Which partition an instance belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
    Unlabeled,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
            Split::Unlabeled => "unlabeled",
        };
        f.write_str(s)
    }
}

/// Binary classification label: argumentative concession vs anything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "arg_c")]
    ArgC,
    #[serde(rename = "other")]
    Other,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::ArgC => "arg_c",
            Label::Other => "other",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "arg_c" => Ok(Label::ArgC),
            "other" => Ok(Label::Other),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

/// One occurrence of a target marker: the sentence it occurs in plus the
/// neighboring sentences and the thread's persuasion outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerInstance {
    pub id: String,
    pub comment_id: String,
    pub marker: Marker,
    pub sentence: String,
    pub prev_sentence: Option<String>,
    pub next_sentence: Option<String>,
    /// Index of the marker within the tokenized sentence.
    pub marker_token_index: usize,
    pub delta_awarded: bool,
    pub split: Split,
}

/// An instance plus optional annotations, as serialized in `instances-v1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRecord {
    #[serde(flatten)]
    pub instance: MarkerInstance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<Label>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crowd_labels: Option<Vec<Label>>,
}

/// Census row for one candidate marker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerCensusRow {
    pub marker: String,
    pub count_delta: u64,
    pub count_no_delta: u64,
}

/// The 19 candidate concession markers, multiword forms included.
pub const CENSUS_MARKERS: [&str; 19] = [
    "admit",
    "albeit",
    "although",
    "but",
    "concede",
    "despite",
    "even if",
    "even though",
    "even when",
    "however",
    "in spite of",
    "nevertheless",
    "notwithstanding",
    "non the less",
    "nonetheless",
    "the fact remains that",
    "though",
    "whereas",
    "while",
];

/// Supported corpus file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One JSON object per line with keys id, thread_id, parent_id,
    /// author_id, text, is_original_post, delta_awarded.
    JsonlV1,
}

impl FromStr for CorpusFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jsonl-v1" => Ok(CorpusFormat::JsonlV1),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawComment {
    id: String,
    thread_id: String,
    #[serde(default)]
    parent_id: Option<String>,
    author_id: String,
    text: String,
    is_original_post: bool,
    delta_awarded: bool,
}

/// Read a corpus file. Output is ordered by `(thread_id, id)`; exact
/// duplicate `(id, text)` pairs are deduplicated keeping the first
/// occurrence; a repeated id with different text is an error.
pub fn ingest(path: &Path, format: CorpusFormat) -> Result<Vec<Comment>, CorpusError> {
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ingest_reader(BufReader::new(file), format, &path.display().to_string())
}

pub fn ingest_reader<R: BufRead>(
    reader: R,
    format: CorpusFormat,
    path: &str,
) -> Result<Vec<Comment>, CorpusError> {
    let CorpusFormat::JsonlV1 = format;
    let mut by_id: BTreeMap<String, (Comment, usize)> = BTreeMap::new();

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawComment =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                path: path.to_string(),
                line: lineno,
                detail: e.to_string(),
            })?;
        if raw.text.trim().is_empty() {
            return Err(CorpusError::Invariant {
                path: path.to_string(),
                line: lineno,
                detail: format!("comment `{}` has empty text", raw.id),
            });
        }
        if raw.is_original_post && raw.parent_id.is_some() {
            return Err(CorpusError::Invariant {
                path: path.to_string(),
                line: lineno,
                detail: format!("original post `{}` must not have a parent_id", raw.id),
            });
        }
        let comment = Comment {
            id: raw.id,
            thread_id: raw.thread_id,
            parent_id: raw.parent_id,
            author_id: raw.author_id,
            text: raw.text,
            is_original_post: raw.is_original_post,
            delta_awarded: raw.delta_awarded,
        };
        match by_id.get(&comment.id) {
            Some((existing, _)) => {
                if existing.text != comment.text {
                    return Err(CorpusError::ConflictingDuplicate {
                        path: path.to_string(),
                        line: lineno,
                        id: comment.id,
                    });
                }
                // exact duplicate: drop the later occurrence
            }
            None => {
                by_id.insert(comment.id.clone(), (comment, lineno));
            }
        }
    }

    let mut comments: Vec<Comment> = by_id.into_values().map(|(c, _)| c).collect();
    comments.sort_by(|a, b| (&a.thread_id, &a.id).cmp(&(&b.thread_id, &b.id)));
    Ok(comments)
}

/// Write comments back out in `jsonl-v1`.
pub fn write_comments<W: Write>(mut w: W, comments: &[Comment]) -> std::io::Result<()> {
    for c in comments {
        serde_json::to_writer(&mut w, c)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

const ABBREVIATIONS: [&str; 8] = ["mr.", "mrs.", "dr.", "e.g.", "i.e.", "etc.", "vs.", "u.s."];

/// Rule-based sentence splitter: break after `.`/`!`/`?` followed by
/// whitespace and an uppercase letter or digit, unless the terminator ends
/// a known abbreviation. Whitespace-insensitive concatenation of the output
/// reproduces the input.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let n = chars.len();
    let mut sentences = Vec::new();
    let mut start = 0usize; // byte offset of current sentence start

    let mut i = 0;
    while i < n {
        let (byte, c) = chars[i];
        if c == '.' || c == '!' || c == '?' {
            // require at least one whitespace char after the terminator
            let mut j = i + 1;
            if j < n && chars[j].1.is_whitespace() {
                while j < n && chars[j].1.is_whitespace() {
                    j += 1;
                }
                let next_ok = j < n && (chars[j].1.is_uppercase() || chars[j].1.is_ascii_digit());
                if next_ok && !ends_with_abbreviation(text, byte, c) {
                    let end = chars[i + 1].0;
                    let sent = text[start..end].trim();
                    if !sent.is_empty() {
                        sentences.push(sent.to_string());
                    }
                    start = chars[j].0;
                    i = j;
                    continue;
                }
            }
        }
        i += 1;
    }

    let tail = text[start..].trim();
    if !tail.is_empty() {
        sentences.push(tail.to_string());
    }
    sentences
}

/// Does the word ending at this `.` (inclusive) match the abbreviation
/// guard list? Only meaningful for `.`; `!`/`?` never end abbreviations.
fn ends_with_abbreviation(text: &str, dot_byte: usize, terminator: char) -> bool {
    if terminator != '.' {
        return false;
    }
    let head = &text[..dot_byte + 1];
    let word_start = head
        .rfind(|c: char| c.is_whitespace())
        .map(|p| p + 1)
        .unwrap_or(0);
    let word = head[word_start..].to_lowercase();
    ABBREVIATIONS.iter().any(|a| word == *a)
}

/// Extract one instance per `(comment, sentence, marker occurrence)`.
/// Markers match case-insensitively as standalone tokens; previous and next
/// sentences are attached whenever they exist in the comment.
pub fn extract_marker_instances(
    comments: &[Comment],
    markers: &[Marker],
    split: Split,
) -> Vec<MarkerInstance> {
    let mut out = Vec::new();
    for comment in comments {
        let sentences = segment_sentences(&comment.text);
        for (si, sentence) in sentences.iter().enumerate() {
            let toks = tokenize(sentence);
            for (ti, tok) in toks.tokens.iter().enumerate() {
                for &marker in markers {
                    if tok == marker.as_str() {
                        out.push(MarkerInstance {
                            id: format!("{}:{}:{}:{}", comment.id, si, ti, marker),
                            comment_id: comment.id.clone(),
                            marker,
                            sentence: sentence.clone(),
                            prev_sentence: si.checked_sub(1).map(|p| sentences[p].clone()),
                            next_sentence: sentences.get(si + 1).cloned(),
                            marker_token_index: ti,
                            delta_awarded: comment.delta_awarded,
                            split,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Count all 19 candidate markers across the corpus, split by persuasion
/// outcome. Multiword markers match longest-first and each token belongs to
/// at most one match.
pub fn marker_census(comments: &[Comment]) -> Vec<MarkerCensusRow> {
    // sort patterns by token length, longest first, for greedy matching
    let mut patterns: Vec<(Vec<&str>, usize)> = CENSUS_MARKERS
        .iter()
        .enumerate()
        .map(|(idx, m)| (m.split(' ').collect::<Vec<_>>(), idx))
        .collect();
    patterns.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.1.cmp(&b.1)));

    let mut counts = vec![(0u64, 0u64); CENSUS_MARKERS.len()];
    for comment in comments {
        let toks = tokenize(&comment.text);
        let tokens = &toks.tokens;
        let mut i = 0;
        while i < tokens.len() {
            let mut matched = None;
            for (pat, idx) in &patterns {
                if i + pat.len() <= tokens.len()
                    && pat.iter().zip(&tokens[i..]).all(|(p, t)| *p == t.as_str())
                {
                    matched = Some((*idx, pat.len()));
                    break;
                }
            }
            match matched {
                Some((idx, len)) => {
                    if comment.delta_awarded {
                        counts[idx].0 += 1;
                    } else {
                        counts[idx].1 += 1;
                    }
                    i += len;
                }
                None => i += 1,
            }
        }
    }

    CENSUS_MARKERS
        .iter()
        .zip(counts)
        .map(|(marker, (d, nd))| MarkerCensusRow {
            marker: marker.to_string(),
            count_delta: d,
            count_no_delta: nd,
        })
        .collect()
}

/// Read an `instances-v1` file: one JSON object per line.
pub fn read_instances(path: &Path) -> Result<Vec<InstanceRecord>, CorpusError> {
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: InstanceRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                path: path.display().to_string(),
                line: lineno + 1,
                detail: e.to_string(),
            })?;
        out.push(rec);
    }
    Ok(out)
}

/// Write instance records in `instances-v1`.
pub fn write_instances<W: Write>(mut w: W, records: &[InstanceRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
