//! Closed word lists (pronouns, modals, hedges, negation, attitude
//! indicators, sentiment verbs) and loaders for external sentiment lexicons.
//!
//! Lexicons are immutable after construction and safe to share across
//! threads.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const HEDGES_FILE: &str = include_str!("../data/hedges.txt");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("unknown builtin lexicon `{0}`; valid names: pronouns, modals, hedges, negation, attitude_indicators, sentiment_verbs")]
    UnknownBuiltin(String),
    #[error("{path}:{line}: unknown polarity `{polarity}`")]
    UnknownPolarity {
        path: String,
        line: usize,
        polarity: String,
    },
    #[error("{path}:{line}: malformed {format} record: {detail}")]
    Malformed {
        path: String,
        line: usize,
        format: &'static str,
        detail: String,
    },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Tag attached to a lexicon entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LexTag {
    FirstPerson,
    SecondPerson,
    Modal,
    Hedge,
    Negation,
    Positive,
    Negative,
    Neutral,
}

/// A named term-to-tag mapping. Terms are lowercase and may span multiple
/// tokens ("tend to"); no term maps to two tags within one lexicon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lexicon {
    pub name: String,
    pub entries: BTreeMap<String, LexTag>,
    pub version: String,
    /// Longest entry measured in whitespace-separated tokens.
    max_term_tokens: usize,
}

impl Lexicon {
    pub fn from_entries(name: &str, version: &str, entries: BTreeMap<String, LexTag>) -> Self {
        let max_term_tokens = entries
            .keys()
            .map(|t| t.split_whitespace().count())
            .max()
            .unwrap_or(1);
        Lexicon {
            name: name.to_string(),
            entries,
            version: version.to_string(),
            max_term_tokens,
        }
    }

    pub fn tag_of(&self, term: &str) -> Option<LexTag> {
        self.entries.get(term).copied()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.entries.contains_key(term)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when any entry occurs in `tokens`, checking joined n-grams up to
    /// the longest entry length so multiword cues ("tend to") match.
    pub fn matches_any(&self, tokens: &[String]) -> bool {
        self.first_match(tokens).is_some()
    }

    /// First matching entry tag in token order, if any.
    pub fn first_match(&self, tokens: &[String]) -> Option<LexTag> {
        for start in 0..tokens.len() {
            let mut joined = String::new();
            for len in 1..=self.max_term_tokens.min(tokens.len() - start) {
                if len > 1 {
                    joined.push(' ');
                }
                joined.push_str(&tokens[start + len - 1]);
                if let Some(tag) = self.entries.get(&joined) {
                    return Some(*tag);
                }
            }
        }
        None
    }

    /// Tags of all entries occurring in `tokens` (deduplicated).
    pub fn all_matching_tags(&self, tokens: &[String]) -> Vec<LexTag> {
        let mut tags = std::collections::BTreeSet::new();
        for start in 0..tokens.len() {
            let mut joined = String::new();
            for len in 1..=self.max_term_tokens.min(tokens.len() - start) {
                if len > 1 {
                    joined.push(' ');
                }
                joined.push_str(&tokens[start + len - 1]);
                if let Some(tag) = self.entries.get(&joined) {
                    tags.insert(*tag);
                }
            }
        }
        tags.into_iter().collect()
    }
}

/// Identifiers of the lists shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinLexicon {
    Pronouns,
    Modals,
    Hedges,
    Negation,
    AttitudeIndicators,
    SentimentVerbs,
}

impl FromStr for BuiltinLexicon {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pronouns" => Ok(Self::Pronouns),
            "modals" => Ok(Self::Modals),
            "hedges" => Ok(Self::Hedges),
            "negation" => Ok(Self::Negation),
            "attitude_indicators" => Ok(Self::AttitudeIndicators),
            "sentiment_verbs" => Ok(Self::SentimentVerbs),
            other => Err(LexiconError::UnknownBuiltin(other.to_string())),
        }
    }
}

impl fmt::Display for BuiltinLexicon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Pronouns => "pronouns",
            Self::Modals => "modals",
            Self::Hedges => "hedges",
            Self::Negation => "negation",
            Self::AttitudeIndicators => "attitude_indicators",
            Self::SentimentVerbs => "sentiment_verbs",
        };
        f.write_str(s)
    }
}

/// Return a shipped closed-class list by id.
pub fn builtin(name: BuiltinLexicon) -> Lexicon {
    let mut entries = BTreeMap::new();
    match name {
        BuiltinLexicon::Pronouns => {
            for t in ["i", "me", "my", "mine"] {
                entries.insert(t.to_string(), LexTag::FirstPerson);
            }
            for t in ["you", "your", "you're"] {
                entries.insert(t.to_string(), LexTag::SecondPerson);
            }
        }
        BuiltinLexicon::Modals => {
            for t in [
                "can", "could", "may", "might", "must", "shall", "should", "will", "would",
            ] {
                entries.insert(t.to_string(), LexTag::Modal);
            }
        }
        BuiltinLexicon::Hedges => {
            for line in HEDGES_FILE.lines() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                entries.insert(line.to_lowercase(), LexTag::Hedge);
            }
        }
        BuiltinLexicon::Negation => {
            for t in [
                "not", "n't", "never", "no", "none", "nothing", "neither", "nor", "cannot",
            ] {
                entries.insert(t.to_string(), LexTag::Negation);
            }
        }
        BuiltinLexicon::AttitudeIndicators => {
            // "be right" / "be correct" are matched structurally, see
            // `has_attitude_indicator`.
            for t in ["think", "realize", "be right", "be correct"] {
                entries.insert(t.to_string(), LexTag::Neutral);
            }
        }
        BuiltinLexicon::SentimentVerbs => {
            for t in ["love", "like"] {
                entries.insert(t.to_string(), LexTag::Positive);
            }
        }
    }
    Lexicon::from_entries(&name.to_string(), "builtin-v1", entries)
}

/// Parse a builtin lexicon id from text before loading.
pub fn builtin_by_name(name: &str) -> Result<Lexicon, LexiconError> {
    Ok(builtin(name.parse()?))
}

/// Negation test used by gap matching: exact list membership or an
/// "n't"-contracted token ("don't", "isn't").
pub fn is_negation(token: &str, negation: &Lexicon) -> bool {
    negation.contains(token) || token.ends_with("n't")
}

const BE_FORMS: [&str; 8] = ["be", "am", "is", "are", "was", "were", "been", "being"];

fn is_be_form(token: &str) -> bool {
    BE_FORMS.contains(&token)
        || token.ends_with("'re")
        || token.ends_with("'s")
        || token.ends_with("'m")
}

/// True when the tokens contain a propositional-attitude indicator: the
/// plain verbs of the attitude list, or a form of "be" followed within two
/// tokens by "right" or "correct" ("you are right", "you're probably
/// correct").
pub fn has_attitude_indicator(tokens: &[String], attitude: &Lexicon) -> bool {
    for (i, tok) in tokens.iter().enumerate() {
        if attitude.contains(tok) {
            return true;
        }
        if is_be_form(tok) {
            for next in tokens.iter().skip(i + 1).take(2) {
                if next == "right" || next == "correct" {
                    return true;
                }
            }
        }
    }
    false
}

/// Sentiment lexicon file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SentimentFormat {
    /// `term<TAB>polarity` per line, polarity in {positive, negative, neutral}.
    Tsv,
    /// MPQA subjectivity-clues lines of `key=value` pairs; only `word1` and
    /// `priorpolarity` are consumed (`both` maps to neutral).
    Mpqa,
}

/// A loaded sentiment lexicon plus any conflict warnings encountered.
#[derive(Debug, Clone)]
pub struct SentimentLoad {
    pub lexicon: Lexicon,
    pub warnings: Vec<String>,
}

fn polarity_tag(s: &str) -> Option<LexTag> {
    match s {
        "positive" => Some(LexTag::Positive),
        "negative" => Some(LexTag::Negative),
        "neutral" | "both" => Some(LexTag::Neutral),
        _ => None,
    }
}

/// Load and merge a sentiment lexicon. On a term conflict within one file
/// the first entry wins and a warning is recorded.
pub fn load_sentiment(path: &Path, format: SentimentFormat) -> Result<SentimentLoad, LexiconError> {
    let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_sentiment_str(&text, format, &path.display().to_string())
}

fn load_sentiment_str(
    text: &str,
    format: SentimentFormat,
    path: &str,
) -> Result<SentimentLoad, LexiconError> {
    let mut entries: BTreeMap<String, LexTag> = BTreeMap::new();
    let mut warnings = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = lineno + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (term, polarity) = match format {
            SentimentFormat::Tsv => {
                let mut parts = line.splitn(2, '\t');
                let term = parts.next().unwrap_or("").trim();
                let pol = parts.next().map(str::trim);
                match pol {
                    Some(p) if !term.is_empty() => (term.to_lowercase(), p.to_string()),
                    _ => {
                        return Err(LexiconError::Malformed {
                            path: path.to_string(),
                            line: lineno,
                            format: "tsv",
                            detail: "expected `term<TAB>polarity`".to_string(),
                        })
                    }
                }
            }
            SentimentFormat::Mpqa => {
                let mut word = None;
                let mut pol = None;
                for field in line.split_whitespace() {
                    if let Some((k, v)) = field.split_once('=') {
                        match k {
                            "word1" => word = Some(v.to_lowercase()),
                            "priorpolarity" => pol = Some(v.to_string()),
                            _ => {}
                        }
                    }
                }
                match (word, pol) {
                    (Some(w), Some(p)) => (w, p),
                    _ => {
                        return Err(LexiconError::Malformed {
                            path: path.to_string(),
                            line: lineno,
                            format: "mpqa",
                            detail: "missing word1= or priorpolarity= field".to_string(),
                        })
                    }
                }
            }
        };
        let tag = polarity_tag(&polarity).ok_or_else(|| LexiconError::UnknownPolarity {
            path: path.to_string(),
            line: lineno,
            polarity: polarity.clone(),
        })?;
        match entries.get(&term) {
            Some(prev) => {
                if *prev != tag {
                    warnings.push(format!(
                        "{path}:{lineno}: `{term}` already mapped to {prev:?}; keeping first entry"
                    ));
                }
            }
            None => {
                entries.insert(term, tag);
            }
        }
    }

    Ok(SentimentLoad {
        lexicon: Lexicon::from_entries("sentiment", "loaded-v1", entries),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pronouns_tags() {
        let lex = builtin(BuiltinLexicon::Pronouns);
        assert_eq!(lex.tag_of("your"), Some(LexTag::SecondPerson));
        assert_eq!(lex.tag_of("i"), Some(LexTag::FirstPerson));
        assert_eq!(lex.tag_of("she"), None);
    }

    #[test]
    fn negation_members() {
        let lex = builtin(BuiltinLexicon::Negation);
        for t in ["not", "n't", "never", "no"] {
            assert!(lex.contains(t), "missing {t}");
        }
        assert!(is_negation("don't", &lex));
        assert!(is_negation("cannot", &lex));
        assert!(!is_negation("note", &lex));
    }

    #[test]
    fn modals_members() {
        let lex = builtin(BuiltinLexicon::Modals);
        assert!(lex.contains("could") && lex.contains("should"));
    }

    #[test]
    fn unknown_builtin_lists_valid_names() {
        let err = builtin_by_name("nope").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("pronouns") && msg.contains("sentiment_verbs"));
    }

    #[test]
    fn hedge_multiword_matching() {
        let lex = builtin(BuiltinLexicon::Hedges);
        let toks: Vec<String> = ["i", "tend", "to", "accept"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert!(lex.matches_any(&toks));
        let toks2: Vec<String> = ["costs", "matter"].iter().map(|s| s.to_string()).collect();
        assert!(!lex.matches_any(&toks2));
    }

    #[test]
    fn attitude_constructions() {
        let att = builtin(BuiltinLexicon::AttitudeIndicators);
        let t = |s: &str| -> Vec<String> { s.split(' ').map(str::to_string).collect() };
        assert!(has_attitude_indicator(&t("i think so"), &att));
        assert!(has_attitude_indicator(&t("you are right"), &att));
        assert!(has_attitude_indicator(&t("you are probably correct"), &att));
        assert!(has_attitude_indicator(&t("you're right"), &att));
        // "right" more than two tokens past the be-form
        assert!(!has_attitude_indicator(
            &t("you are very clearly not right"),
            &att
        ));
        assert!(!has_attitude_indicator(&t("costs matter"), &att));
    }

    #[test]
    fn tsv_sentiment() {
        let load = load_sentiment_str("excellent\tpositive\n", SentimentFormat::Tsv, "mem").unwrap();
        assert_eq!(load.lexicon.tag_of("excellent"), Some(LexTag::Positive));
        assert!(load.warnings.is_empty());
    }

    #[test]
    fn tsv_conflict_first_wins() {
        let load = load_sentiment_str(
            "good\tpositive\ngood\tnegative\n",
            SentimentFormat::Tsv,
            "mem",
        )
        .unwrap();
        assert_eq!(load.lexicon.tag_of("good"), Some(LexTag::Positive));
        assert_eq!(load.warnings.len(), 1);
    }

    #[test]
    fn tsv_unknown_polarity_names_line() {
        let err =
            load_sentiment_str("fine\tpositive\nbad\tawful\n", SentimentFormat::Tsv, "mem")
                .unwrap_err();
        match err {
            LexiconError::UnknownPolarity { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn mpqa_line() {
        let load = load_sentiment_str(
            "type=strongsubj len=1 word1=abuse pos1=verb stemmed1=y priorpolarity=negative\n",
            SentimentFormat::Mpqa,
            "mem",
        )
        .unwrap();
        assert_eq!(load.lexicon.tag_of("abuse"), Some(LexTag::Negative));
    }

    #[test]
    fn empty_file_empty_lexicon() {
        let load = load_sentiment_str("", SentimentFormat::Tsv, "mem").unwrap();
        assert!(load.lexicon.is_empty());
    }

    #[test]
    fn load_twice_identical() {
        let text = "good\tpositive\nbad\tnegative\n";
        let a = load_sentiment_str(text, SentimentFormat::Tsv, "mem").unwrap();
        let b = load_sentiment_str(text, SentimentFormat::Tsv, "mem").unwrap();
        assert_eq!(a.lexicon.entries, b.lexicon.entries);
    }
}
