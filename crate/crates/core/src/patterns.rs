//! Lexical patterns marking the conceding proposition of an argumentative
//! concession: span extraction, gap-aware matching, and the seed-driven
//! bootstrap that grows the pattern lexicon from unlabeled spans.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Marker, MarkerInstance};
use crate::lexicons::{self, Lexicon};
use crate::textproc::{tokenize, TokenSequence};

#[derive(Debug, Error)]
pub enum PatternError {
    #[error("{path}:{line}: invalid pattern: {detail}")]
    InvalidPattern {
        path: String,
        line: usize,
        detail: String,
    },
    #[error("pattern must start and end with a literal and contain no adjacent gaps: {0}")]
    Invariant(String),
    #[error("bootstrap did not reach a fixpoint within {0} iterations")]
    NonConvergence(usize),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// One element of a lexical pattern.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PatternElement {
    /// Exact lowercase token.
    Literal(String),
    /// Zero or more tokens, none of which is a negation term.
    Gap,
}

/// Where a pattern came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Seed,
    Bootstrapped,
    Curated,
}

/// A token sequence with gap wildcards, matched against conceding spans.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexicalPattern {
    pub elements: Vec<PatternElement>,
    pub provenance: Provenance,
    /// Bootstrap iteration that produced the pattern; 0 for seeds.
    pub generation: u32,
}

impl LexicalPattern {
    pub fn new(
        elements: Vec<PatternElement>,
        provenance: Provenance,
        generation: u32,
    ) -> Result<Self, PatternError> {
        let rendered = render_elements(&elements);
        if elements.is_empty()
            || !matches!(elements.first(), Some(PatternElement::Literal(_)))
            || !matches!(elements.last(), Some(PatternElement::Literal(_)))
        {
            return Err(PatternError::Invariant(rendered));
        }
        for pair in elements.windows(2) {
            if pair[0] == PatternElement::Gap && pair[1] == PatternElement::Gap {
                return Err(PatternError::Invariant(rendered));
            }
        }
        Ok(LexicalPattern {
            elements,
            provenance,
            generation,
        })
    }

    /// Convenience constructor from a rendered form ("i [*] agree").
    pub fn parse(text: &str, provenance: Provenance, generation: u32) -> Result<Self, PatternError> {
        let elements = text
            .split_whitespace()
            .map(|t| {
                if t == "[*]" {
                    PatternElement::Gap
                } else {
                    PatternElement::Literal(t.to_lowercase())
                }
            })
            .collect();
        Self::new(elements, provenance, generation)
    }

    pub fn literals(&self) -> impl Iterator<Item = &str> {
        self.elements.iter().filter_map(|e| match e {
            PatternElement::Literal(t) => Some(t.as_str()),
            PatternElement::Gap => None,
        })
    }
}

fn render_elements(elements: &[PatternElement]) -> String {
    elements
        .iter()
        .map(|e| match e {
            PatternElement::Literal(t) => t.as_str(),
            PatternElement::Gap => "[*]",
        })
        .collect::<Vec<_>>()
        .join(" ")
}

impl fmt::Display for LexicalPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_elements(&self.elements))
    }
}

/// The two seed phrases the bootstrap starts from.
pub fn seed_patterns() -> Vec<LexicalPattern> {
    vec![
        LexicalPattern::parse("i agree", Provenance::Seed, 0).unwrap(),
        LexicalPattern::parse("you are right", Provenance::Seed, 0).unwrap(),
    ]
}

/// The proposition a pattern is matched against, taken from one marker
/// instance by the scope rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcedingSpan {
    pub tokens: TokenSequence,
    pub source_instance: String,
}

/// Extract the conceding proposition. For but/though/however this is the
/// token prefix before the marker, falling back to the whole previous
/// sentence when the marker opens its sentence; for "while" it is the
/// tokens after the marker up to the first comma or the sentence end.
pub fn conceding_span(instance: &MarkerInstance) -> ConcedingSpan {
    let sent = tokenize(&instance.sentence);
    let idx = instance.marker_token_index;
    let tokens = match instance.marker {
        Marker::But | Marker::Though | Marker::However => {
            if idx == 0 {
                match &instance.prev_sentence {
                    Some(prev) => tokenize(prev),
                    None => TokenSequence::default(),
                }
            } else {
                TokenSequence {
                    tokens: sent.tokens.get(..idx).unwrap_or(&[]).to_vec(),
                    spans: sent.spans.get(..idx).unwrap_or(&[]).to_vec(),
                }
            }
        }
        Marker::While => {
            let rest_tokens = sent.tokens.get(idx + 1..).unwrap_or(&[]);
            let rest_spans = sent.spans.get(idx + 1..).unwrap_or(&[]);
            let end = rest_tokens
                .iter()
                .position(|t| t == ",")
                .unwrap_or(rest_tokens.len());
            TokenSequence {
                tokens: rest_tokens[..end].to_vec(),
                spans: rest_spans[..end].to_vec(),
            }
        }
    };
    ConcedingSpan {
        tokens,
        source_instance: instance.id.clone(),
    }
}

/// Match a pattern against a span. Literals must appear in order, adjacent
/// literals on adjacent tokens; each gap absorbs zero or more tokens, none
/// of which may be a negation term. The pattern may start anywhere in the
/// span.
pub fn matches(pattern: &LexicalPattern, span: &ConcedingSpan, negation: &Lexicon) -> bool {
    let tokens = &span.tokens.tokens;
    let first = match pattern.elements.first() {
        Some(PatternElement::Literal(t)) => t,
        _ => return false,
    };
    for start in 0..tokens.len() {
        if &tokens[start] == first && match_from(&pattern.elements[1..], tokens, start + 1, negation)
        {
            return true;
        }
    }
    false
}

fn match_from(elements: &[PatternElement], tokens: &[String], pos: usize, negation: &Lexicon) -> bool {
    match elements.first() {
        None => true,
        Some(PatternElement::Literal(lit)) => {
            pos < tokens.len()
                && &tokens[pos] == lit
                && match_from(&elements[1..], tokens, pos + 1, negation)
        }
        Some(PatternElement::Gap) => {
            // a gap is always followed by a literal (pattern invariant)
            let lit = match elements.get(1) {
                Some(PatternElement::Literal(t)) => t,
                _ => return false,
            };
            for end in pos..tokens.len() {
                if &tokens[end] == lit && match_from(&elements[2..], tokens, end + 1, negation) {
                    return true;
                }
                if lexicons::is_negation(&tokens[end], negation) {
                    // no longer gap can skip past a negation token
                    return false;
                }
            }
            false
        }
    }
}

/// True when any pattern in the set matches the span.
pub fn any_match(patterns: &[LexicalPattern], span: &ConcedingSpan, negation: &Lexicon) -> bool {
    patterns.iter().any(|p| matches(p, span, negation))
}

/// Lexicons consumed by the bootstrap's semantic filter and gap matching.
pub struct BootstrapLexicons<'a> {
    pub attitude: &'a Lexicon,
    pub sentiment_verbs: &'a Lexicon,
    pub negation: &'a Lexicon,
}

/// Settings for the bootstrap loop.
#[derive(Debug, Clone)]
pub struct BootstrapConfig {
    /// Hard cap on fixpoint iterations before reporting non-convergence.
    pub max_iterations: usize,
    /// n-gram orders harvested from spans.
    pub ngram_sizes: Vec<usize>,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            max_iterations: 20,
            ngram_sizes: vec![3, 4, 5],
        }
    }
}

/// One row of the bootstrap report, for manual curation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternReportRow {
    pub pattern: String,
    pub provenance: Provenance,
    pub generation: u32,
    /// Semantic rule (i): contains an attitude indicator or sentiment verb.
    pub rule_attitude: bool,
    /// Semantic rule (ii): contains "you" or "your".
    pub rule_second_person: bool,
    /// Number of input spans the pattern matches.
    pub span_matches: usize,
}

/// Bootstrap result: the fixpoint pattern set plus a per-pattern report.
#[derive(Debug, Clone)]
pub struct BootstrapOutcome {
    pub patterns: Vec<LexicalPattern>,
    pub iterations: usize,
    pub report: Vec<PatternReportRow>,
}

/// Does an n-gram realize the pattern's literals? Literals must embed in
/// order; every token not consumed by a literal counts as gap filler and
/// must not be a negation term. This is the loose search of the bootstrap
/// (implicit gaps before, between, and after literals), not the strict
/// `matches` used at prediction time.
fn realizes(literals: &[&str], gram: &[String], negation: &Lexicon) -> bool {
    fn rec(lits: &[&str], gram: &[String], li: usize, gi: usize, negation: &Lexicon) -> bool {
        if li == lits.len() {
            return gram[gi..]
                .iter()
                .all(|t| !lexicons::is_negation(t, negation));
        }
        if gi == gram.len() {
            return false;
        }
        if gram[gi] == lits[li] && rec(lits, gram, li + 1, gi + 1, negation) {
            return true;
        }
        if !lexicons::is_negation(&gram[gi], negation) && rec(lits, gram, li, gi + 1, negation) {
            return true;
        }
        false
    }
    rec(literals, gram, 0, 0, negation)
}

fn passes_semantic_rules(tokens: &[String], lex: &BootstrapLexicons<'_>) -> (bool, bool) {
    let attitude = lexicons::has_attitude_indicator(tokens, lex.attitude)
        || tokens.iter().any(|t| lex.sentiment_verbs.contains(t));
    let second_person = tokens.iter().any(|t| t == "you" || t == "your");
    (attitude, second_person)
}

/// Candidate gap positions for generalization: interior literals that do
/// not sit next to an existing gap.
fn generalization_positions(elements: &[PatternElement]) -> Vec<usize> {
    let n = elements.len();
    (1..n.saturating_sub(1))
        .filter(|&i| {
            matches!(elements[i], PatternElement::Literal(_))
                && elements[i - 1] != PatternElement::Gap
                && elements[i + 1] != PatternElement::Gap
        })
        .collect()
}

/// Grow the pattern lexicon from seed phrases over unlabeled conceding
/// spans.
///
/// Each iteration: (1) instantiate every kept pattern against the 3/4/5-
/// grams of the spans, keeping each realizing n-gram as a fully-literal
/// pattern (instantiations inherit validity); (2) generalize each kept
/// fully-literal pattern by blanking one interior literal and re-searching,
/// keeping a discovery only if it satisfies semantic rule (i) — an attitude
/// indicator or sentiment verb — or rule (ii) — "you"/"your". Stops at the
/// fixpoint; the output is sorted and independent of span order.
pub fn bootstrap(
    spans: &[ConcedingSpan],
    seeds: &[LexicalPattern],
    lex: &BootstrapLexicons<'_>,
    config: &BootstrapConfig,
) -> Result<BootstrapOutcome, PatternError> {
    assert!(!seeds.is_empty(), "bootstrap requires at least one seed");

    // harvest n-grams once; spans never change
    let mut grams: BTreeSet<Vec<String>> = BTreeSet::new();
    for span in spans {
        for &n in &config.ngram_sizes {
            for w in span.tokens.tokens.windows(n) {
                grams.insert(w.to_vec());
            }
        }
    }
    let grams: Vec<Vec<String>> = grams.into_iter().collect();

    let mut kept: BTreeMap<Vec<PatternElement>, LexicalPattern> = BTreeMap::new();
    for seed in seeds {
        kept.insert(seed.elements.clone(), seed.clone());
    }

    let mut iterations = 0;
    loop {
        if iterations >= config.max_iterations {
            return Err(PatternError::NonConvergence(config.max_iterations));
        }
        iterations += 1;
        let mut found: BTreeMap<Vec<PatternElement>, LexicalPattern> = BTreeMap::new();

        for pattern in kept.values() {
            let literals: Vec<&str> = pattern.literals().collect();

            // (1) direct instantiation: inherits validity
            for gram in &grams {
                if realizes(&literals, gram, lex.negation) {
                    let elements: Vec<PatternElement> = gram
                        .iter()
                        .map(|t| PatternElement::Literal(t.clone()))
                        .collect();
                    if !kept.contains_key(&elements) && !found.contains_key(&elements) {
                        let p = LexicalPattern::new(
                            elements.clone(),
                            Provenance::Bootstrapped,
                            iterations as u32,
                        )
                        .expect("all-literal n-gram is a valid pattern");
                        found.insert(elements, p);
                    }
                }
            }

            // (2) generalize one literal at a time and re-search; keep only
            // discoveries passing a semantic rule
            for pos in generalization_positions(&pattern.elements) {
                let mut probe = pattern.elements.clone();
                probe[pos] = PatternElement::Gap;
                let probe_literals: Vec<&str> = probe
                    .iter()
                    .filter_map(|e| match e {
                        PatternElement::Literal(t) => Some(t.as_str()),
                        PatternElement::Gap => None,
                    })
                    .collect();
                for gram in &grams {
                    if realizes(&probe_literals, gram, lex.negation) {
                        let elements: Vec<PatternElement> = gram
                            .iter()
                            .map(|t| PatternElement::Literal(t.clone()))
                            .collect();
                        if kept.contains_key(&elements) || found.contains_key(&elements) {
                            continue;
                        }
                        let (attitude, second) = passes_semantic_rules(gram, lex);
                        if attitude || second {
                            let p = LexicalPattern::new(
                                elements.clone(),
                                Provenance::Bootstrapped,
                                iterations as u32,
                            )
                            .expect("all-literal n-gram is a valid pattern");
                            found.insert(elements, p);
                        }
                    }
                }
            }
        }

        if found.is_empty() {
            break;
        }
        kept.extend(found);
    }

    let patterns: Vec<LexicalPattern> = kept.into_values().collect();
    let report = patterns
        .iter()
        .map(|p| {
            let toks: Vec<String> = p.literals().map(str::to_string).collect();
            let (attitude, second) = passes_semantic_rules(&toks, lex);
            let span_matches = spans.iter().filter(|s| matches(p, s, lex.negation)).count();
            PatternReportRow {
                pattern: p.to_string(),
                provenance: p.provenance,
                generation: p.generation,
                rule_attitude: attitude,
                rule_second_person: second,
                span_matches,
            }
        })
        .collect();

    Ok(BootstrapOutcome {
        patterns,
        iterations,
        report,
    })
}

/// Load a manually curated pattern file: one pattern per line, lowercase
/// literals separated by whitespace, `[*]` for a gap, `#` for comments.
pub fn load_curated(path: &Path) -> Result<Vec<LexicalPattern>, PatternError> {
    let text = std::fs::read_to_string(path).map_err(|source| PatternError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_curated(&text, &path.display().to_string())
}

pub fn parse_curated(text: &str, path: &str) -> Result<Vec<LexicalPattern>, PatternError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let pattern =
            LexicalPattern::parse(line, Provenance::Curated, 0).map_err(|e| match e {
                PatternError::Invariant(p) => PatternError::InvalidPattern {
                    path: path.to_string(),
                    line: lineno + 1,
                    detail: format!("`{p}` must start and end with a literal and contain no adjacent gaps"),
                },
                other => other,
            })?;
        out.push(pattern);
    }
    Ok(out)
}

/// Write patterns in the curated-file format.
pub fn write_patterns<W: std::io::Write>(
    mut w: W,
    patterns: &[LexicalPattern],
) -> std::io::Result<()> {
    for p in patterns {
        writeln!(w, "{p}")?;
    }
    Ok(())
}
