//! Sparse feature vectors over a tf-idf-selected n-gram vocabulary plus
//! lexicon, Jaccard, and pattern-hit columns, with chi-square feature
//! selection.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Label, MarkerInstance};
use crate::lexicons::{builtin, BuiltinLexicon, LexTag, Lexicon};
use crate::patterns::{any_match, conceding_span, LexicalPattern};
use crate::textproc::{jaccard, ngrams, tokenize, StopwordList, TokenSequence};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot build a vocabulary from zero instances")]
    EmptyCorpus,
    #[error("vocabulary version mismatch: expected {expected}, got {got}")]
    VersionMismatch { expected: String, got: String },
    #[error("jaccard feature requested but no original-post sentences supplied")]
    MissingOpSentences,
    #[error("chi-square selection requires both classes in the labels")]
    SingleClass,
    #[error("vectors and labels have different lengths ({vectors} vs {labels})")]
    LengthMismatch { vectors: usize, labels: usize },
}

/// Family a vocabulary column belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Unigram,
    Bigram,
    Pronoun,
    Modal,
    Hedge,
    Jaccard,
    Sentiment,
    PatternHit,
}

/// Names of the non-n-gram columns, in fixed layout order. The `@` prefix
/// cannot collide with token n-grams (the tokenizer splits `@` off).
pub const SPECIAL_COLUMNS: [(&str, FeatureKind); 9] = [
    ("@first_person", FeatureKind::Pronoun),
    ("@second_person", FeatureKind::Pronoun),
    ("@modal", FeatureKind::Modal),
    ("@hedge", FeatureKind::Hedge),
    ("@sentiment_positive", FeatureKind::Sentiment),
    ("@sentiment_negative", FeatureKind::Sentiment),
    ("@sentiment_neutral", FeatureKind::Sentiment),
    ("@pattern_hit", FeatureKind::PatternHit),
    ("@jaccard", FeatureKind::Jaccard),
];

/// An ordered feature space: n-gram columns first (lexicographic), then the
/// fixed special columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    pub names: Vec<String>,
    pub kinds: Vec<FeatureKind>,
    /// idf of each selected n-gram (natural log, unsmoothed).
    pub idf: BTreeMap<String, f64>,
    pub version: String,
    /// How the top-k tf-idf score was aggregated across documents.
    pub score_aggregation: String,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        // names are not sorted globally (special block comes last), so scan
        // the two blocks; n-gram block is sorted and binary-searchable
        let ngram_len = self.names.len() - SPECIAL_COLUMNS.len();
        if let Ok(i) = self.names[..ngram_len].binary_search_by(|n| n.as_str().cmp(name)) {
            return Some(i);
        }
        self.names[ngram_len..]
            .iter()
            .position(|n| n == name)
            .map(|p| p + ngram_len)
    }

    pub fn jaccard_column(&self) -> Option<usize> {
        self.index_of("@jaccard")
    }
}

/// Sparse feature vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
    pub vocabulary_version: String,
}

impl FeatureVector {
    pub fn new(
        entries: BTreeMap<u32, f64>,
        vocabulary_version: &str,
    ) -> Self {
        let mut indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            if v != 0.0 {
                indices.push(i);
                values.push(v);
            }
        }
        FeatureVector {
            indices,
            values,
            vocabulary_version: vocabulary_version.to_string(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn get(&self, index: u32) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(p) => self.values[p],
            Err(_) => 0.0,
        }
    }

    /// Squared Euclidean distance over the sparse representations.
    pub fn squared_distance(&self, other: &FeatureVector) -> f64 {
        let (mut i, mut j) = (0usize, 0usize);
        let mut acc = 0.0;
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => {
                    acc += self.values[i] * self.values[i];
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    acc += other.values[j] * other.values[j];
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let d = self.values[i] - other.values[j];
                    acc += d * d;
                    i += 1;
                    j += 1;
                }
            }
        }
        while i < self.indices.len() {
            acc += self.values[i] * self.values[i];
            i += 1;
        }
        while j < other.indices.len() {
            acc += other.values[j] * other.values[j];
            j += 1;
        }
        acc
    }

    /// Keep only the selected columns (indices refer to the original
    /// vocabulary and are preserved).
    pub fn project(&self, selection: &BTreeSet<u32>) -> FeatureVector {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (i, v) in self.indices.iter().zip(&self.values) {
            if selection.contains(i) {
                indices.push(*i);
                values.push(*v);
            }
        }
        FeatureVector {
            indices,
            values,
            vocabulary_version: self.vocabulary_version.clone(),
        }
    }
}

/// Immutable bundle of the closed-class lexicons plus optional loaded
/// sentiment entries.
#[derive(Debug, Clone)]
pub struct LexiconSet {
    pub pronouns: Lexicon,
    pub modals: Lexicon,
    pub hedges: Lexicon,
    pub negation: Lexicon,
    pub attitude: Lexicon,
    pub sentiment_verbs: Lexicon,
    pub sentiment: Option<Lexicon>,
}

impl LexiconSet {
    pub fn builtin() -> Self {
        LexiconSet {
            pronouns: builtin(BuiltinLexicon::Pronouns),
            modals: builtin(BuiltinLexicon::Modals),
            hedges: builtin(BuiltinLexicon::Hedges),
            negation: builtin(BuiltinLexicon::Negation),
            attitude: builtin(BuiltinLexicon::AttitudeIndicators),
            sentiment_verbs: builtin(BuiltinLexicon::SentimentVerbs),
            sentiment: None,
        }
    }

    pub fn with_sentiment(mut self, sentiment: Lexicon) -> Self {
        self.sentiment = Some(sentiment);
        self
    }
}

/// Everything featurization needs besides the vocabulary.
pub struct FeatureContext<'a> {
    pub lexicons: &'a LexiconSet,
    pub stopwords: &'a StopwordList,
    /// When present, the `@pattern_hit` column is set from a strict match of
    /// any of these patterns against the instance's conceding span.
    pub patterns: Option<&'a [LexicalPattern]>,
}

fn instance_token_views(instance: &MarkerInstance) -> Vec<TokenSequence> {
    let mut views = Vec::new();
    if let Some(prev) = &instance.prev_sentence {
        views.push(tokenize(prev));
    }
    views.push(tokenize(&instance.sentence));
    views
}

fn count_ngrams(views: &[TokenSequence]) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for view in views {
        for n in [1usize, 2] {
            for g in ngrams(&view.tokens, n) {
                *counts.entry(g).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// Build the feature space from instances. Each instance's token span (its
/// sentence plus the previous sentence when present) is one tf-idf
/// document; candidate unigrams and bigrams are scored by the maximum
/// tf * ln(N/df) over documents and the top `k` kept, ties broken
/// lexicographically. The special columns are appended after the n-grams.
pub fn build_vocabulary(
    instances: &[MarkerInstance],
    k: usize,
) -> Result<Vocabulary, FeatureError> {
    if instances.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    let n_docs = instances.len() as f64;
    let mut df: BTreeMap<String, u64> = BTreeMap::new();
    let mut max_tf: BTreeMap<String, u64> = BTreeMap::new();
    for inst in instances {
        let counts = count_ngrams(&instance_token_views(inst));
        for (gram, tf) in counts {
            *df.entry(gram.clone()).or_insert(0) += 1;
            let slot = max_tf.entry(gram).or_insert(0);
            *slot = (*slot).max(tf);
        }
    }

    let mut scored: Vec<(&String, f64)> = df
        .iter()
        .map(|(gram, &dfi)| {
            let idf = (n_docs / dfi as f64).ln();
            let score = max_tf[gram] as f64 * idf;
            (gram, score)
        })
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(b.0))
    });
    scored.truncate(k);

    let mut selected: Vec<String> = scored.into_iter().map(|(g, _)| g.clone()).collect();
    selected.sort();

    let mut names = Vec::with_capacity(selected.len() + SPECIAL_COLUMNS.len());
    let mut kinds = Vec::with_capacity(selected.len() + SPECIAL_COLUMNS.len());
    let mut idf = BTreeMap::new();
    for gram in selected {
        let kind = if gram.contains(' ') {
            FeatureKind::Bigram
        } else {
            FeatureKind::Unigram
        };
        idf.insert(gram.clone(), (n_docs / df[&gram] as f64).ln());
        names.push(gram);
        kinds.push(kind);
    }
    for (name, kind) in SPECIAL_COLUMNS {
        names.push(name.to_string());
        kinds.push(kind);
    }

    let version = vocabulary_digest(&names, &idf);
    Ok(Vocabulary {
        names,
        kinds,
        idf,
        version,
        score_aggregation: "max".to_string(),
    })
}

fn vocabulary_digest(names: &[String], idf: &BTreeMap<String, f64>) -> String {
    let mut hasher = Sha256::new();
    for n in names {
        hasher.update(n.as_bytes());
        hasher.update([0u8]);
    }
    for (k, v) in idf {
        hasher.update(k.as_bytes());
        hasher.update(v.to_le_bytes());
    }
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Build the sparse vector for one instance. N-gram columns hold raw term
/// counts over the instance span; pronoun/modal/hedge/sentiment columns are
/// Boolean over the same span; `@jaccard` holds the maximum Jaccard
/// similarity against the original-post sentences and is omitted entirely
/// when `include_jaccard` is false (corpora without reply links).
pub fn featurize(
    instance: &MarkerInstance,
    op_sentences: &[TokenSequence],
    vocab: &Vocabulary,
    ctx: &FeatureContext<'_>,
    include_jaccard: bool,
) -> Result<FeatureVector, FeatureError> {
    if include_jaccard && op_sentences.is_empty() {
        return Err(FeatureError::MissingOpSentences);
    }
    let views = instance_token_views(instance);
    let mut entries: BTreeMap<u32, f64> = BTreeMap::new();

    for (gram, count) in count_ngrams(&views) {
        if let Some(col) = vocab.index_of(&gram) {
            if matches!(vocab.kinds[col], FeatureKind::Unigram | FeatureKind::Bigram) {
                entries.insert(col as u32, count as f64);
            }
        }
    }

    let span_tokens: Vec<String> = views.iter().flat_map(|v| v.tokens.clone()).collect();
    let lex = ctx.lexicons;

    let mut set_bool = |name: &str, on: bool| {
        if on {
            if let Some(col) = vocab.index_of(name) {
                entries.insert(col as u32, 1.0);
            }
        }
    };

    let tags: Vec<LexTag> = lex.pronouns.all_matching_tags(&span_tokens);
    set_bool("@first_person", tags.contains(&LexTag::FirstPerson));
    set_bool("@second_person", tags.contains(&LexTag::SecondPerson));
    set_bool("@modal", lex.modals.matches_any(&span_tokens));
    set_bool("@hedge", lex.hedges.matches_any(&span_tokens));

    if let Some(sentiment) = &lex.sentiment {
        let stags = sentiment.all_matching_tags(&span_tokens);
        set_bool("@sentiment_positive", stags.contains(&LexTag::Positive));
        set_bool("@sentiment_negative", stags.contains(&LexTag::Negative));
        set_bool("@sentiment_neutral", stags.contains(&LexTag::Neutral));
    }

    if let Some(patterns) = ctx.patterns {
        let span = conceding_span(instance);
        set_bool("@pattern_hit", any_match(patterns, &span, &lex.negation));
    }

    if include_jaccard {
        let best = op_sentences
            .iter()
            .map(|op| {
                jaccard(
                    span_tokens.iter().map(String::as_str),
                    op.tokens.iter().map(String::as_str),
                    ctx.stopwords,
                )
            })
            .fold(0.0f64, f64::max);
        if best != 0.0 {
            if let Some(col) = vocab.jaccard_column() {
                entries.insert(col as u32, best);
            }
        }
    }

    Ok(FeatureVector::new(entries, &vocab.version))
}

/// Chi-square feature selection over presence/absence vs class, no
/// continuity correction. Returns the top `k` column indices (ties broken
/// lexicographically by feature name); the `@jaccard` column, when the
/// vocabulary has one, is always retained.
pub fn chi2_select(
    vectors: &[FeatureVector],
    labels: &[Label],
    k: usize,
    vocab: &Vocabulary,
) -> Result<BTreeSet<u32>, FeatureError> {
    if vectors.len() != labels.len() {
        return Err(FeatureError::LengthMismatch {
            vectors: vectors.len(),
            labels: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l == Label::ArgC).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(FeatureError::SingleClass);
    }

    // presence counts per column per class (presence = value > 0; the
    // continuous jaccard column is binarized the same way)
    let cols = vocab.len();
    let mut present_pos = vec![0u64; cols];
    let mut present_neg = vec![0u64; cols];
    for (vec, &label) in vectors.iter().zip(labels) {
        for (&i, &v) in vec.indices.iter().zip(&vec.values) {
            if v > 0.0 {
                if label == Label::ArgC {
                    present_pos[i as usize] += 1;
                } else {
                    present_neg[i as usize] += 1;
                }
            }
        }
    }

    let n = labels.len() as f64;
    let mut ranked: Vec<(f64, &str, u32)> = (0..cols)
        .map(|j| {
            let a = present_pos[j] as f64;
            let b = present_neg[j] as f64;
            let c = n_pos as f64 - a;
            let d = n_neg as f64 - b;
            let denom = (a + b) * (c + d) * (a + c) * (b + d);
            let stat = if denom == 0.0 {
                0.0
            } else {
                let det = a * d - b * c;
                n * det * det / denom
            };
            (stat, vocab.names[j].as_str(), j as u32)
        })
        .collect();
    ranked.sort_by(|x, y| {
        y.0.partial_cmp(&x.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| x.1.cmp(y.1))
    });

    let mut selected: Vec<u32> = ranked.iter().take(k).map(|r| r.2).collect();
    if let Some(jc) = vocab.jaccard_column() {
        let jc = jc as u32;
        if !selected.contains(&jc) {
            if selected.len() >= k && !selected.is_empty() {
                selected.pop();
            }
            selected.push(jc);
        }
    }
    Ok(selected.into_iter().collect())
}
