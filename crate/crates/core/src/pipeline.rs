//! Subcommand implementations: each reads its inputs (config-named corpora
//! or artifacts of earlier subcommands), writes artifacts under the output
//! directory, and records a deterministic manifest naming the config hash.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, LoadedConfig};
use crate::corpus::{
    self, Comment, CorpusError, InstanceRecord, Label, MarkerInstance, Split,
};
use crate::eval::{self, EvalError, LabelSource, VoteMatrix};
use crate::features::{
    build_vocabulary, chi2_select, featurize, FeatureContext, FeatureError, FeatureVector,
    LexiconSet, Vocabulary,
};
use crate::lexicons::{self, LexiconError, SentimentFormat};
use crate::patterns::{
    self, conceding_span, BootstrapConfig, BootstrapLexicons, LexicalPattern, PatternError,
    Provenance,
};
use crate::report;
use crate::selftrain::{self, SelfTrainData, SelfTrainError};
use crate::svm::{self, SvmConfig, SvmError, SvmModel};
use crate::textproc::{tokenize, StopwordList, TokenSequence};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("missing {artifact}; run `concede {produced_by}` first")]
    MissingArtifact {
        artifact: String,
        produced_by: String,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    SelfTrain(#[from] SelfTrainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Data(String),
    #[error("failed writing {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl PipelineError {
    /// Exit codes: 1 usage/config, 2 data, 3 non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Pattern(PatternError::NonConvergence(_)) => 3,
            PipelineError::Svm(SvmError::NonConvergence { .. }) => 3,
            PipelineError::SelfTrain(SelfTrainError::Svm(SvmError::NonConvergence {
                ..
            })) => 3,
            _ => 2,
        }
    }
}

type Result<T> = std::result::Result<T, PipelineError>;

/// What a subcommand produced (or why it did nothing).
#[derive(Debug)]
pub struct Outcome {
    pub subcommand: String,
    pub artifacts: Vec<PathBuf>,
    pub skipped: bool,
    pub messages: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    subcommand: String,
    config_hash: String,
    seed: u64,
    tool_version: String,
    formats: BTreeMap<String, String>,
    artifacts: Vec<ManifestEntry>,
}

/// One prediction for one instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub label: Label,
    pub decision: f64,
    pub pattern_hit: bool,
}

pub struct Pipeline {
    pub cfg: LoadedConfig,
}

fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

impl Pipeline {
    pub fn new(cfg: LoadedConfig) -> Self {
        Pipeline { cfg }
    }

    fn out_path(&self, name: &str) -> PathBuf {
        self.cfg.out_dir().join(name)
    }

    fn ensure_out_dir(&self) -> Result<()> {
        let dir = self.cfg.out_dir();
        std::fs::create_dir_all(&dir).map_err(|source| PipelineError::Io {
            path: dir.display().to_string(),
            source,
        })
    }

    fn write_file(&self, name: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = self.out_path(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|source| PipelineError::Io {
                path: parent.display().to_string(),
                source,
            })?;
        }
        std::fs::write(&path, contents).map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(path)
    }

    fn manifest_path(&self, subcommand: &str) -> PathBuf {
        self.out_path(&format!("{subcommand}_manifest.json"))
    }

    /// True when the previous run of this subcommand used the same config
    /// and all its artifacts are still intact.
    fn up_to_date(&self, subcommand: &str) -> bool {
        let path = self.manifest_path(subcommand);
        let Ok(text) = std::fs::read_to_string(&path) else {
            return false;
        };
        let Ok(manifest) = serde_json::from_str::<Manifest>(&text) else {
            return false;
        };
        if manifest.config_hash != self.cfg.hash {
            return false;
        }
        manifest.artifacts.iter().all(|entry| {
            let p = self.cfg.out_dir().join(&entry.path);
            file_sha256(&p).map(|h| h == entry.sha256).unwrap_or(false)
        })
    }

    fn write_manifest(&self, subcommand: &str, artifacts: &[PathBuf]) -> Result<PathBuf> {
        let out_dir = self.cfg.out_dir();
        let mut entries = Vec::new();
        for artifact in artifacts {
            let rel = artifact
                .strip_prefix(&out_dir)
                .unwrap_or(artifact)
                .display()
                .to_string();
            entries.push(ManifestEntry {
                path: rel,
                sha256: file_sha256(artifact)?,
            });
        }
        let mut formats = BTreeMap::new();
        formats.insert("corpus".to_string(), "jsonl-v1".to_string());
        formats.insert("instances".to_string(), "instances-v1".to_string());
        formats.insert("model".to_string(), "svm-model-v1".to_string());
        formats.insert("vocabulary".to_string(), "vocab-v1".to_string());
        let manifest = Manifest {
            subcommand: subcommand.to_string(),
            config_hash: self.cfg.hash.clone(),
            seed: self.cfg.config.seed,
            tool_version: TOOL_VERSION.to_string(),
            formats,
            artifacts: entries,
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        self.write_file(&format!("{subcommand}_manifest.json"), json.as_bytes())
    }

    fn skip_outcome(&self, subcommand: &str) -> Outcome {
        Outcome {
            subcommand: subcommand.to_string(),
            artifacts: vec![self.manifest_path(subcommand)],
            skipped: true,
            messages: vec![format!(
                "{subcommand}: outputs up to date for config {}; use --force to rerun",
                self.cfg.hash
            )],
        }
    }

    fn preamble(&self) -> Vec<String> {
        vec![
            format!("config: {}", self.cfg.hash),
            format!("tool: concede {TOOL_VERSION}"),
        ]
    }

    // ----- shared loading helpers -----

    fn comments_artifact(&self, split: Split) -> PathBuf {
        self.out_path(&format!("comments_{split}.jsonl"))
    }

    fn instances_artifact(&self, split: Split) -> PathBuf {
        self.out_path(&format!("instances_{split}.jsonl"))
    }

    /// Comments per configured split, from the `ingest` artifacts.
    fn load_comments(&self) -> Result<BTreeMap<Split, Vec<Comment>>> {
        let mut map = BTreeMap::new();
        for (split, _) in self.cfg.config.corpus_splits() {
            let path = self.comments_artifact(split);
            if !path.exists() {
                return Err(PipelineError::MissingArtifact {
                    artifact: path.display().to_string(),
                    produced_by: "ingest".to_string(),
                });
            }
            map.insert(split, corpus::ingest(&path, corpus::CorpusFormat::JsonlV1)?);
        }
        if map.is_empty() {
            return Err(PipelineError::Data(
                "no corpus paths configured under [corpus]".to_string(),
            ));
        }
        Ok(map)
    }

    /// Instance records for one split: the configured labeled file when
    /// present, else the `extract` artifact.
    fn load_instances(&self, split: Split) -> Result<Vec<InstanceRecord>> {
        if let Some(path) = self.cfg.config.instance_override(split) {
            let resolved = self.cfg.resolve(path);
            return Ok(corpus::read_instances(&resolved)?);
        }
        let path = self.instances_artifact(split);
        if !path.exists() {
            return Err(PipelineError::MissingArtifact {
                artifact: path.display().to_string(),
                produced_by: "extract".to_string(),
            });
        }
        Ok(corpus::read_instances(&path)?)
    }

    fn try_load_instances(&self, split: Split) -> Result<Option<Vec<InstanceRecord>>> {
        let configured = self.cfg.config.instance_override(split).is_some()
            || self.cfg.config.corpus_splits().contains_key(&split);
        if !configured {
            return Ok(None);
        }
        self.load_instances(split).map(Some)
    }

    fn stopwords(&self) -> Result<StopwordList> {
        match &self.cfg.config.lexicons.stopwords {
            Some(path) => Ok(StopwordList::load(&self.cfg.resolve(path))
                .map_err(|e| PipelineError::Data(e.to_string()))?),
            None => Ok(StopwordList::builtin()),
        }
    }

    fn lexicon_set(&self) -> Result<(LexiconSet, Vec<String>)> {
        let mut set = LexiconSet::builtin();
        let mut warnings = Vec::new();
        if let Some(path) = &self.cfg.config.lexicons.hedges {
            let resolved = self.cfg.resolve(path);
            let text = std::fs::read_to_string(&resolved).map_err(|source| PipelineError::Io {
                path: resolved.display().to_string(),
                source,
            })?;
            let mut entries = std::collections::BTreeMap::new();
            for line in text.lines() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                entries.insert(line.to_lowercase(), lexicons::LexTag::Hedge);
            }
            set.hedges = lexicon_from_entries("hedges", entries);
        }
        if !self.cfg.config.lexicons.sentiment.is_empty() {
            let mut merged = std::collections::BTreeMap::new();
            for spec in &self.cfg.config.lexicons.sentiment {
                let format = match spec.format.as_str() {
                    "tsv" => SentimentFormat::Tsv,
                    _ => SentimentFormat::Mpqa,
                };
                let load = lexicons::load_sentiment(&self.cfg.resolve(&spec.path), format)?;
                warnings.extend(load.warnings);
                for (term, tag) in load.lexicon.entries {
                    // first file wins on cross-file conflicts too
                    merged.entry(term).or_insert(tag);
                }
            }
            set.sentiment = Some(lexicon_from_entries("sentiment", merged));
        }
        Ok((set, warnings))
    }

    fn curated_patterns(&self) -> Result<Option<Vec<LexicalPattern>>> {
        match &self.cfg.config.patterns.curated {
            Some(path) => Ok(Some(patterns::load_curated(&self.cfg.resolve(path))?)),
            None => Ok(None),
        }
    }

    /// thread_id -> tokenized sentences of the thread's original post.
    fn op_sentence_map(
        comments: &BTreeMap<Split, Vec<Comment>>,
    ) -> BTreeMap<String, Vec<TokenSequence>> {
        let mut map = BTreeMap::new();
        for split_comments in comments.values() {
            for c in split_comments {
                if c.is_original_post {
                    map.entry(c.thread_id.clone()).or_insert_with(|| {
                        corpus::segment_sentences(&c.text)
                            .iter()
                            .map(|s| tokenize(s))
                            .collect()
                    });
                }
            }
        }
        map
    }

    fn comment_thread_map(comments: &BTreeMap<Split, Vec<Comment>>) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        for split_comments in comments.values() {
            for c in split_comments {
                map.insert(c.id.clone(), c.thread_id.clone());
            }
        }
        map
    }

    /// Featurize records in parallel, deterministic order.
    #[allow(clippy::too_many_arguments)]
    fn featurize_records(
        &self,
        records: &[InstanceRecord],
        vocab: &Vocabulary,
        ctx: &FeatureContext<'_>,
        include_jaccard: bool,
        op_map: &BTreeMap<String, Vec<TokenSequence>>,
        thread_map: &BTreeMap<String, String>,
    ) -> Result<Vec<FeatureVector>> {
        let empty: Vec<TokenSequence> = Vec::new();
        records
            .par_iter()
            .map(|rec| {
                let op_sentences: &[TokenSequence] = if include_jaccard {
                    let thread = thread_map.get(&rec.instance.comment_id).ok_or_else(|| {
                        PipelineError::Data(format!(
                            "comment `{}` not found in any configured corpus (needed for the Jaccard feature)",
                            rec.instance.comment_id
                        ))
                    })?;
                    op_map.get(thread).map(Vec::as_slice).ok_or_else(|| {
                        PipelineError::Data(format!(
                            "thread `{thread}` has no original post; set features.include_jaccard = false for corpora without reply links"
                        ))
                    })?
                } else {
                    &empty
                };
                featurize(&rec.instance, op_sentences, vocab, ctx, include_jaccard)
                    .map_err(PipelineError::from)
            })
            .collect()
    }

    // ----- subcommands -----

    pub fn ingest(&self, force: bool) -> Result<Outcome> {
        self.ensure_out_dir()?;
        if !force && self.up_to_date("ingest") {
            return Ok(self.skip_outcome("ingest"));
        }
        let splits = self.cfg.config.corpus_splits();
        if splits.is_empty() {
            return Err(PipelineError::Data(
                "no corpus paths configured under [corpus]".to_string(),
            ));
        }
        let mut artifacts = Vec::new();
        let mut messages = Vec::new();
        for (split, path) in splits {
            let resolved = self.cfg.resolve(&path);
            let comments = corpus::ingest(&resolved, corpus::CorpusFormat::JsonlV1)?;
            let mut buf = Vec::new();
            corpus::write_comments(&mut buf, &comments).map_err(|source| PipelineError::Io {
                path: resolved.display().to_string(),
                source,
            })?;
            let out = self.write_file(&format!("comments_{split}.jsonl"), &buf)?;
            messages.push(format!("{split}: {} comments", comments.len()));
            artifacts.push(out);
        }
        artifacts.push(self.write_manifest("ingest", &artifacts)?);
        Ok(Outcome {
            subcommand: "ingest".to_string(),
            artifacts,
            skipped: false,
            messages,
        })
    }

    pub fn extract(&self, force: bool) -> Result<Outcome> {
        self.ensure_out_dir()?;
        if !force && self.up_to_date("extract") {
            return Ok(self.skip_outcome("extract"));
        }
        let comments = self.load_comments()?;
        let markers = self.cfg.config.target_markers();
        let mut artifacts = Vec::new();
        let mut messages = Vec::new();
        for (split, split_comments) in &comments {
            let instances = corpus::extract_marker_instances(split_comments, &markers, *split);
            let records: Vec<InstanceRecord> = instances
                .into_iter()
                .map(|instance| InstanceRecord {
                    instance,
                    gold_label: None,
                    crowd_labels: None,
                })
                .collect();
            let mut buf = Vec::new();
            corpus::write_instances(&mut buf, &records).map_err(|source| PipelineError::Io {
                path: format!("instances_{split}.jsonl"),
                source,
            })?;
            let out = self.write_file(&format!("instances_{split}.jsonl"), &buf)?;
            messages.push(format!("{split}: {} marker instances", records.len()));
            artifacts.push(out);
        }
        messages.push(
            "note: a marker occurring n times in one sentence yields n instances".to_string(),
        );
        artifacts.push(self.write_manifest("extract", &artifacts)?);
        Ok(Outcome {
            subcommand: "extract".to_string(),
            artifacts,
            skipped: false,
            messages,
        })
    }

    pub fn census(&self, force: bool) -> Result<Outcome> {
        self.ensure_out_dir()?;
        if !force && self.up_to_date("census") {
            return Ok(self.skip_outcome("census"));
        }
        let comments = self.load_comments()?;
        // merge all splits, first occurrence wins per id
        let mut merged: BTreeMap<String, Comment> = BTreeMap::new();
        for split_comments in comments.values() {
            for c in split_comments {
                merged.entry(c.id.clone()).or_insert_with(|| c.clone());
            }
        }
        let all: Vec<Comment> = merged.into_values().collect();
        let census = corpus::marker_census(&all);

        let rows = report::census_rows(&census);
        let mut artifacts = Vec::new();
        artifacts.push(self.write_file(
            "census.txt",
            format!(
                "# config: {}\n{}",
                self.cfg.hash,
                report::aligned_table(&rows)
            )
            .as_bytes(),
        )?);
        artifacts.push(self.write_file(
            "census.tsv",
            report::tsv_table(&self.preamble(), &rows).as_bytes(),
        )?);
        let json = serde_json::json!({
            "config_hash": self.cfg.hash,
            "rows": census,
        });
        artifacts.push(self.write_file(
            "census.json",
            serde_json::to_string_pretty(&json).unwrap().as_bytes(),
        )?);
        artifacts.push(self.write_manifest("census", &artifacts)?);
        Ok(Outcome {
            subcommand: "census".to_string(),
            artifacts,
            skipped: false,
            messages: vec![format!("censused {} comments", all.len())],
        })
    }

    pub fn bootstrap(&self, force: bool) -> Result<Outcome> {
        self.ensure_out_dir()?;
        if !force && self.up_to_date("bootstrap") {
            return Ok(self.skip_outcome("bootstrap"));
        }
        // the bootstrap pool: training + unlabeled splits (everything
        // except the dev/test evaluation data)
        let mut spans = Vec::new();
        for split in [Split::Train, Split::Unlabeled] {
            if let Some(records) = self.try_load_instances(split)? {
                for rec in &records {
                    spans.push(conceding_span(&rec.instance));
                }
            }
        }
        if spans.is_empty() {
            return Err(PipelineError::Data(
                "bootstrap needs train and/or unlabeled instances".to_string(),
            ));
        }
        let seeds: Vec<LexicalPattern> = self
            .cfg
            .config
            .patterns
            .seeds
            .iter()
            .map(|s| LexicalPattern::parse(s, Provenance::Seed, 0))
            .collect::<std::result::Result<_, _>>()?;
        let lexset = LexiconSet::builtin();
        let lex = BootstrapLexicons {
            attitude: &lexset.attitude,
            sentiment_verbs: &lexset.sentiment_verbs,
            negation: &lexset.negation,
        };
        let config = BootstrapConfig {
            max_iterations: self.cfg.config.patterns.max_iterations,
            ..BootstrapConfig::default()
        };
        let outcome = patterns::bootstrap(&spans, &seeds, &lex, &config)?;

        let mut raw = String::new();
        raw.push_str(&format!("# config: {}\n", self.cfg.hash));
        raw.push_str("# raw bootstrapped pattern lexicon; curate by editing a copy\n");
        for p in &outcome.patterns {
            raw.push_str(&format!("{p}\n"));
        }
        let mut artifacts = Vec::new();
        artifacts.push(self.write_file("patterns_raw.txt", raw.as_bytes())?);

        let mut rows = vec![vec![
            "pattern".to_string(),
            "provenance".to_string(),
            "generation".to_string(),
            "rule_attitude".to_string(),
            "rule_second_person".to_string(),
            "span_matches".to_string(),
        ]];
        for r in &outcome.report {
            rows.push(vec![
                r.pattern.clone(),
                format!("{:?}", r.provenance).to_lowercase(),
                r.generation.to_string(),
                r.rule_attitude.to_string(),
                r.rule_second_person.to_string(),
                r.span_matches.to_string(),
            ]);
        }
        let mut preamble = self.preamble();
        preamble.push("scope rule for `however` mirrors `but` (tokens before the marker)".to_string());
        artifacts.push(self.write_file(
            "pattern_report.tsv",
            report::tsv_table(&preamble, &rows).as_bytes(),
        )?);
        artifacts.push(self.write_manifest("bootstrap", &artifacts)?);
        Ok(Outcome {
            subcommand: "bootstrap".to_string(),
            artifacts,
            skipped: false,
            messages: vec![format!(
                "{} patterns after {} iterations over {} spans",
                outcome.patterns.len(),
                outcome.iterations,
                spans.len()
            )],
        })
    }

    /// Labeled (vector, label) pairs for records carrying a usable label:
    /// gold when present, else the crowd majority.
    fn labels_of(records: &[InstanceRecord]) -> Vec<Option<Label>> {
        records
            .iter()
            .map(|r| {
                if let Some(g) = r.gold_label {
                    return Some(g);
                }
                r.crowd_labels.as_ref().and_then(|votes| {
                    let argc = votes.iter().filter(|&&v| v == Label::ArgC).count() as u32;
                    let other = votes.len() as u32 - argc;
                    eval::majority_vote((argc, other), None).ok().map(|(l, _)| l)
                })
            })
            .collect()
    }

    /// Everything `train`/`selftrain`/`predict` share: lexicons, stopwords,
    /// patterns, OP lookup tables.
    fn feature_inputs(&self) -> Result<FeatureInputs> {
        let (lexicons, warnings) = self.lexicon_set()?;
        let stopwords = self.stopwords()?;
        let curated = self.curated_patterns()?;
        let comments = if self.cfg.config.features.include_jaccard {
            self.load_comments()?
        } else {
            BTreeMap::new()
        };
        let op_map = Self::op_sentence_map(&comments);
        let thread_map = Self::comment_thread_map(&comments);
        Ok(FeatureInputs {
            lexicons,
            stopwords,
            curated,
            op_map,
            thread_map,
            warnings,
        })
    }

    pub fn train(&self, force: bool) -> Result<Outcome> {
        self.ensure_out_dir()?;
        if !force && self.up_to_date("train") {
            return Ok(self.skip_outcome("train"));
        }
        let inputs = self.feature_inputs()?;
        let include_jaccard = self.cfg.config.features.include_jaccard;

        let train_records = self.load_instances(Split::Train)?;
        let dev_records = self.try_load_instances(Split::Dev)?;
        let test_records = self.try_load_instances(Split::Test)?;
        let unlabeled_records = self.try_load_instances(Split::Unlabeled)?;

        // vocabulary over every instance available, as one corpus
        let mut all_instances: Vec<MarkerInstance> = Vec::new();
        for records in [
            Some(&train_records),
            dev_records.as_ref(),
            test_records.as_ref(),
            unlabeled_records.as_ref(),
        ]
        .into_iter()
        .flatten()
        {
            all_instances.extend(records.iter().map(|r| r.instance.clone()));
        }
        let vocab = build_vocabulary(&all_instances, self.cfg.config.features.vocab_k)?;

        let ctx = FeatureContext {
            lexicons: &inputs.lexicons,
            stopwords: &inputs.stopwords,
            patterns: inputs.curated.as_deref(),
        };
        let fz = |records: &[InstanceRecord]| {
            self.featurize_records(
                records,
                &vocab,
                &ctx,
                include_jaccard,
                &inputs.op_map,
                &inputs.thread_map,
            )
        };

        let train_vectors = fz(&train_records)?;
        let train_labels: Vec<Label> = Self::labels_of(&train_records)
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| {
                PipelineError::Data(
                    "train instances must carry gold_label (or crowd_labels); point [instances].train at a labeled file".to_string(),
                )
            })?;

        // chi-square selection source
        let chi2_k = self.cfg.config.features.chi2_k;
        let selection = if self.cfg.config.features.chi2_source == "dev" {
            match &dev_records {
                Some(dev) => {
                    let dev_labels = Self::labels_of(dev);
                    let mut vectors = Vec::new();
                    let mut labels = Vec::new();
                    let dev_vectors = fz(dev)?;
                    for (v, l) in dev_vectors.into_iter().zip(dev_labels) {
                        if let Some(l) = l {
                            vectors.push(v);
                            labels.push(l);
                        }
                    }
                    if labels.is_empty() {
                        chi2_select(&train_vectors, &train_labels, chi2_k, &vocab)?
                    } else {
                        chi2_select(&vectors, &labels, chi2_k, &vocab)?
                    }
                }
                None => chi2_select(&train_vectors, &train_labels, chi2_k, &vocab)?,
            }
        } else {
            chi2_select(&train_vectors, &train_labels, chi2_k, &vocab)?
        };

        let svm_config = self.resolved_svm_config(&vocab);
        let projected: Vec<(FeatureVector, Label)> = train_vectors
            .iter()
            .map(|v| v.project(&selection))
            .zip(train_labels.iter().copied())
            .collect();
        let model = svm::train(&projected, &svm_config)?;

        let mut artifacts = Vec::new();
        artifacts.push(self.write_json("vocab.json", &vocab)?);
        let selection_vec: Vec<u32> = selection.iter().copied().collect();
        artifacts.push(self.write_json("selection.json", &selection_vec)?);
        artifacts.push(self.write_json("model_nost.json", &model)?);

        // baseline evaluation rows on any labeled dev/test instances
        let mut messages = inputs.warnings.clone();
        for (split, records) in [(Split::Dev, &dev_records), (Split::Test, &test_records)] {
            let Some(records) = records else { continue };
            let labels = Self::labels_of(records);
            if labels.iter().all(Option::is_none) {
                continue;
            }
            let vectors = fz(records)?;
            let rows = self.baseline_rows(
                records,
                &vectors,
                &labels,
                &selection,
                &model,
                inputs.curated.as_deref(),
                &inputs.lexicons,
                (projected.iter().filter(|(_, l)| *l == Label::ArgC).count(),
                 projected.iter().filter(|(_, l)| *l == Label::Other).count()),
            )?;
            let table = report::eval_rows(&split.to_string(), &rows);
            let name = format!("train_eval_{split}.txt");
            artifacts.push(self.write_file(
                &name,
                format!(
                    "# config: {}\n{}",
                    self.cfg.hash,
                    report::aligned_table(&table)
                )
                .as_bytes(),
            )?);
            messages.push(format!(
                "{split}: baseline F1 = {:.3}",
                rows.first().map(|r| r.f1).unwrap_or(0.0)
            ));
        }

        artifacts.push(self.write_manifest("train", &artifacts)?);
        messages.push(format!(
            "vocabulary {} columns (version {}), {} selected, {} support vectors",
            vocab.len(),
            vocab.version,
            selection_vec.len(),
            model.support_vectors.len()
        ));
        Ok(Outcome {
            subcommand: "train".to_string(),
            artifacts,
            skipped: false,
            messages,
        })
    }

    fn resolved_svm_config(&self, vocab: &Vocabulary) -> SvmConfig {
        let mut config = self.cfg.config.svm_config();
        if config.gamma == 0.0 {
            config.gamma = 1.0 / vocab.len().max(1) as f64;
        }
        config
    }

    #[allow(clippy::too_many_arguments)]
    fn baseline_rows(
        &self,
        records: &[InstanceRecord],
        vectors: &[FeatureVector],
        labels: &[Option<Label>],
        selection: &std::collections::BTreeSet<u32>,
        model: &SvmModel,
        curated: Option<&[LexicalPattern]>,
        lexicons: &LexiconSet,
        train_sizes: (usize, usize),
    ) -> Result<Vec<report::EvalRow>> {
        let mut gold = Vec::new();
        let mut bare = Vec::new();
        let mut pattern_only = Vec::new();
        let mut combined = Vec::new();
        for ((rec, vector), label) in records.iter().zip(vectors).zip(labels) {
            let Some(label) = label else { continue };
            gold.push(*label);
            let projected = vector.project(selection);
            let d = svm::decision(model, &projected)?;
            let cls = if d >= 0.0 { Label::ArgC } else { Label::Other };
            bare.push(cls);
            let hit = curated
                .map(|p| {
                    patterns::any_match(p, &conceding_span(&rec.instance), &lexicons.negation)
                })
                .unwrap_or(false);
            pattern_only.push(if hit { Label::ArgC } else { Label::Other });
            combined.push(if hit { Label::ArgC } else { cls });
        }
        let mut rows = Vec::new();
        let svm_report = eval::prf(&bare, &gold, Label::ArgC)?;
        rows.push(report::EvalRow {
            model: "svm_nost".to_string(),
            train_size: Some(train_sizes),
            precision: svm_report.precision,
            recall: svm_report.recall,
            f1: svm_report.f1,
        });
        if curated.is_some() {
            let p_report = eval::prf(&pattern_only, &gold, Label::ArgC)?;
            rows.push(report::EvalRow {
                model: "pattern_lexicon".to_string(),
                train_size: None,
                precision: p_report.precision,
                recall: p_report.recall,
                f1: p_report.f1,
            });
            let c_report = eval::prf(&combined, &gold, Label::ArgC)?;
            rows.push(report::EvalRow {
                model: "svm_nost+patterns".to_string(),
                train_size: Some(train_sizes),
                precision: c_report.precision,
                recall: c_report.recall,
                f1: c_report.f1,
            });
        }
        Ok(rows)
    }

    fn load_vocab(&self) -> Result<Vocabulary> {
        self.read_json("vocab.json", "train")
    }

    fn load_selection(&self) -> Result<std::collections::BTreeSet<u32>> {
        let v: Vec<u32> = self.read_json("selection.json", "train")?;
        Ok(v.into_iter().collect())
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let json = serde_json::to_string_pretty(value).expect("artifact serializes");
        self.write_file(name, json.as_bytes())
    }

    fn read_json<T: for<'de> Deserialize<'de>>(&self, name: &str, produced_by: &str) -> Result<T> {
        let path = self.out_path(name);
        if !path.exists() {
            return Err(PipelineError::MissingArtifact {
                artifact: path.display().to_string(),
                produced_by: produced_by.to_string(),
            });
        }
        let text = std::fs::read_to_string(&path).map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| {
            PipelineError::Data(format!("{} is corrupt: {e}", path.display()))
        })
    }

    pub fn selftrain(&self, force: bool) -> Result<Outcome> {
        self.ensure_out_dir()?;
        if !force && self.up_to_date("selftrain") {
            return Ok(self.skip_outcome("selftrain"));
        }
        let inputs = self.feature_inputs()?;
        let include_jaccard = self.cfg.config.features.include_jaccard;
        let vocab = self.load_vocab()?;
        let selection = self.load_selection()?;

        let train_records = self.load_instances(Split::Train)?;
        let dev_records = self.load_instances(Split::Dev)?;
        let unlabeled_records = self.load_instances(Split::Unlabeled)?;

        let ctx = FeatureContext {
            lexicons: &inputs.lexicons,
            stopwords: &inputs.stopwords,
            patterns: inputs.curated.as_deref(),
        };
        let fz = |records: &[InstanceRecord]| -> Result<Vec<FeatureVector>> {
            let vectors = self.featurize_records(
                records,
                &vocab,
                &ctx,
                include_jaccard,
                &inputs.op_map,
                &inputs.thread_map,
            )?;
            Ok(vectors.iter().map(|v| v.project(&selection)).collect())
        };

        let train_vectors = fz(&train_records)?;
        let train_labels = Self::labels_of(&train_records)
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| {
                PipelineError::Data("train instances must carry labels".to_string())
            })?;
        let labeled: Vec<(FeatureVector, Label)> = train_vectors
            .into_iter()
            .zip(train_labels)
            .collect();

        let dev_vectors = fz(&dev_records)?;
        let dev_labels = Self::labels_of(&dev_records);
        let mut dev: Vec<(FeatureVector, Label)> = Vec::new();
        let mut dev_hits: Vec<bool> = Vec::new();
        for ((rec, v), l) in dev_records.iter().zip(dev_vectors).zip(dev_labels) {
            let Some(l) = l else { continue };
            let hit = inputs
                .curated
                .as_deref()
                .map(|p| {
                    patterns::any_match(p, &conceding_span(&rec.instance), &inputs.lexicons.negation)
                })
                .unwrap_or(false);
            dev.push((v, l));
            dev_hits.push(hit);
        }
        if dev.is_empty() {
            return Err(PipelineError::Data(
                "selftrain needs labeled dev instances for model selection".to_string(),
            ));
        }
        let unlabeled = fz(&unlabeled_records)?;

        let data = SelfTrainData {
            labeled: &labeled,
            unlabeled: &unlabeled,
            dev: &dev,
            dev_pattern_hits: &dev_hits,
        };
        let svm_config = self.resolved_svm_config(&vocab);
        let grid = self.cfg.config.grid_cells();
        let (rows, runs) =
            selftrain::grid_sweep(&data, &svm_config, &grid, self.cfg.config.seed)?;

        let mut artifacts = Vec::new();
        let table = report::grid_rows(&rows);
        artifacts.push(self.write_file(
            "grid.tsv",
            report::tsv_table(&self.preamble(), &table).as_bytes(),
        )?);
        artifacts.push(self.write_file(
            "grid.txt",
            format!(
                "# config: {}\n{}",
                self.cfg.hash,
                report::aligned_table(&table)
            )
            .as_bytes(),
        )?);
        for (row, run) in rows.iter().zip(&runs) {
            let mut buf = Vec::new();
            for record in &run.rounds {
                serde_json::to_writer(&mut buf, record).expect("round serializes");
                buf.push(b'\n');
            }
            artifacts.push(self.write_file(
                &format!("runs/run_{}_{}.jsonl", row.pool_size, row.g_c),
                &buf,
            )?);
        }
        let best_idx = rows.iter().position(|r| r.best).unwrap_or(0);
        artifacts.push(self.write_json("model_best.json", &runs[best_idx].best_model)?);
        artifacts.push(self.write_manifest("selftrain", &artifacts)?);

        let best = &rows[best_idx];
        Ok(Outcome {
            subcommand: "selftrain".to_string(),
            artifacts,
            skipped: false,
            messages: vec![format!(
                "best cell: pool {} G_c {} -> dev F1 {:.3} (train {};{})",
                best.pool_size, best.g_c, best.f1, best.best_train_arg_c, best.best_train_other
            )],
        })
    }

    /// Which trained model a predict run uses.
    pub fn model_artifact(&self, which: &str) -> Result<(SvmModel, String)> {
        match which {
            "nost" => Ok((self.read_json("model_nost.json", "train")?, "nost".to_string())),
            "best" => Ok((
                self.read_json("model_best.json", "selftrain")?,
                "best".to_string(),
            )),
            "auto" => {
                if self.out_path("model_best.json").exists() {
                    Ok((
                        self.read_json("model_best.json", "selftrain")?,
                        "best".to_string(),
                    ))
                } else {
                    Ok((self.read_json("model_nost.json", "train")?, "nost".to_string()))
                }
            }
            other => Err(PipelineError::Data(format!(
                "unknown model `{other}` (expected nost, best, or auto)"
            ))),
        }
    }

    pub fn predict(&self, split: Split, which_model: &str, force: bool) -> Result<Outcome> {
        self.ensure_out_dir()?;
        let sub = format!("predict_{split}_{which_model}");
        if !force && self.up_to_date(&sub) {
            return Ok(self.skip_outcome(&sub));
        }
        let inputs = self.feature_inputs()?;
        let include_jaccard = self.cfg.config.features.include_jaccard;
        let vocab = self.load_vocab()?;
        let selection = self.load_selection()?;
        let (model, model_name) = self.model_artifact(which_model)?;

        let records = self.load_instances(split)?;
        let ctx = FeatureContext {
            lexicons: &inputs.lexicons,
            stopwords: &inputs.stopwords,
            patterns: inputs.curated.as_deref(),
        };
        let vectors = self.featurize_records(
            &records,
            &vocab,
            &ctx,
            include_jaccard,
            &inputs.op_map,
            &inputs.thread_map,
        )?;

        let mut predictions = Vec::with_capacity(records.len());
        for (rec, vector) in records.iter().zip(&vectors) {
            let projected = vector.project(&selection);
            let d = svm::decision(&model, &projected)?;
            let hit = inputs
                .curated
                .as_deref()
                .map(|p| {
                    patterns::any_match(p, &conceding_span(&rec.instance), &inputs.lexicons.negation)
                })
                .unwrap_or(false);
            let label = if hit || d >= 0.0 {
                Label::ArgC
            } else {
                Label::Other
            };
            predictions.push(PredictionRecord {
                id: rec.instance.id.clone(),
                label,
                decision: d,
                pattern_hit: hit,
            });
        }

        let mut buf = Vec::new();
        for p in &predictions {
            serde_json::to_writer(&mut buf, p).expect("prediction serializes");
            buf.push(b'\n');
        }
        let suffix = if model_name == "best" {
            String::new()
        } else {
            format!("_{model_name}")
        };
        let name = format!("predictions_{split}{suffix}.jsonl");
        let mut artifacts = vec![self.write_file(&name, &buf)?];
        artifacts.push(self.write_manifest(&sub, &artifacts)?);
        let argc = predictions.iter().filter(|p| p.label == Label::ArgC).count();
        Ok(Outcome {
            subcommand: sub,
            artifacts,
            skipped: false,
            messages: vec![format!(
                "{split}: {argc}/{} predicted arg_c with model `{model_name}`",
                predictions.len()
            )],
        })
    }

    fn load_predictions(&self, name: &str, produced_by: &str) -> Result<Vec<PredictionRecord>> {
        let path = self.out_path(name);
        if !path.exists() {
            return Err(PipelineError::MissingArtifact {
                artifact: path.display().to_string(),
                produced_by: produced_by.to_string(),
            });
        }
        let text = std::fs::read_to_string(&path).map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut out = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: PredictionRecord = serde_json::from_str(line).map_err(|e| {
                PipelineError::Data(format!("{}:{}: {e}", path.display(), lineno + 1))
            })?;
            out.push(rec);
        }
        Ok(out)
    }

    pub fn evaluate(&self, split: Split, force: bool) -> Result<Outcome> {
        self.ensure_out_dir()?;
        let sub = format!("evaluate_{split}");
        if !force && self.up_to_date(&sub) {
            return Ok(self.skip_outcome(&sub));
        }
        let records = self.load_instances(split)?;
        let labels = Self::labels_of(&records);
        let mut gold_by_id: BTreeMap<&str, Label> = BTreeMap::new();
        for (rec, label) in records.iter().zip(&labels) {
            if let Some(l) = label {
                gold_by_id.insert(rec.instance.id.as_str(), *l);
            }
        }
        if gold_by_id.is_empty() {
            return Err(PipelineError::Data(format!(
                "no labeled instances in the {split} split to evaluate against"
            )));
        }

        let mut rows = Vec::new();
        let candidates = [
            (format!("predictions_{split}.jsonl"), "self-training+patterns", "predict"),
            (format!("predictions_{split}_nost.jsonl"), "svm_nost+patterns", "predict --model nost"),
        ];
        for (name, label_for_row, produced_by) in &candidates {
            if !self.out_path(name).exists() {
                continue;
            }
            let preds = self.load_predictions(name, produced_by)?;
            let mut aligned_preds = Vec::new();
            let mut aligned_gold = Vec::new();
            for p in &preds {
                if let Some(g) = gold_by_id.get(p.id.as_str()) {
                    aligned_preds.push(p.label);
                    aligned_gold.push(*g);
                }
            }
            if aligned_preds.is_empty() {
                continue;
            }
            let rep = eval::prf(&aligned_preds, &aligned_gold, Label::ArgC)?;
            rows.push(report::EvalRow {
                model: label_for_row.to_string(),
                train_size: None,
                precision: rep.precision,
                recall: rep.recall,
                f1: rep.f1,
            });
        }

        // pattern-only baseline, computable without any model artifact
        if let Some(curated) = self.curated_patterns()? {
            let (lexicons, _) = self.lexicon_set()?;
            let mut preds = Vec::new();
            let mut gold = Vec::new();
            for (rec, label) in records.iter().zip(&labels) {
                let Some(l) = label else { continue };
                let hit = patterns::any_match(
                    &curated,
                    &conceding_span(&rec.instance),
                    &lexicons.negation,
                );
                preds.push(if hit { Label::ArgC } else { Label::Other });
                gold.push(*l);
            }
            let rep = eval::prf(&preds, &gold, Label::ArgC)?;
            rows.push(report::EvalRow {
                model: "pattern_lexicon".to_string(),
                train_size: None,
                precision: rep.precision,
                recall: rep.recall,
                f1: rep.f1,
            });
        }

        if rows.is_empty() {
            return Err(PipelineError::MissingArtifact {
                artifact: format!("predictions_{split}.jsonl"),
                produced_by: "predict".to_string(),
            });
        }

        let table = report::eval_rows(&split.to_string(), &rows);
        let mut artifacts = Vec::new();
        artifacts.push(self.write_file(
            &format!("eval_{split}.txt"),
            format!(
                "# config: {}\n{}",
                self.cfg.hash,
                report::aligned_table(&table)
            )
            .as_bytes(),
        )?);
        let json = serde_json::json!({
            "config_hash": self.cfg.hash,
            "split": split.to_string(),
            "rows": rows.iter().map(|r| serde_json::json!({
                "model": r.model,
                "precision": r.precision,
                "recall": r.recall,
                "f1": r.f1,
            })).collect::<Vec<_>>(),
        });
        artifacts.push(self.write_file(
            &format!("eval_{split}.json"),
            serde_json::to_string_pretty(&json).unwrap().as_bytes(),
        )?);
        artifacts.push(self.write_manifest(&sub, &artifacts)?);
        let best = rows
            .iter()
            .map(|r| format!("{} F1={:.3}", r.model, r.f1))
            .collect::<Vec<_>>()
            .join(", ");
        Ok(Outcome {
            subcommand: sub,
            artifacts,
            skipped: false,
            messages: vec![best],
        })
    }

    pub fn distribution(&self, source: &str, force: bool) -> Result<Outcome> {
        self.ensure_out_dir()?;
        let sub = format!("distribution_{source}");
        if !force && self.up_to_date(&sub) {
            return Ok(self.skip_outcome(&sub));
        }
        let label_source = match source {
            "gold" => LabelSource::Gold,
            "predicted" => LabelSource::Predicted,
            other => {
                return Err(PipelineError::Data(format!(
                    "unknown distribution source `{other}` (expected gold or predicted)"
                )))
            }
        };

        let mut sections = Vec::new();
        let mut artifacts = Vec::new();
        let mut reports_json = Vec::new();

        for split in [Split::Train, Split::Dev, Split::Test, Split::Unlabeled] {
            let Some(records) = self.try_load_instances(split)? else {
                continue;
            };
            let pairs: Vec<(&MarkerInstance, Label)> = match label_source {
                LabelSource::Gold => {
                    let labels = Self::labels_of(&records);
                    records
                        .iter()
                        .zip(labels)
                        .filter_map(|(r, l)| l.map(|l| (&r.instance, l)))
                        .collect()
                }
                LabelSource::Predicted => {
                    let name = format!("predictions_{split}.jsonl");
                    if !self.out_path(&name).exists() {
                        continue;
                    }
                    let preds = self.load_predictions(&name, "predict")?;
                    let by_id: BTreeMap<&str, Label> =
                        preds.iter().map(|p| (p.id.as_str(), p.label)).collect();
                    records
                        .iter()
                        .filter_map(|r| {
                            by_id.get(r.instance.id.as_str()).map(|l| (&r.instance, *l))
                        })
                        .collect()
                }
            };
            if pairs.is_empty() {
                continue;
            }
            let report = eval::distribution_report(&pairs, label_source, true)?;
            sections.push(format!(
                "== {split} ({source} labels) ==\n{}",
                report::distribution_text(&report)
            ));
            reports_json.push(serde_json::json!({
                "split": split.to_string(),
                "report": report,
            }));
        }

        if sections.is_empty() {
            return Err(PipelineError::Data(format!(
                "no {source}-labeled instances found for any configured split"
            )));
        }

        let text = format!(
            "# config: {}\n{}",
            self.cfg.hash,
            sections.join("\n")
        );
        artifacts.push(self.write_file(&format!("distribution_{source}.txt"), text.as_bytes())?);
        let json = serde_json::json!({
            "config_hash": self.cfg.hash,
            "source": source,
            "splits": reports_json,
        });
        artifacts.push(self.write_file(
            &format!("distribution_{source}.json"),
            serde_json::to_string_pretty(&json).unwrap().as_bytes(),
        )?);
        artifacts.push(self.write_manifest(&sub, &artifacts)?);
        Ok(Outcome {
            subcommand: sub,
            artifacts,
            skipped: false,
            messages: vec![format!("{} split sections written", sections.len())],
        })
    }

    pub fn agreement(&self, force: bool) -> Result<Outcome> {
        self.ensure_out_dir()?;
        if !force && self.up_to_date("agreement") {
            return Ok(self.skip_outcome("agreement"));
        }
        let mut artifacts = Vec::new();
        let mut messages = Vec::new();
        let mut any = false;
        let mut report_json = Vec::new();
        let mut text = format!("# config: {}\n", self.cfg.hash);

        for split in [Split::Dev, Split::Test] {
            let Some(records) = self.try_load_instances(split)? else {
                continue;
            };
            let mut rows = Vec::new();
            let mut majority_argc = 0usize;
            let mut adjudicated = 0usize;
            for rec in &records {
                let Some(votes) = &rec.crowd_labels else { continue };
                let argc = votes.iter().filter(|&&v| v == Label::ArgC).count() as u32;
                let other = votes.len() as u32 - argc;
                rows.push((argc, other));
                let expert = rec.gold_label;
                if argc.abs_diff(other) == 1 && expert.is_some() {
                    adjudicated += 1;
                }
                let (label, _margin) = eval::majority_vote((argc, other), expert)
                    .map_err(PipelineError::Eval)?;
                if label == Label::ArgC {
                    majority_argc += 1;
                }
            }
            if rows.len() < 2 {
                continue;
            }
            any = true;
            let matrix = VoteMatrix::new(rows.clone(), 5).map_err(PipelineError::Eval)?;
            let kappa = eval::fleiss_kappa_votes(&matrix)?;
            let confident: Vec<(u32, u32)> = rows
                .iter()
                .copied()
                .filter(|(a, o)| a.abs_diff(*o) > 1)
                .collect();
            let kappa_confident = if confident.len() >= 2 {
                Some(eval::fleiss_kappa_votes(&VoteMatrix::new(confident.clone(), 5)?)?)
            } else {
                None
            };
            text.push_str(&format!(
                "{split}: items = {}, kappa = {kappa:.3}, arg_c by majority (with expert adjudication) = {majority_argc}, adjudicated 3-2 items = {adjudicated}\n",
                rows.len()
            ));
            if let Some(kc) = kappa_confident {
                text.push_str(&format!(
                    "{split}: kappa excluding 3-2 splits = {kc:.3} over {} items\n",
                    confident.len()
                ));
            }
            report_json.push(serde_json::json!({
                "split": split.to_string(),
                "items": rows.len(),
                "kappa": kappa,
                "kappa_excluding_3_2": kappa_confident,
                "majority_arg_c": majority_argc,
                "adjudicated_3_2": adjudicated,
            }));
            messages.push(format!("{split}: kappa = {kappa:.3}"));
        }

        if !any {
            return Err(PipelineError::Data(
                "agreement needs dev/test instance files with crowd_labels".to_string(),
            ));
        }
        artifacts.push(self.write_file("agreement.txt", text.as_bytes())?);
        let json = serde_json::json!({
            "config_hash": self.cfg.hash,
            "splits": report_json,
        });
        artifacts.push(self.write_file(
            "agreement.json",
            serde_json::to_string_pretty(&json).unwrap().as_bytes(),
        )?);
        artifacts.push(self.write_manifest("agreement", &artifacts)?);
        Ok(Outcome {
            subcommand: "agreement".to_string(),
            artifacts,
            skipped: false,
            messages,
        })
    }
}

struct FeatureInputs {
    lexicons: LexiconSet,
    stopwords: StopwordList,
    curated: Option<Vec<LexicalPattern>>,
    op_map: BTreeMap<String, Vec<TokenSequence>>,
    thread_map: BTreeMap<String, String>,
    warnings: Vec<String>,
}

fn lexicon_from_entries(
    name: &str,
    entries: std::collections::BTreeMap<String, lexicons::LexTag>,
) -> lexicons::Lexicon {
    lexicons::Lexicon::from_entries(name, "loaded-v1", entries)
}
