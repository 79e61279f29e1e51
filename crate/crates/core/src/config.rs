//! Run configuration: a single TOML file drives every subcommand, with a
//! few flags layered on top. The serialized form is hashed so artifacts can
//! be traced back to the exact configuration that produced them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Marker, Split};
use crate::svm::{ClassWeightMode, SvmConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse config {path}: {source}")]
    Parse {
        path: String,
        source: Box<toml::de::Error>,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusPaths {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub unlabeled: Option<PathBuf>,
    /// Corpus file format id; only `jsonl-v1` is defined.
    #[serde(default = "default_format")]
    pub format: String,
}

fn default_format() -> String {
    "jsonl-v1".to_string()
}

impl Default for CorpusPaths {
    fn default() -> Self {
        CorpusPaths {
            train: None,
            dev: None,
            test: None,
            unlabeled: None,
            format: default_format(),
        }
    }
}

/// Labeled instance files (instances-v1), overriding the `extract`
/// artifacts per split. Annotation happens upstream; these files carry the
/// exported gold and crowd labels.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InstancePaths {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub unlabeled: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SentimentPath {
    pub path: PathBuf,
    /// "tsv" or "mpqa".
    pub format: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LexiconPaths {
    /// Stopword list file; the builtin list is used when absent.
    pub stopwords: Option<PathBuf>,
    /// Hedge cue list file; the builtin list is used when absent.
    pub hedges: Option<PathBuf>,
    #[serde(default)]
    pub sentiment: Vec<SentimentPath>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSection {
    /// Manually curated pattern file used by prediction and the system
    /// combination.
    pub curated: Option<PathBuf>,
    /// Bootstrap seed phrases.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<String>,
    #[serde(default = "default_bootstrap_iterations")]
    pub max_iterations: usize,
}

fn default_seeds() -> Vec<String> {
    vec!["i agree".to_string(), "you are right".to_string()]
}

fn default_bootstrap_iterations() -> usize {
    20
}

impl Default for PatternSection {
    fn default() -> Self {
        PatternSection {
            curated: None,
            seeds: default_seeds(),
            max_iterations: default_bootstrap_iterations(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSection {
    #[serde(default = "default_true")]
    pub include_jaccard: bool,
    #[serde(default = "default_vocab_k")]
    pub vocab_k: usize,
    #[serde(default = "default_chi2_k")]
    pub chi2_k: usize,
    /// Split whose labels drive the chi-square selection: "dev" or "train".
    #[serde(default = "default_chi2_source")]
    pub chi2_source: String,
}

fn default_true() -> bool {
    true
}
fn default_vocab_k() -> usize {
    1000
}
fn default_chi2_k() -> usize {
    300
}
fn default_chi2_source() -> String {
    "dev".to_string()
}

impl Default for FeatureSection {
    fn default() -> Self {
        FeatureSection {
            include_jaccard: true,
            vocab_k: default_vocab_k(),
            chi2_k: default_chi2_k(),
            chi2_source: default_chi2_source(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmSection {
    #[serde(default = "default_c")]
    pub c: f64,
    /// 0 means 1 / vocabulary size.
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "default_weights")]
    pub class_weights: String,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_passes")]
    pub max_passes: usize,
}

fn default_c() -> f64 {
    1.0
}
fn default_weights() -> String {
    "inverse_frequency".to_string()
}
fn default_tolerance() -> f64 {
    1e-3
}
fn default_max_passes() -> usize {
    10
}

impl Default for SvmSection {
    fn default() -> Self {
        SvmSection {
            c: default_c(),
            gamma: 0.0,
            class_weights: default_weights(),
            tolerance: default_tolerance(),
            max_passes: default_max_passes(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfTrainSection {
    #[serde(default = "default_pool")]
    pub pool_size: usize,
    #[serde(default = "default_gc")]
    pub g_c: usize,
    /// Sweep cells as [pool_size, g_c] pairs; when empty the single
    /// (pool_size, g_c) cell above is used.
    #[serde(default)]
    pub grid: Vec<[usize; 2]>,
}

fn default_pool() -> usize {
    100
}
fn default_gc() -> usize {
    50
}

impl Default for SelfTrainSection {
    fn default() -> Self {
        SelfTrainSection {
            pool_size: default_pool(),
            g_c: default_gc(),
            grid: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 means all available cores.
    #[serde(default)]
    pub jobs: usize,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub corpus: CorpusPaths,
    #[serde(default)]
    pub instances: InstancePaths,
    #[serde(default)]
    pub lexicons: LexiconPaths,
    #[serde(default)]
    pub patterns: PatternSection,
    #[serde(default)]
    pub features: FeatureSection,
    #[serde(default)]
    pub svm: SvmSection,
    #[serde(default)]
    pub selftrain: SelfTrainSection,
    /// Target markers; defaults to all four.
    #[serde(default = "default_markers")]
    pub markers: Vec<String>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_markers() -> Vec<String> {
    Marker::ALL.iter().map(|m| m.to_string()).collect()
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            jobs: 0,
            out_dir: default_out(),
            corpus: CorpusPaths::default(),
            instances: InstancePaths::default(),
            lexicons: LexiconPaths::default(),
            patterns: PatternSection::default(),
            features: FeatureSection::default(),
            svm: SvmSection::default(),
            selftrain: SelfTrainSection::default(),
            markers: default_markers(),
        }
    }
}

/// A parsed config plus the hash artifacts are stamped with.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    /// First 16 hex chars of the SHA-256 of the canonical serialized config.
    pub hash: String,
    /// Directory the config file lives in; relative paths resolve from it.
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.config.out_dir)
    }
}

/// Parse, validate, apply flag overrides, and hash a config file.
pub fn load_config(
    path: &Path,
    seed_override: Option<u64>,
    out_override: Option<&Path>,
    jobs_override: Option<usize>,
) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut config: RunConfig = toml::from_str(&text).map_err(|source| ConfigError::Parse {
        path: path.display().to_string(),
        source: Box::new(source),
    })?;
    if let Some(seed) = seed_override {
        config.seed = seed;
    }
    if let Some(out) = out_override {
        config.out_dir = out.to_path_buf();
    }
    if let Some(jobs) = jobs_override {
        config.jobs = jobs;
    }
    validate(&config)?;

    // hash the effective config (after overrides), not the raw file bytes
    let canonical = toml::to_string(&config).expect("config serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    let hash: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();

    let base_dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."))
        .to_path_buf();
    Ok(LoadedConfig {
        config,
        hash,
        base_dir,
    })
}

fn validate(config: &RunConfig) -> Result<(), ConfigError> {
    let mut problems = Vec::new();

    if config.corpus.format != "jsonl-v1" {
        problems.push(format!(
            "corpus.format: unsupported format `{}` (supported: jsonl-v1)",
            config.corpus.format
        ));
    }
    for m in &config.markers {
        if m.parse::<Marker>().is_err() {
            problems.push(format!(
                "markers: `{m}` is not one of but/though/however/while"
            ));
        }
    }
    if !(config.svm.c > 0.0) {
        problems.push(format!("svm.c: must be > 0, got {}", config.svm.c));
    }
    if config.svm.gamma < 0.0 {
        problems.push(format!(
            "svm.gamma: must be >= 0 (0 = 1/vocab size), got {}",
            config.svm.gamma
        ));
    }
    if parse_weight_mode(&config.svm.class_weights).is_none() {
        problems.push(format!(
            "svm.class_weights: `{}` is not inverse_frequency or uniform",
            config.svm.class_weights
        ));
    }
    if config.features.vocab_k == 0 {
        problems.push("features.vocab_k: must be >= 1".to_string());
    }
    if config.features.chi2_k == 0 {
        problems.push("features.chi2_k: must be >= 1".to_string());
    }
    if !matches!(config.features.chi2_source.as_str(), "dev" | "train") {
        problems.push(format!(
            "features.chi2_source: `{}` is not dev or train",
            config.features.chi2_source
        ));
    }
    if config.selftrain.pool_size == 0 {
        problems.push("selftrain.pool_size: must be >= 1".to_string());
    }
    if config.selftrain.g_c == 0 {
        problems.push("selftrain.g_c: must be >= 1".to_string());
    }
    for cell in &config.selftrain.grid {
        if cell[0] == 0 || cell[1] == 0 {
            problems.push(format!("selftrain.grid: cell [{}, {}] must be >= 1", cell[0], cell[1]));
        }
    }
    for s in &config.lexicons.sentiment {
        if !matches!(s.format.as_str(), "tsv" | "mpqa") {
            problems.push(format!(
                "lexicons.sentiment: format `{}` is not tsv or mpqa",
                s.format
            ));
        }
    }
    if config.patterns.seeds.is_empty() {
        problems.push("patterns.seeds: at least one seed phrase required".to_string());
    }

    if problems.is_empty() {
        Ok(())
    } else {
        Err(ConfigError::Invalid(problems.join("; ")))
    }
}

pub fn parse_weight_mode(s: &str) -> Option<ClassWeightMode> {
    match s {
        "inverse_frequency" => Some(ClassWeightMode::InverseFrequency),
        "uniform" => Some(ClassWeightMode::Uniform),
        _ => None,
    }
}

impl RunConfig {
    /// The SVM configuration with gamma left as configured (0 = resolve
    /// against the vocabulary at train time).
    pub fn svm_config(&self) -> SvmConfig {
        SvmConfig {
            c: self.svm.c,
            gamma: self.svm.gamma,
            class_weight_mode: parse_weight_mode(&self.svm.class_weights)
                .unwrap_or(ClassWeightMode::InverseFrequency),
            tolerance: self.svm.tolerance,
            max_passes: self.svm.max_passes,
            seed: self.seed,
        }
    }

    pub fn target_markers(&self) -> Vec<Marker> {
        self.markers
            .iter()
            .filter_map(|m| m.parse().ok())
            .collect()
    }

    /// Grid cells for the sweep; falls back to the single configured cell.
    pub fn grid_cells(&self) -> Vec<(usize, usize)> {
        if self.selftrain.grid.is_empty() {
            vec![(self.selftrain.pool_size, self.selftrain.g_c)]
        } else {
            self.selftrain.grid.iter().map(|c| (c[0], c[1])).collect()
        }
    }

    /// Corpus path per split, in fixed split order.
    pub fn corpus_splits(&self) -> BTreeMap<Split, PathBuf> {
        let mut map = BTreeMap::new();
        if let Some(p) = &self.corpus.train {
            map.insert(Split::Train, p.clone());
        }
        if let Some(p) = &self.corpus.dev {
            map.insert(Split::Dev, p.clone());
        }
        if let Some(p) = &self.corpus.test {
            map.insert(Split::Test, p.clone());
        }
        if let Some(p) = &self.corpus.unlabeled {
            map.insert(Split::Unlabeled, p.clone());
        }
        map
    }

    pub fn instance_override(&self, split: Split) -> Option<&PathBuf> {
        match split {
            Split::Train => self.instances.train.as_ref(),
            Split::Dev => self.instances.dev.as_ref(),
            Split::Test => self.instances.test.as_ref(),
            Split::Unlabeled => self.instances.unlabeled.as_ref(),
        }
    }
}
