//! Pool-based self-training over unlabeled instances, plus the
//! pattern-or-classifier system combination used for final predictions.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;
use crate::eval::{prf, EvalReport};
use crate::features::FeatureVector;
use crate::lexicons::Lexicon;
use crate::patterns::{any_match, ConcedingSpan, LexicalPattern};
use crate::svm::{decision, train, SvmConfig, SvmError, SvmModel};

#[derive(Debug, Error)]
pub enum SelfTrainError {
    #[error("labeled seed set must contain both classes")]
    SingleClassSeed,
    #[error("dev pattern hits ({hits}) must align with dev instances ({dev})")]
    DevHitsMismatch { hits: usize, dev: usize },
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error("invalid self-training configuration: {0}")]
    InvalidConfig(String),
}

/// Pool size and per-pool addition cap for one run, plus the shuffle seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelfTrainConfig {
    /// Unlabeled instances per pool (U').
    pub pool_size: usize,
    /// Maximum predicted-arg_c instances added per pool (G_c).
    pub g_c: usize,
    /// Seed for shuffling the unlabeled set into pools.
    pub seed: u64,
}

impl SelfTrainConfig {
    fn validate(&self) -> Result<(), SelfTrainError> {
        if self.pool_size == 0 {
            return Err(SelfTrainError::InvalidConfig("pool_size must be >= 1".into()));
        }
        if self.g_c == 0 {
            return Err(SelfTrainError::InvalidConfig("g_c must be >= 1".into()));
        }
        Ok(())
    }
}

/// One row of the run history. Round 0 is the no-self-training baseline;
/// rounds 1..=P each consume one pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Pool consumed this round; absent for the baseline row.
    pub pool_index: Option<usize>,
    pub added_arg_c: usize,
    pub added_other: usize,
    pub train_arg_c: usize,
    pub train_other: usize,
    /// Dev metrics of the system combination (pattern hit forces arg_c).
    pub dev_precision: f64,
    pub dev_recall: f64,
    pub dev_f1: f64,
    /// Dev F1 of the bare classifier, recorded alongside.
    pub dev_f1_classifier: f64,
}

/// Full history of a self-training run plus the best model by dev F1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelfTrainRun {
    pub rounds: Vec<RoundRecord>,
    pub best_round: usize,
    pub best_model: SvmModel,
}

/// Inputs fixed across a run: featurized labeled/unlabeled/dev sets and the
/// per-dev-instance curated-pattern hits for the system combination.
pub struct SelfTrainData<'a> {
    pub labeled: &'a [(FeatureVector, Label)],
    pub unlabeled: &'a [FeatureVector],
    pub dev: &'a [(FeatureVector, Label)],
    pub dev_pattern_hits: &'a [bool],
}

fn classifier_label(d: f64) -> Label {
    if d >= 0.0 {
        Label::ArgC
    } else {
        Label::Other
    }
}

fn evaluate_dev(
    model: &SvmModel,
    dev: &[(FeatureVector, Label)],
    hits: &[bool],
) -> Result<(EvalReport, f64), SvmError> {
    let mut combined = Vec::with_capacity(dev.len());
    let mut bare = Vec::with_capacity(dev.len());
    for ((v, _), &hit) in dev.iter().zip(hits) {
        let d = decision(model, v)?;
        let cls = classifier_label(d);
        bare.push(cls);
        combined.push(if hit { Label::ArgC } else { cls });
    }
    let gold: Vec<Label> = dev.iter().map(|(_, l)| *l).collect();
    let combined_report = prf(&combined, &gold, Label::ArgC).expect("aligned lengths");
    let bare_report = prf(&bare, &gold, Label::ArgC).expect("aligned lengths");
    Ok((combined_report, bare_report.f1))
}

/// Run pool-based self-training.
///
/// The unlabeled set is shuffled by the configured seed and split into
/// ceil(|U| / pool_size) pools. Each round labels one pool with the current
/// model, ranks by |decision|, adds up to `g_c` predicted arg_c instances
/// and however many predicted-other instances keep the cumulative training
/// set within half an instance of the original labeled class ratio, then
/// retrains and evaluates on dev. The best round maximizes combined dev F1
/// (ties resolve to the earliest round).
pub fn self_train(
    data: &SelfTrainData<'_>,
    svm_config: &SvmConfig,
    st_config: &SelfTrainConfig,
) -> Result<SelfTrainRun, SelfTrainError> {
    st_config.validate()?;
    if data.dev_pattern_hits.len() != data.dev.len() {
        return Err(SelfTrainError::DevHitsMismatch {
            hits: data.dev_pattern_hits.len(),
            dev: data.dev.len(),
        });
    }
    let seed_argc = data
        .labeled
        .iter()
        .filter(|(_, l)| *l == Label::ArgC)
        .count();
    let seed_other = data.labeled.len() - seed_argc;
    if seed_argc == 0 || seed_other == 0 {
        return Err(SelfTrainError::SingleClassSeed);
    }
    // original class ratio, preserved while growing the training set
    let ratio = seed_other as f64 / seed_argc as f64;

    let mut training: Vec<(FeatureVector, Label)> = data.labeled.to_vec();
    let mut model = train(&training, svm_config)?;

    if data.unlabeled.is_empty() {
        return Ok(SelfTrainRun {
            rounds: Vec::new(),
            best_round: 0,
            best_model: model,
        });
    }

    let (baseline_report, baseline_bare) = evaluate_dev(&model, data.dev, data.dev_pattern_hits)?;
    let mut rounds = vec![RoundRecord {
        round: 0,
        pool_index: None,
        added_arg_c: 0,
        added_other: 0,
        train_arg_c: seed_argc,
        train_other: seed_other,
        dev_precision: baseline_report.precision,
        dev_recall: baseline_report.recall,
        dev_f1: baseline_report.f1,
        dev_f1_classifier: baseline_bare,
    }];
    let mut best_round = 0usize;
    let mut best_f1 = baseline_report.f1;
    let mut best_model = model.clone();

    let mut order: Vec<usize> = (0..data.unlabeled.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(st_config.seed);
    order.shuffle(&mut rng);

    // cumulative added counts, tracked to keep O ~= ratio * A
    let mut added_argc_total = 0usize;
    let mut added_other_total = 0usize;

    for (pool_index, pool) in order.chunks(st_config.pool_size).enumerate() {
        // rank pool candidates by confidence under the current model
        let mut argc_cands: Vec<(f64, usize)> = Vec::new();
        let mut other_cands: Vec<(f64, usize)> = Vec::new();
        for &u_idx in pool {
            let d = decision(&model, &data.unlabeled[u_idx])?;
            match classifier_label(d) {
                Label::ArgC => argc_cands.push((d.abs(), u_idx)),
                Label::Other => other_cands.push((d.abs(), u_idx)),
            }
        }
        let by_conf = |a: &(f64, usize), b: &(f64, usize)| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.1.cmp(&b.1))
        };
        argc_cands.sort_by(by_conf);
        other_cands.sort_by(by_conf);

        // pick counts: up to g_c arg_c, then the other-count restoring the
        // cumulative ratio; shrink the arg_c side if other candidates are
        // too scarce to keep the balance
        let other_avail = other_cands.len();
        let mut take_argc = st_config.g_c.min(argc_cands.len());
        let target_other = |a: usize| -> i64 {
            let want = (ratio * (added_argc_total + a) as f64).round() as i64;
            want - added_other_total as i64
        };
        while take_argc > 0 && target_other(take_argc) > other_avail as i64 {
            take_argc -= 1;
        }
        let take_other = target_other(take_argc).clamp(0, other_avail as i64) as usize;

        for &(_, u_idx) in argc_cands.iter().take(take_argc) {
            training.push((data.unlabeled[u_idx].clone(), Label::ArgC));
        }
        for &(_, u_idx) in other_cands.iter().take(take_other) {
            training.push((data.unlabeled[u_idx].clone(), Label::Other));
        }
        added_argc_total += take_argc;
        added_other_total += take_other;

        if take_argc + take_other > 0 {
            model = train(&training, svm_config)?;
        }
        let (report, bare_f1) = evaluate_dev(&model, data.dev, data.dev_pattern_hits)?;
        let round = rounds.len();
        rounds.push(RoundRecord {
            round,
            pool_index: Some(pool_index),
            added_arg_c: take_argc,
            added_other: take_other,
            train_arg_c: seed_argc + added_argc_total,
            train_other: seed_other + added_other_total,
            dev_precision: report.precision,
            dev_recall: report.recall,
            dev_f1: report.f1,
            dev_f1_classifier: bare_f1,
        });
        if report.f1 > best_f1 {
            best_f1 = report.f1;
            best_round = round;
            best_model = model.clone();
        }
    }

    Ok(SelfTrainRun {
        rounds,
        best_round,
        best_model,
    })
}

/// System combination: any curated-pattern match on the conceding span
/// forces arg_c, otherwise the classifier's decision sign rules (a decision
/// of exactly zero resolves to arg_c).
pub fn combine_predict(
    span: &ConcedingSpan,
    patterns: &[LexicalPattern],
    negation: &Lexicon,
    model: &SvmModel,
    vector: &FeatureVector,
) -> Result<Label, SvmError> {
    if any_match(patterns, span, negation) {
        return Ok(Label::ArgC);
    }
    Ok(classifier_label(decision(model, vector)?))
}

/// One grid cell result, shaped like the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub pool_size: usize,
    pub g_c: usize,
    pub best_train_arg_c: usize,
    pub best_train_other: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub best: bool,
}

/// Run one self-training pass per (pool_size, g_c) cell and tabulate the
/// best round of each. The overall best cell (max F1, earliest on ties) is
/// flagged.
pub fn grid_sweep(
    data: &SelfTrainData<'_>,
    svm_config: &SvmConfig,
    grid: &[(usize, usize)],
    seed: u64,
) -> Result<(Vec<GridRow>, Vec<SelfTrainRun>), SelfTrainError> {
    assert!(!grid.is_empty(), "grid must contain at least one cell");
    let mut rows = Vec::with_capacity(grid.len());
    let mut runs = Vec::with_capacity(grid.len());
    for &(pool_size, g_c) in grid {
        let st = SelfTrainConfig {
            pool_size,
            g_c,
            seed,
        };
        let run = self_train(data, svm_config, &st)?;
        let best = run
            .rounds
            .get(run.best_round)
            .cloned()
            .unwrap_or(RoundRecord {
                round: 0,
                pool_index: None,
                added_arg_c: 0,
                added_other: 0,
                train_arg_c: 0,
                train_other: 0,
                dev_precision: 0.0,
                dev_recall: 0.0,
                dev_f1: 0.0,
                dev_f1_classifier: 0.0,
            });
        rows.push(GridRow {
            pool_size,
            g_c,
            best_train_arg_c: best.train_arg_c,
            best_train_other: best.train_other,
            precision: best.dev_precision,
            recall: best.dev_recall,
            f1: best.dev_f1,
            best: false,
        });
        runs.push(run);
    }
    if let Some(best_idx) = rows
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| {
            a.f1.partial_cmp(&b.f1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| ib.cmp(ia))
        })
        .map(|(i, _)| i)
    {
        rows[best_idx].best = true;
    }
    Ok((rows, runs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::ClassWeightMode;
    use std::collections::BTreeMap;

    fn vec1(x: f64) -> FeatureVector {
        let mut entries = BTreeMap::new();
        entries.insert(0u32, x);
        FeatureVector::new(entries, "st-v")
    }

    fn svm_cfg() -> SvmConfig {
        SvmConfig {
            c: 10.0,
            gamma: 0.5,
            class_weight_mode: ClassWeightMode::InverseFrequency,
            tolerance: 1e-4,
            max_passes: 5,
            seed: 9,
        }
    }

    /// labeled: 2 arg_c at +1, 4 other at -1 (ratio 2.0);
    /// unlabeled: points scattered on both sides; dev: clean split
    fn fixture() -> (
        Vec<(FeatureVector, Label)>,
        Vec<FeatureVector>,
        Vec<(FeatureVector, Label)>,
        Vec<bool>,
    ) {
        let labeled = vec![
            (vec1(1.0), Label::ArgC),
            (vec1(1.2), Label::ArgC),
            (vec1(-1.0), Label::Other),
            (vec1(-1.2), Label::Other),
            (vec1(-0.8), Label::Other),
            (vec1(-1.4), Label::Other),
        ];
        let unlabeled: Vec<FeatureVector> = (0..40)
            .map(|i| {
                let sign = if i % 3 == 0 { 1.0 } else { -1.0 };
                vec1(sign * (0.5 + 0.05 * i as f64))
            })
            .collect();
        let dev = vec![
            (vec1(0.9), Label::ArgC),
            (vec1(1.1), Label::ArgC),
            (vec1(-0.9), Label::Other),
            (vec1(-1.1), Label::Other),
        ];
        let hits = vec![false; 4];
        (labeled, unlabeled, dev, hits)
    }

    #[test]
    fn empty_unlabeled_gives_zero_rounds() {
        let (labeled, _, dev, hits) = fixture();
        let data = SelfTrainData {
            labeled: &labeled,
            unlabeled: &[],
            dev: &dev,
            dev_pattern_hits: &hits,
        };
        let st = SelfTrainConfig {
            pool_size: 10,
            g_c: 2,
            seed: 1,
        };
        let run = self_train(&data, &svm_cfg(), &st).unwrap();
        assert!(run.rounds.is_empty());
        assert_eq!(run.best_round, 0);
        assert!(!run.best_model.support_vectors.is_empty());
    }

    #[test]
    fn rounds_cover_all_pools_and_caps_hold() {
        let (labeled, unlabeled, dev, hits) = fixture();
        let data = SelfTrainData {
            labeled: &labeled,
            unlabeled: &unlabeled,
            dev: &dev,
            dev_pattern_hits: &hits,
        };
        let st = SelfTrainConfig {
            pool_size: 10,
            g_c: 2,
            seed: 1,
        };
        let run = self_train(&data, &svm_cfg(), &st).unwrap();
        // baseline + ceil(40/10) pool rounds
        assert_eq!(run.rounds.len(), 1 + 4);
        for r in &run.rounds {
            assert!(r.added_arg_c <= 2);
        }
        // train sizes non-decreasing
        for w in run.rounds.windows(2) {
            assert!(w[1].train_arg_c >= w[0].train_arg_c);
            assert!(w[1].train_other >= w[0].train_other);
        }
    }

    #[test]
    fn class_ratio_within_one_each_round() {
        let (labeled, unlabeled, dev, hits) = fixture();
        let data = SelfTrainData {
            labeled: &labeled,
            unlabeled: &unlabeled,
            dev: &dev,
            dev_pattern_hits: &hits,
        };
        let st = SelfTrainConfig {
            pool_size: 8,
            g_c: 3,
            seed: 5,
        };
        let run = self_train(&data, &svm_cfg(), &st).unwrap();
        let ratio = 4.0 / 2.0;
        for r in &run.rounds {
            let drift = (r.train_other as f64) - ratio * (r.train_arg_c as f64);
            assert!(drift.abs() <= 1.0, "round {} drift {drift}", r.round);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let (labeled, unlabeled, dev, hits) = fixture();
        let data = SelfTrainData {
            labeled: &labeled,
            unlabeled: &unlabeled,
            dev: &dev,
            dev_pattern_hits: &hits,
        };
        let st = SelfTrainConfig {
            pool_size: 10,
            g_c: 2,
            seed: 77,
        };
        let r1 = self_train(&data, &svm_cfg(), &st).unwrap();
        let r2 = self_train(&data, &svm_cfg(), &st).unwrap();
        assert_eq!(
            serde_json::to_string(&r1).unwrap(),
            serde_json::to_string(&r2).unwrap()
        );
    }

    #[test]
    fn best_round_is_argmax_of_history() {
        let (labeled, unlabeled, dev, hits) = fixture();
        let data = SelfTrainData {
            labeled: &labeled,
            unlabeled: &unlabeled,
            dev: &dev,
            dev_pattern_hits: &hits,
        };
        let st = SelfTrainConfig {
            pool_size: 10,
            g_c: 2,
            seed: 2,
        };
        let run = self_train(&data, &svm_cfg(), &st).unwrap();
        let max_f1 = run.rounds.iter().map(|r| r.dev_f1).fold(f64::MIN, f64::max);
        assert_eq!(run.rounds[run.best_round].dev_f1, max_f1);
        // earliest round wins ties
        for r in &run.rounds[..run.best_round] {
            assert!(r.dev_f1 < max_f1);
        }
    }

    #[test]
    fn combine_pattern_overrides_classifier() {
        use crate::lexicons::{builtin, BuiltinLexicon};
        use crate::patterns::{parse_curated, ConcedingSpan};
        use crate::textproc::tokenize;

        let (labeled, _, _, _) = fixture();
        let model = train(&labeled, &svm_cfg()).unwrap();
        let patterns = parse_curated("i fully agree that\n", "mem").unwrap();
        let negation = builtin(BuiltinLexicon::Negation);

        let span = ConcedingSpan {
            tokens: tokenize("i fully agree that point"),
            source_instance: "s".to_string(),
        };
        // vector deep on the negative side: classifier says other
        let v = vec1(-1.0);
        assert_eq!(
            combine_predict(&span, &patterns, &negation, &model, &v).unwrap(),
            Label::ArgC
        );
        // without a pattern hit the classifier decides
        let span2 = ConcedingSpan {
            tokens: tokenize("costs matter"),
            source_instance: "s".to_string(),
        };
        assert_eq!(
            combine_predict(&span2, &patterns, &negation, &model, &v).unwrap(),
            Label::Other
        );
    }

    #[test]
    fn grid_one_cell_one_row() {
        let (labeled, unlabeled, dev, hits) = fixture();
        let data = SelfTrainData {
            labeled: &labeled,
            unlabeled: &unlabeled,
            dev: &dev,
            dev_pattern_hits: &hits,
        };
        let (rows, runs) = grid_sweep(&data, &svm_cfg(), &[(10, 2)], 3).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(runs.len(), 1);
        assert!(rows[0].best);
    }

    #[test]
    fn grid_identical_cells_identical_rows() {
        let (labeled, unlabeled, dev, hits) = fixture();
        let data = SelfTrainData {
            labeled: &labeled,
            unlabeled: &unlabeled,
            dev: &dev,
            dev_pattern_hits: &hits,
        };
        let (rows, _) = grid_sweep(&data, &svm_cfg(), &[(10, 2), (10, 2)], 3).unwrap();
        assert_eq!(rows[0].pool_size, rows[1].pool_size);
        assert_eq!(rows[0].f1, rows[1].f1);
        assert_eq!(rows[0].best_train_arg_c, rows[1].best_train_arg_c);
        // only the earliest max is flagged
        assert!(rows[0].best && !rows[1].best);
    }
}
