//! Soft-margin binary SVM with an RBF kernel, trained by sequential
//! minimal optimization with per-class box constraints. The real-valued
//! decision function doubles as the self-training confidence score.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;
use crate::features::FeatureVector;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("vocabulary version mismatch: model has {model}, input has {input}")]
    VersionMismatch { model: String, input: String },
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("training data must contain at least 2 instances (got {0})")]
    TooFewInstances(usize),
    #[error("SMO did not converge within {passes} sweeps; best-so-far model attached")]
    NonConvergence { passes: usize, model: Box<SvmModel> },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// How per-class penalties are derived from the regularization constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeightMode {
    /// C_y = C * N / (2 * N_y): rarer class gets the larger box.
    InverseFrequency,
    /// C_y = C for both classes.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    /// Regularization constant, > 0.
    pub c: f64,
    /// RBF width, > 0.
    pub gamma: f64,
    pub class_weight_mode: ClassWeightMode,
    /// KKT violation tolerance.
    pub tolerance: f64,
    /// Number of consecutive violation-free sweeps required to declare
    /// convergence. The solver errs out after 200x this many total sweeps.
    pub max_passes: usize,
    /// Seed for the random second-choice heuristic.
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            gamma: 0.0, // 0 means "1 / number of features", resolved at train time
            class_weight_mode: ClassWeightMode::InverseFrequency,
            tolerance: 1e-3,
            max_passes: 10,
            seed: 0,
        }
    }
}

impl SvmConfig {
    fn validate(&self) -> Result<(), SvmError> {
        if !(self.c > 0.0) {
            return Err(SvmError::InvalidConfig(format!("c must be > 0, got {}", self.c)));
        }
        if self.gamma < 0.0 {
            return Err(SvmError::InvalidConfig(format!(
                "gamma must be > 0 (or 0 for 1/n_features), got {}",
                self.gamma
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(SvmError::InvalidConfig("tolerance must be > 0".to_string()));
        }
        if self.max_passes == 0 {
            return Err(SvmError::InvalidConfig("max_passes must be >= 1".to_string()));
        }
        Ok(())
    }
}

/// A trained model: support vectors with signed dual coefficients
/// (alpha_i * y_i), a bias, and the configuration it was trained under.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<FeatureVector>,
    pub dual_coeffs: Vec<f64>,
    pub bias: f64,
    pub config: SvmConfig,
    pub vocabulary_version: String,
}

/// RBF kernel exp(-gamma * ||a - b||^2) over sparse vectors.
pub fn rbf_kernel(a: &FeatureVector, b: &FeatureVector, gamma: f64) -> Result<f64, SvmError> {
    if a.vocabulary_version != b.vocabulary_version {
        return Err(SvmError::VersionMismatch {
            model: a.vocabulary_version.clone(),
            input: b.vocabulary_version.clone(),
        });
    }
    Ok(rbf_unchecked(a, b, gamma))
}

#[inline]
fn rbf_unchecked(a: &FeatureVector, b: &FeatureVector, gamma: f64) -> f64 {
    (-gamma * a.squared_distance(b)).exp()
}

fn label_sign(label: Label) -> f64 {
    match label {
        Label::ArgC => 1.0,
        Label::Other => -1.0,
    }
}

struct Problem<'a> {
    x: &'a [FeatureVector],
    y: Vec<f64>,
    c_per_point: Vec<f64>,
    gamma: f64,
    row_cache: HashMap<usize, Vec<f64>>,
    cache_order: Vec<usize>,
    cache_cap: usize,
}

impl<'a> Problem<'a> {
    fn kernel_row(&mut self, i: usize) -> &[f64] {
        if !self.row_cache.contains_key(&i) {
            let row: Vec<f64> = self
                .x
                .iter()
                .map(|xj| rbf_unchecked(&self.x[i], xj, self.gamma))
                .collect();
            if self.cache_order.len() >= self.cache_cap {
                let evict = self.cache_order.remove(0);
                self.row_cache.remove(&evict);
            }
            self.cache_order.push(i);
            self.row_cache.insert(i, row);
        } else {
            // refresh LRU position
            if let Some(pos) = self.cache_order.iter().position(|&k| k == i) {
                self.cache_order.remove(pos);
                self.cache_order.push(i);
            }
        }
        &self.row_cache[&i]
    }
}

/// Train by sequential minimal optimization. Deterministic for a fixed
/// `config.seed`. Per-class boxes follow the configured weight mode; bias
/// is recomputed from the final multipliers (mean over free support
/// vectors, else the midpoint of the KKT-feasible interval).
pub fn train(
    data: &[(FeatureVector, Label)],
    config: &SvmConfig,
) -> Result<SvmModel, SvmError> {
    config.validate()?;
    let n = data.len();
    if n < 2 {
        return Err(SvmError::TooFewInstances(n));
    }
    let n_pos = data.iter().filter(|(_, l)| *l == Label::ArgC).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(SvmError::SingleClass);
    }
    let version = data[0].0.vocabulary_version.clone();
    for (v, _) in data {
        if v.vocabulary_version != version {
            return Err(SvmError::VersionMismatch {
                model: version,
                input: v.vocabulary_version.clone(),
            });
        }
    }

    let gamma = if config.gamma > 0.0 {
        config.gamma
    } else {
        let max_dim = data
            .iter()
            .flat_map(|(v, _)| v.indices.iter().copied())
            .max()
            .map(|m| m as usize + 1)
            .unwrap_or(1);
        1.0 / max_dim as f64
    };

    let (c_pos, c_neg) = match config.class_weight_mode {
        ClassWeightMode::Uniform => (config.c, config.c),
        ClassWeightMode::InverseFrequency => (
            config.c * n as f64 / (2.0 * n_pos as f64),
            config.c * n as f64 / (2.0 * n_neg as f64),
        ),
    };

    let x: Vec<FeatureVector> = data.iter().map(|(v, _)| v.clone()).collect();
    let y: Vec<f64> = data.iter().map(|(_, l)| label_sign(*l)).collect();
    let c_per_point: Vec<f64> = y
        .iter()
        .map(|&yi| if yi > 0.0 { c_pos } else { c_neg })
        .collect();

    let mut prob = Problem {
        x: &x,
        y: y.clone(),
        c_per_point: c_per_point.clone(),
        gamma,
        row_cache: HashMap::new(),
        cache_order: Vec::new(),
        cache_cap: 512.max(2),
    };

    let mut alpha = vec![0.0f64; n];
    let mut bias = 0.0f64;
    // error cache: E_i = f(x_i) - y_i; starts at -y_i since alpha = 0
    let mut errors: Vec<f64> = y.iter().map(|yi| -yi).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let tol = config.tolerance;
    let hard_cap = 200 * config.max_passes;

    let mut quiet_sweeps = 0usize;
    let mut total_sweeps = 0usize;
    while quiet_sweeps < config.max_passes {
        if total_sweeps >= hard_cap {
            let model = assemble_model(&x, &y, &alpha, bias, config, gamma, &version, &c_per_point);
            return Err(SvmError::NonConvergence {
                passes: hard_cap,
                model: Box::new(model),
            });
        }
        total_sweeps += 1;
        let mut changed = 0usize;
        for i in 0..n {
            changed += examine_example(i, &mut prob, &mut alpha, &mut bias, &mut errors, tol, &mut rng);
        }
        if changed == 0 {
            quiet_sweeps += 1;
        } else {
            quiet_sweeps = 0;
        }
    }

    Ok(assemble_model(&x, &y, &alpha, bias, config, gamma, &version, &c_per_point))
}

#[allow(clippy::too_many_arguments)]
fn examine_example(
    i: usize,
    prob: &mut Problem<'_>,
    alpha: &mut [f64],
    bias: &mut f64,
    errors: &mut [f64],
    tol: f64,
    rng: &mut ChaCha8Rng,
) -> usize {
    let n = alpha.len();
    let yi = prob.y[i];
    let ei = errors[i];
    let ri = ei * yi;
    let ci = prob.c_per_point[i];

    let violates = (ri < -tol && alpha[i] < ci) || (ri > tol && alpha[i] > 0.0);
    if !violates {
        return 0;
    }

    // random second choice, then a full scan from a random offset
    let j0 = rng.random_range(0..n);
    if j0 != i && take_step(i, j0, prob, alpha, bias, errors) {
        return 1;
    }
    let offset = rng.random_range(0..n);
    for k in 0..n {
        let j = (offset + k) % n;
        if j == i || j == j0 {
            continue;
        }
        if take_step(i, j, prob, alpha, bias, errors) {
            return 1;
        }
    }
    0
}

fn take_step(
    i: usize,
    j: usize,
    prob: &mut Problem<'_>,
    alpha: &mut [f64],
    bias: &mut f64,
    errors: &mut [f64],
) -> bool {
    debug_assert_ne!(i, j);
    let (yi, yj) = (prob.y[i], prob.y[j]);
    let (ai_old, aj_old) = (alpha[i], alpha[j]);
    let (ci, cj) = (prob.c_per_point[i], prob.c_per_point[j]);
    let (ei, ej) = (errors[i], errors[j]);
    let s = yi * yj;

    // feasible segment for alpha_j under the box and equality constraints
    let (lo, hi) = if s < 0.0 {
        let gap = aj_old - ai_old;
        (gap.max(0.0), (ci + gap).min(cj))
    } else {
        let total = ai_old + aj_old;
        ((total - ci).max(0.0), total.min(cj))
    };
    if lo >= hi {
        return false;
    }

    let kii = 1.0; // RBF diagonal
    let kjj = 1.0;
    let kij = rbf_unchecked(&prob.x[i], &prob.x[j], prob.gamma);
    let eta = 2.0 * kij - kii - kjj;

    let mut aj_new = if eta < 0.0 {
        (aj_old - yj * (ei - ej) / eta).clamp(lo, hi)
    } else {
        // flat direction: evaluate the objective at both endpoints
        let f1 = yi * (ei + *bias) - ai_old * kii - s * aj_old * kij;
        let f2 = yj * (ej + *bias) - s * ai_old * kij - aj_old * kjj;
        let l1 = ai_old + s * (aj_old - lo);
        let h1 = ai_old + s * (aj_old - hi);
        let obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * kii + 0.5 * lo * lo * kjj + s * lo * l1 * kij;
        let obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * kii + 0.5 * hi * hi * kjj + s * hi * h1 * kij;
        if obj_lo < obj_hi - 1e-12 {
            lo
        } else if obj_hi < obj_lo - 1e-12 {
            hi
        } else {
            return false;
        }
    };
    if (aj_new - aj_old).abs() < 1e-12 * (aj_new + aj_old + 1e-12) {
        return false;
    }
    let mut ai_new = ai_old + s * (aj_old - aj_new);
    // numerical cleanup at the box edges
    if ai_new < 0.0 {
        aj_new += s * ai_new;
        ai_new = 0.0;
    } else if ai_new > ci {
        aj_new += s * (ai_new - ci);
        ai_new = ci;
    }

    let b_old = *bias;
    let b1 = b_old - ei - yi * (ai_new - ai_old) * kii - yj * (aj_new - aj_old) * kij;
    let b2 = b_old - ej - yi * (ai_new - ai_old) * kij - yj * (aj_new - aj_old) * kjj;
    let b_new = if ai_new > 0.0 && ai_new < ci {
        b1
    } else if aj_new > 0.0 && aj_new < cj {
        b2
    } else {
        (b1 + b2) / 2.0
    };

    let di = yi * (ai_new - ai_old);
    let dj = yj * (aj_new - aj_old);
    {
        let row_i = prob.kernel_row(i).to_vec();
        let row_j = prob.kernel_row(j);
        for k in 0..errors.len() {
            errors[k] += di * row_i[k] + dj * row_j[k] + (b_new - b_old);
        }
    }
    errors[i] = decision_raw_from(prob, alpha, i, j, ai_new, aj_new, b_new, i) - prob.y[i];
    errors[j] = decision_raw_from(prob, alpha, i, j, ai_new, aj_new, b_new, j) - prob.y[j];

    alpha[i] = ai_new;
    alpha[j] = aj_new;
    *bias = b_new;
    true
}

/// Exact decision value at training point `at`, with alphas i/j overridden
/// (used to refresh the error cache entries of the working pair).
#[allow(clippy::too_many_arguments)]
fn decision_raw_from(
    prob: &mut Problem<'_>,
    alpha: &[f64],
    i: usize,
    j: usize,
    ai: f64,
    aj: f64,
    b: f64,
    at: usize,
) -> f64 {
    let row = prob.kernel_row(at).to_vec();
    let mut acc = b;
    for k in 0..alpha.len() {
        let a = if k == i {
            ai
        } else if k == j {
            aj
        } else {
            alpha[k]
        };
        if a > 0.0 {
            acc += a * prob.y[k] * row[k];
        }
    }
    acc
}

#[allow(clippy::too_many_arguments)]
fn assemble_model(
    x: &[FeatureVector],
    y: &[f64],
    alpha: &[f64],
    _bias_running: f64,
    config: &SvmConfig,
    gamma: f64,
    version: &str,
    c_per_point: &[f64],
) -> SvmModel {
    let n = x.len();
    // raw margins g_i = sum_j alpha_j y_j K(x_j, x_i), bias excluded
    let mut margins = vec![0.0f64; n];
    for j in 0..n {
        if alpha[j] > 0.0 {
            for (i, margin) in margins.iter_mut().enumerate() {
                *margin += alpha[j] * y[j] * rbf_unchecked(&x[j], &x[i], gamma);
            }
        }
    }

    // canonical bias: average over free support vectors when any exist,
    // otherwise the midpoint of the interval the KKT conditions allow
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for i in 0..n {
        let eps = 1e-9 * c_per_point[i].max(1.0);
        if alpha[i] > eps && alpha[i] < c_per_point[i] - eps {
            free_sum += y[i] - margins[i];
            free_count += 1;
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for i in 0..n {
            let bound = y[i] - margins[i];
            let at_lower = alpha[i] <= 1e-12;
            // y f(x) >= 1 at the lower bound, <= 1 at the upper bound
            if y[i] > 0.0 {
                if at_lower {
                    hi = hi.min(bound);
                } else {
                    lo = lo.max(bound);
                }
            } else if at_lower {
                lo = lo.max(bound);
            } else {
                hi = hi.min(bound);
            }
        }
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => (lo + hi) / 2.0,
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => 0.0,
        }
    };

    let mut support_vectors = Vec::new();
    let mut dual_coeffs = Vec::new();
    for i in 0..n {
        if alpha[i] > 0.0 {
            support_vectors.push(x[i].clone());
            dual_coeffs.push(alpha[i] * y[i]);
        }
    }
    SvmModel {
        support_vectors,
        dual_coeffs,
        bias,
        config: SvmConfig {
            gamma,
            ..config.clone()
        },
        vocabulary_version: version.to_string(),
    }
}

/// Decision value: sum of dual_coeffs * k(sv, x) + bias. Positive sign
/// predicts arg_c; |value| is the labeling confidence.
pub fn decision(model: &SvmModel, x: &FeatureVector) -> Result<f64, SvmError> {
    if model.vocabulary_version != x.vocabulary_version {
        return Err(SvmError::VersionMismatch {
            model: model.vocabulary_version.clone(),
            input: x.vocabulary_version.clone(),
        });
    }
    let mut acc = model.bias;
    for (sv, coeff) in model.support_vectors.iter().zip(&model.dual_coeffs) {
        acc += coeff * rbf_unchecked(sv, x, model.config.gamma);
    }
    Ok(acc)
}

/// Label from the decision sign; an exact zero resolves to arg_c.
pub fn predict(model: &SvmModel, x: &FeatureVector) -> Result<Label, SvmError> {
    let d = decision(model, x)?;
    Ok(if d >= 0.0 { Label::ArgC } else { Label::Other })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    pub(crate) fn vec_of(pairs: &[(u32, f64)]) -> FeatureVector {
        let entries: BTreeMap<u32, f64> = pairs.iter().copied().collect();
        FeatureVector::new(entries, "test-v")
    }

    #[test]
    fn kernel_self_is_one() {
        let a = vec_of(&[(0, 1.5), (3, -2.0)]);
        assert_eq!(rbf_kernel(&a, &a, 0.7).unwrap(), 1.0);
    }

    #[test]
    fn kernel_closed_form() {
        let a = vec_of(&[(0, 1.0)]);
        let b = vec_of(&[(1, 1.0)]);
        let k = rbf_kernel(&a, &b, 0.5).unwrap();
        assert!((k - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn kernel_gamma_zero_limit() {
        let a = vec_of(&[(0, 3.0)]);
        let b = vec_of(&[(2, -4.0)]);
        assert_eq!(rbf_kernel(&a, &b, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn kernel_version_mismatch() {
        let a = vec_of(&[(0, 1.0)]);
        let mut b = vec_of(&[(0, 1.0)]);
        b.vocabulary_version = "other".to_string();
        assert!(rbf_kernel(&a, &b, 1.0).is_err());
    }

    fn two_point_config() -> SvmConfig {
        SvmConfig {
            c: 100.0,
            gamma: 0.5,
            class_weight_mode: ClassWeightMode::Uniform,
            tolerance: 1e-7,
            max_passes: 10,
            seed: 7,
        }
    }

    #[test]
    fn symmetric_two_point_boundary_at_origin() {
        let data = vec![
            (vec_of(&[(0, -1.0)]), Label::Other),
            (vec_of(&[(0, 1.0)]), Label::ArgC),
        ];
        let model = train(&data, &two_point_config()).unwrap();
        let origin = vec_of(&[]);
        let d = decision(&model, &origin).unwrap();
        assert!(d.abs() < 1e-6, "decision(0) = {d}");
        // endpoints classified correctly
        assert_eq!(predict(&model, &data[1].0).unwrap(), Label::ArgC);
        assert_eq!(predict(&model, &data[0].0).unwrap(), Label::Other);
    }

    #[test]
    fn xor_separable_with_rbf() {
        let data = vec![
            (vec_of(&[]), Label::Other),
            (vec_of(&[(0, 1.0), (1, 1.0)]), Label::Other),
            (vec_of(&[(0, 1.0)]), Label::ArgC),
            (vec_of(&[(1, 1.0)]), Label::ArgC),
        ];
        let config = SvmConfig {
            c: 1000.0,
            gamma: 1.0,
            class_weight_mode: ClassWeightMode::Uniform,
            tolerance: 1e-6,
            max_passes: 10,
            seed: 1,
        };
        let model = train(&data, &config).unwrap();
        for (v, l) in &data {
            assert_eq!(predict(&model, v).unwrap(), *l);
        }
    }

    #[test]
    fn duplicate_dataset_same_signs() {
        let base = vec![
            (vec_of(&[(0, -1.2)]), Label::Other),
            (vec_of(&[(0, -0.6)]), Label::Other),
            (vec_of(&[(0, 0.9)]), Label::ArgC),
        ];
        let mut doubled = base.clone();
        doubled.extend(base.iter().cloned());
        let config = SvmConfig {
            c: 5.0,
            gamma: 1.0,
            class_weight_mode: ClassWeightMode::Uniform,
            tolerance: 1e-6,
            max_passes: 10,
            seed: 3,
        };
        let m1 = train(&base, &config).unwrap();
        let m2 = train(&doubled, &config).unwrap();
        for (v, _) in &base {
            let d1 = decision(&m1, v).unwrap();
            let d2 = decision(&m2, v).unwrap();
            assert_eq!(d1.signum(), d2.signum(), "{d1} vs {d2}");
        }
    }

    #[test]
    fn dual_feasibility_and_kkt() {
        let data = vec![
            (vec_of(&[(0, -1.0), (1, 0.3)]), Label::Other),
            (vec_of(&[(0, -0.4)]), Label::Other),
            (vec_of(&[(0, 0.8), (1, -0.2)]), Label::ArgC),
            (vec_of(&[(1, 1.1)]), Label::ArgC),
            (vec_of(&[(0, 0.2), (1, 0.9)]), Label::ArgC),
        ];
        let config = SvmConfig {
            c: 2.0,
            gamma: 0.8,
            class_weight_mode: ClassWeightMode::InverseFrequency,
            tolerance: 1e-6,
            max_passes: 10,
            seed: 11,
        };
        let model = train(&data, &config).unwrap();
        let n = data.len() as f64;
        let n_pos = 3.0;
        let n_neg = 2.0;
        let c_pos = config.c * n / (2.0 * n_pos);
        let c_neg = config.c * n / (2.0 * n_neg);

        let mut alpha_dot_y = 0.0;
        for coeff in &model.dual_coeffs {
            alpha_dot_y += coeff;
            let bound = if *coeff > 0.0 { c_pos } else { c_neg };
            assert!(coeff.abs() <= bound + 1e-8, "|{coeff}| > {bound}");
        }
        assert!(alpha_dot_y.abs() < 1e-8, "sum alpha*y = {alpha_dot_y}");
    }

    #[test]
    fn train_rejects_single_class() {
        let data = vec![
            (vec_of(&[(0, 1.0)]), Label::ArgC),
            (vec_of(&[(0, 2.0)]), Label::ArgC),
        ];
        assert!(matches!(
            train(&data, &SvmConfig::default()),
            Err(SvmError::SingleClass)
        ));
    }

    #[test]
    fn decision_scaling_preserves_sign() {
        let data = vec![
            (vec_of(&[(0, -1.0)]), Label::Other),
            (vec_of(&[(0, 1.0)]), Label::ArgC),
            (vec_of(&[(0, 1.4)]), Label::ArgC),
        ];
        let model = train(&data, &two_point_config()).unwrap();
        let mut scaled = model.clone();
        for c in &mut scaled.dual_coeffs {
            *c *= 3.5;
        }
        scaled.bias *= 3.5;
        for (v, _) in &data {
            let d = decision(&model, v).unwrap();
            let ds = decision(&scaled, v).unwrap();
            assert_eq!(d.signum(), ds.signum());
        }
    }

    #[test]
    fn decision_is_pure() {
        let data = vec![
            (vec_of(&[(0, -1.0)]), Label::Other),
            (vec_of(&[(0, 1.0)]), Label::ArgC),
        ];
        let model = train(&data, &two_point_config()).unwrap();
        let probe = vec_of(&[(0, 0.3)]);
        let d1 = decision(&model, &probe).unwrap();
        let d2 = decision(&model, &probe).unwrap();
        assert_eq!(d1, d2);
    }

    #[test]
    fn training_deterministic_under_seed() {
        let data = vec![
            (vec_of(&[(0, -1.0), (2, 0.4)]), Label::Other),
            (vec_of(&[(1, -0.7)]), Label::Other),
            (vec_of(&[(0, 1.0)]), Label::ArgC),
            (vec_of(&[(2, 1.3)]), Label::ArgC),
        ];
        let config = SvmConfig {
            seed: 42,
            ..two_point_config()
        };
        let m1 = train(&data, &config).unwrap();
        let m2 = train(&data, &config).unwrap();
        assert_eq!(
            serde_json::to_string(&m1).unwrap(),
            serde_json::to_string(&m2).unwrap()
        );
    }

    #[test]
    fn model_json_roundtrip() {
        let data = vec![
            (vec_of(&[(0, -1.0)]), Label::Other),
            (vec_of(&[(0, 1.0)]), Label::ArgC),
        ];
        let model = train(&data, &two_point_config()).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        let back: SvmModel = serde_json::from_str(&json).unwrap();
        let probe = vec_of(&[(0, 0.25)]);
        assert_eq!(
            decision(&model, &probe).unwrap(),
            decision(&back, &probe).unwrap()
        );
    }
}
