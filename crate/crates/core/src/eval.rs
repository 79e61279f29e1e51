//! Annotation aggregation, agreement statistics, classification metrics,
//! and persuasion-distribution significance tests.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Label, Marker, MarkerInstance};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("vote row sums to {got}, expected {expected}")]
    BadVoteRow { got: u32, expected: u32 },
    #[error("vote matrix needs at least 2 rows (got {0})")]
    TooFewRows(usize),
    #[error("vote matrix rows must all sum to the same rater count")]
    RaggedMatrix,
    #[error("degenerate marginals: all votes in one category but observed agreement < 1")]
    DegenerateMarginals,
    #[error("predictions and gold have different lengths ({predictions} vs {gold})")]
    LengthMismatch { predictions: usize, gold: usize },
    #[error("chi-square table has a zero expected count at ({row},{col}); pool sparse rows or columns first")]
    ZeroExpected { row: usize, col: usize },
    #[error("chi-square table must be at least 2x2")]
    DegenerateTable,
}

/// Crowd votes per instance: counts for (arg_c, other) from a fixed number
/// of raters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteMatrix {
    pub rows: Vec<(u32, u32)>,
    pub raters: u32,
}

impl VoteMatrix {
    pub fn new(rows: Vec<(u32, u32)>, raters: u32) -> Result<Self, EvalError> {
        for &(a, b) in &rows {
            if a + b != raters {
                return Err(EvalError::BadVoteRow {
                    got: a + b,
                    expected: raters,
                });
            }
        }
        Ok(VoteMatrix { rows, raters })
    }

    fn as_table(&self) -> Vec<Vec<u32>> {
        self.rows.iter().map(|&(a, b)| vec![a, b]).collect()
    }
}

/// Majority vote over five raters. A 3-2 split defers to the expert label
/// when one is supplied; the margin is always computed from the raw votes.
pub fn majority_vote(
    row: (u32, u32),
    expert: Option<Label>,
) -> Result<(Label, u32), EvalError> {
    let (arg_c, other) = row;
    if arg_c + other != 5 {
        return Err(EvalError::BadVoteRow {
            got: arg_c + other,
            expected: 5,
        });
    }
    let margin = arg_c.abs_diff(other);
    let winner = if arg_c > other { Label::ArgC } else { Label::Other };
    let label = match (margin, expert) {
        (1, Some(e)) => e,
        _ => winner,
    };
    Ok((label, margin))
}

/// Fleiss kappa over an items-by-categories count table with a fixed number
/// of raters per item. Returns exactly 1.0 under perfect agreement.
pub fn fleiss_kappa(table: &[Vec<u32>]) -> Result<f64, EvalError> {
    if table.len() < 2 {
        return Err(EvalError::TooFewRows(table.len()));
    }
    let categories = table[0].len();
    let raters: u32 = table[0].iter().sum();
    for row in table {
        if row.len() != categories || row.iter().sum::<u32>() != raters {
            return Err(EvalError::RaggedMatrix);
        }
    }
    let n_items = table.len() as f64;
    let n = raters as f64;

    // per-item agreement
    let p_bar: f64 = table
        .iter()
        .map(|row| {
            let s: f64 = row.iter().map(|&c| (c as f64) * (c as f64 - 1.0)).sum();
            s / (n * (n - 1.0))
        })
        .sum::<f64>()
        / n_items;

    // category proportions
    let p_e: f64 = (0..categories)
        .map(|j| {
            let col: f64 = table.iter().map(|row| row[j] as f64).sum();
            let p = col / (n_items * n);
            p * p
        })
        .sum();

    if p_bar >= 1.0 {
        return Ok(1.0);
    }
    if p_e >= 1.0 {
        return Err(EvalError::DegenerateMarginals);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

pub fn fleiss_kappa_votes(matrix: &VoteMatrix) -> Result<f64, EvalError> {
    fleiss_kappa(&matrix.as_table())
}

/// Precision/recall/F1 for the positive class plus the 2x2 confusion table
/// `[[tp, fp], [fn, tn]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: [[u64; 2]; 2],
}

/// Standard P/R/F1 for the positive class. Zero-denominator conventions:
/// P = 0 with no positive predictions, R = 0 with no positive gold,
/// F1 = 0 when P + R = 0.
pub fn prf(predictions: &[Label], gold: &[Label], positive: Label) -> Result<EvalReport, EvalError> {
    if predictions.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            gold: gold.len(),
        });
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
    for (&p, &g) in predictions.iter().zip(gold) {
        match ((p == positive), (g == positive)) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(EvalReport {
        precision,
        recall,
        f1,
        confusion: [[tp, fp], [fn_, tn]],
    })
}

/// Pearson chi-square test of independence on an r-by-k count table,
/// no continuity correction. Returns the statistic and the p-value from the
/// chi-square survival function with (r-1)(k-1) degrees of freedom.
pub fn chi2_independence(table: &[Vec<u64>]) -> Result<(f64, f64), EvalError> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    if rows < 2 || cols < 2 || table.iter().any(|r| r.len() != cols) {
        return Err(EvalError::DegenerateTable);
    }
    let row_sums: Vec<f64> = table
        .iter()
        .map(|r| r.iter().map(|&c| c as f64).sum())
        .collect();
    let col_sums: Vec<f64> = (0..cols)
        .map(|j| table.iter().map(|r| r[j] as f64).sum())
        .collect();
    let total: f64 = row_sums.iter().sum();

    let mut stat = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            let expected = row_sums[i] * col_sums[j] / total;
            if !(expected > 0.0) {
                return Err(EvalError::ZeroExpected { row: i, col: j });
            }
            let d = obs as f64 - expected;
            stat += d * d / expected;
        }
    }
    let df = ((rows - 1) * (cols - 1)) as f64;
    Ok((stat, chi2_sf(stat, df)))
}

/// Chi-square survival function: Q(df/2, x/2) via the regularized upper
/// incomplete gamma function.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    upper_regularized_gamma(df / 2.0, x / 2.0)
}

// --- regularized incomplete gamma (series + continued fraction) ---

fn ln_gamma(z: f64) -> f64 {
    // Lanczos approximation, g = 5, n = 6
    const COEF: [f64; 6] = [
        76.180_091_729_471_46,
        -86.505_320_329_416_77,
        24.014_098_240_830_91,
        -1.231_739_572_450_155,
        0.120_865_097_386_617_9e-2,
        -0.539_523_938_495_3e-5,
    ];
    let x = z;
    let mut y = z;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000_000_000_190_015;
    for c in COEF {
        y += 1.0;
        ser += c / y;
    }
    -tmp + (2.506_628_274_631_000_5 * ser / x).ln()
}

const GAMMA_EPS: f64 = 1e-15;
const GAMMA_MAX_ITER: usize = 500;

fn lower_gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn upper_gamma_cf(a: f64, x: f64) -> f64 {
    // Lentz's algorithm for the continued fraction
    const FPMIN: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    h * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Q(a, x) = 1 - P(a, x), the regularized upper incomplete gamma function.
pub fn upper_regularized_gamma(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "gamma arguments out of domain");
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        (1.0 - lower_gamma_series(a, x)).clamp(0.0, 1.0)
    } else {
        upper_gamma_cf(a, x).clamp(0.0, 1.0)
    }
}

/// Per-marker distribution of arg_c instances across persuasion outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    /// Label source this report was computed from ("gold" or "predicted").
    pub source: String,
    /// Rows in fixed marker order: (marker, delta count, no-delta count)
    /// of arg_c-labeled instances.
    pub per_marker: Vec<(String, u64, u64)>,
    pub total_delta: u64,
    pub total_no_delta: u64,
    /// Totals of `other`-labeled instances, used for the significance test.
    pub other_delta: u64,
    pub other_no_delta: u64,
    /// Pearson chi-square of the 2x2 (label x outcome) totals table; absent
    /// when the table has an empty row or column.
    pub chi2_stat: Option<f64>,
    pub p_value: Option<f64>,
    pub significant_at_05: Option<bool>,
    pub notice: Option<String>,
    /// Optional per-marker 2x2 tests (marker, stat, p).
    pub per_marker_chi2: Option<Vec<(String, f64, f64)>>,
}

/// Source of labels for a distribution report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSource {
    Gold,
    Predicted,
}

impl LabelSource {
    fn as_str(&self) -> &'static str {
        match self {
            LabelSource::Gold => "gold",
            LabelSource::Predicted => "predicted",
        }
    }
}

/// Build the per-marker outcome distribution of arg_c labels, with a
/// chi-square test on the pooled 2x2 totals (label x outcome). Set
/// `per_marker_tests` to add one test per marker row.
pub fn distribution_report(
    instances: &[(&MarkerInstance, Label)],
    source: LabelSource,
    per_marker_tests: bool,
) -> Result<DistributionReport, EvalError> {
    let mut marker_counts: BTreeMap<Marker, (u64, u64)> = BTreeMap::new();
    for m in Marker::ALL {
        marker_counts.insert(m, (0, 0));
    }
    let (mut other_delta, mut other_no_delta) = (0u64, 0u64);
    for (inst, label) in instances {
        match label {
            Label::ArgC => {
                let slot = marker_counts.entry(inst.marker).or_insert((0, 0));
                if inst.delta_awarded {
                    slot.0 += 1;
                } else {
                    slot.1 += 1;
                }
            }
            Label::Other => {
                if inst.delta_awarded {
                    other_delta += 1;
                } else {
                    other_no_delta += 1;
                }
            }
        }
    }

    let per_marker: Vec<(String, u64, u64)> = Marker::ALL
        .iter()
        .map(|m| {
            let (d, nd) = marker_counts[m];
            (m.to_string(), d, nd)
        })
        .collect();
    let total_delta: u64 = per_marker.iter().map(|r| r.1).sum();
    let total_no_delta: u64 = per_marker.iter().map(|r| r.2).sum();

    let totals_table = vec![
        vec![total_delta, total_no_delta],
        vec![other_delta, other_no_delta],
    ];
    let degenerate = total_delta + total_no_delta == 0
        || other_delta + other_no_delta == 0
        || total_delta + other_delta == 0
        || total_no_delta + other_no_delta == 0;

    let (chi2_stat, p_value, significant, notice) = if degenerate {
        (
            None,
            None,
            None,
            Some("chi-square skipped: totals table has an empty row or column".to_string()),
        )
    } else {
        let (stat, p) = chi2_independence(&totals_table)?;
        (Some(stat), Some(p), Some(p < 0.05), None)
    };

    let per_marker_chi2 = if per_marker_tests {
        let mut tests = Vec::new();
        for (marker, d, nd) in &per_marker {
            let table = vec![vec![*d, *nd], vec![other_delta, other_no_delta]];
            if d + nd > 0 && other_delta + other_no_delta > 0 && d + other_delta > 0 && nd + other_no_delta > 0 {
                if let Ok((s, p)) = chi2_independence(&table) {
                    tests.push((marker.clone(), s, p));
                }
            }
        }
        Some(tests)
    } else {
        None
    };

    Ok(DistributionReport {
        source: source.as_str().to_string(),
        per_marker,
        total_delta,
        total_no_delta,
        other_delta,
        other_no_delta,
        chi2_stat,
        p_value,
        significant_at_05: significant,
        notice,
        per_marker_chi2,
    })
}
