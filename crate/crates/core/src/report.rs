//! Plain-text and TSV renderers for the census, sweep, evaluation, and
//! distribution tables.

use crate::corpus::MarkerCensusRow;
use crate::eval::DistributionReport;
use crate::selftrain::GridRow;

/// Render rows as a space-aligned table. The first row is the header.
pub fn aligned_table(rows: &[Vec<String>]) -> String {
    if rows.is_empty() {
        return String::new();
    }
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0usize; cols];
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for (ri, row) in rows.iter().enumerate() {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            let pad = widths[i].saturating_sub(cell.chars().count());
            if i == 0 {
                line.push_str(cell);
                line.push_str(&" ".repeat(pad));
            } else {
                line.push_str(&" ".repeat(pad));
                line.push_str(cell);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
        if ri == 0 {
            let total: usize = widths.iter().sum::<usize>() + 2 * (cols - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out
}

/// Rows as tab-separated values with a header line; `#`-prefixed preamble
/// lines carry provenance.
pub fn tsv_table(preamble: &[String], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for line in preamble {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    for row in rows {
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

fn fmt_f1(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

/// Census table shaped as marker / delta / no-delta counts.
pub fn census_rows(census: &[MarkerCensusRow]) -> Vec<Vec<String>> {
    let mut rows = vec![vec![
        "Marker".to_string(),
        "delta".to_string(),
        "no-delta".to_string(),
    ]];
    for r in census {
        rows.push(vec![
            r.marker.clone(),
            r.count_delta.to_string(),
            r.count_no_delta.to_string(),
        ]);
    }
    rows
}

/// Sweep table: pool size, G_c, optimal training sizes, dev P/R/F1.
pub fn grid_rows(grid: &[GridRow]) -> Vec<Vec<String>> {
    let mut rows = vec![vec![
        "Pool size".to_string(),
        "G_c".to_string(),
        "arg_c".to_string(),
        "other".to_string(),
        "P".to_string(),
        "R".to_string(),
        "F1".to_string(),
    ]];
    for r in grid {
        let f1 = if r.best {
            format!("{}*", fmt_f1(r.f1))
        } else {
            fmt_f1(r.f1)
        };
        rows.push(vec![
            r.pool_size.to_string(),
            r.g_c.to_string(),
            r.best_train_arg_c.to_string(),
            r.best_train_other.to_string(),
            fmt_f1(r.precision),
            fmt_f1(r.recall),
            f1,
        ]);
    }
    rows
}

/// Evaluation table: one row per model, P/R/F1 per split.
pub struct EvalRow {
    pub model: String,
    pub train_size: Option<(usize, usize)>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn eval_rows(split: &str, rows: &[EvalRow]) -> Vec<Vec<String>> {
    let mut out = vec![vec![
        "Model".to_string(),
        "Training size".to_string(),
        format!("{split} P"),
        format!("{split} R"),
        format!("{split} F1"),
    ]];
    for r in rows {
        out.push(vec![
            r.model.clone(),
            r.train_size
                .map(|(a, o)| format!("({a};{o})"))
                .unwrap_or_else(|| "-".to_string()),
            fmt_f1(r.precision),
            fmt_f1(r.recall),
            fmt_f1(r.f1),
        ]);
    }
    out
}

/// Distribution table: per-marker arg_c counts split by outcome, totals,
/// and the significance banner.
pub fn distribution_text(report: &DistributionReport) -> String {
    let mut rows = vec![vec![
        "Marker".to_string(),
        "delta".to_string(),
        "no-delta".to_string(),
    ]];
    for (marker, d, nd) in &report.per_marker {
        rows.push(vec![marker.clone(), d.to_string(), nd.to_string()]);
    }
    rows.push(vec![
        "total".to_string(),
        report.total_delta.to_string(),
        report.total_no_delta.to_string(),
    ]);
    let mut out = aligned_table(&rows);
    out.push('\n');
    match (report.chi2_stat, report.p_value, report.significant_at_05) {
        (Some(stat), Some(p), Some(sig)) => {
            out.push_str(&format!(
                "chi-square (label x outcome totals): stat = {stat:.4}, p = {p:.4} -> {} at p < 0.05\n",
                if sig { "significant" } else { "not significant" }
            ));
        }
        _ => {
            if let Some(notice) = &report.notice {
                out.push_str(notice);
                out.push('\n');
            }
        }
    }
    if let Some(tests) = &report.per_marker_chi2 {
        for (marker, stat, p) in tests {
            out.push_str(&format!("  {marker}: stat = {stat:.4}, p = {p:.4}\n"));
        }
    }
    out
}
