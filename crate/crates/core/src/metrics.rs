//! Flakiness statistics over repeated executions.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor::ExecutionMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("domain error: {0}")]
    Domain(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlakinessStats {
    pub n_tests: usize,
    /// Mean per-execution failure fraction across tests, in percent.
    pub fr_percent: f64,
    /// Share of tests failing in at least one repetition, in percent.
    pub fr_ever_percent: f64,
    pub n_failed: usize,
    pub n_consistent: usize,
    pub n_unstable: usize,
    /// `#F_c / #F` in percent; zero when nothing failed.
    pub fr_c_percent: f64,
    pub fr_u_percent: f64,
}

/// Counts failures per test and derives FR, #F, #F_c and #F_u.
pub fn compute_stats(matrix: &ExecutionMatrix) -> Result<FlakinessStats, MetricsError> {
    if matrix.outcomes.is_empty() {
        return Err(MetricsError::Domain("execution matrix has no tests"));
    }
    if matrix.repetitions == 0 {
        return Err(MetricsError::Domain("execution matrix has no repetitions"));
    }
    let n = matrix.repetitions as f64;
    let mut fail_fraction_sum = 0.0;
    let (mut failed, mut consistent, mut unstable) = (0, 0, 0);
    for runs in matrix.outcomes.values() {
        if runs.len() != matrix.repetitions {
            return Err(MetricsError::Domain("outcome list length differs from repetition count"));
        }
        let fails = runs.iter().filter(|passed| !**passed).count();
        fail_fraction_sum += fails as f64 / n;
        if fails > 0 {
            failed += 1;
            if fails == runs.len() {
                consistent += 1;
            } else {
                unstable += 1;
            }
        }
    }
    let n_tests = matrix.outcomes.len();
    let pct = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 * 100.0 };
    Ok(FlakinessStats {
        n_tests,
        fr_percent: fail_fraction_sum / n_tests as f64 * 100.0,
        fr_ever_percent: pct(failed, n_tests),
        n_failed: failed,
        n_consistent: consistent,
        n_unstable: unstable,
        fr_c_percent: pct(consistent, failed),
        fr_u_percent: pct(unstable, failed),
    })
}

/// Vargha–Delaney Â₁₂: probability that a draw from `a` exceeds one from
/// `b`, counting ties as one half.
pub fn a12(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::Domain("a12 needs two non-empty samples"));
    }
    // Rank-sum form: sort b once, then count per element of a.
    let mut sorted = b.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut wins2 = 0u64; // twice the score, to stay in integers
    for &x in a {
        let below = sorted.partition_point(|&y| y < x);
        let not_above = sorted.partition_point(|&y| y <= x);
        wins2 += 2 * below as u64 + (not_above - below) as u64;
    }
    Ok(wins2 as f64 / (2 * a.len() * b.len()) as f64)
}

/// `(treated − baseline) / baseline × 100`; NaN for 0→0 and ±∞ from a zero baseline.
pub fn relative_improvement(baseline: f64, treated: f64) -> f64 {
    if baseline == 0.0 {
        if treated == 0.0 {
            f64::NAN
        } else if treated > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        (treated - baseline) / baseline * 100.0
    }
}

pub fn render_percent(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v == f64::INFINITY {
        "+Inf".into()
    } else if v == f64::NEG_INFINITY {
        "-Inf".into()
    } else {
        format!("{v:.1}")
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Sample standard deviation; zero for fewer than two values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Aggregate of several runs' statistics, in the layout of a results table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub runs: usize,
    pub n_tests: f64,
    pub fr_mean: f64,
    pub fr_sd: f64,
    pub n_failed: f64,
    pub n_consistent: f64,
    pub n_unstable: f64,
    pub fr_c_mean: f64,
    pub fr_u_mean: f64,
}

pub fn summarize(label: &str, stats: &[FlakinessStats]) -> GroupSummary {
    let col = |f: fn(&FlakinessStats) -> f64| stats.iter().map(f).collect::<Vec<_>>();
    let fr = col(|s| s.fr_percent);
    GroupSummary {
        label: label.to_string(),
        runs: stats.len(),
        n_tests: mean(&col(|s| s.n_tests as f64)),
        fr_mean: mean(&fr),
        fr_sd: sample_sd(&fr),
        n_failed: mean(&col(|s| s.n_failed as f64)),
        n_consistent: mean(&col(|s| s.n_consistent as f64)),
        n_unstable: mean(&col(|s| s.n_unstable as f64)),
        fr_c_mean: mean(&col(|s| s.fr_c_percent)),
        fr_u_mean: mean(&col(|s| s.fr_u_percent)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub metric: String,
    pub baseline_mean: f64,
    pub treated_mean: f64,
    pub a12: f64,
    /// Percent; may be NaN or infinite, see [`relative_improvement`].
    #[serde(serialize_with = "ser_percent", deserialize_with = "de_percent")]
    pub relative_percent: f64,
}

fn ser_percent<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&render_percent(*v))
    }
}

fn de_percent<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum P {
        N(f64),
        S(String),
    }
    Ok(match P::deserialize(d)? {
        P::N(v) => v,
        P::S(s) => match s.as_str() {
            "+Inf" => f64::INFINITY,
            "-Inf" => f64::NEG_INFINITY,
            _ => f64::NAN,
        },
    })
}

/// Compares treated runs against baseline runs on FR, FR_c, FR_u and #F.
pub fn compare_groups(
    baseline: &[FlakinessStats],
    treated: &[FlakinessStats],
) -> Result<Vec<MetricComparison>, MetricsError> {
    let metrics: [(&str, fn(&FlakinessStats) -> f64); 4] = [
        ("FR", |s| s.fr_percent),
        ("FR_c", |s| s.fr_c_percent),
        ("FR_u", |s| s.fr_u_percent),
        ("#F", |s| s.n_failed as f64),
    ];
    metrics
        .iter()
        .map(|(name, f)| {
            let b: Vec<f64> = baseline.iter().map(f).collect();
            let t: Vec<f64> = treated.iter().map(f).collect();
            Ok(MetricComparison {
                metric: name.to_string(),
                baseline_mean: mean(&b),
                treated_mean: mean(&t),
                a12: a12(&t, &b)?,
                relative_percent: relative_improvement(mean(&b), mean(&t)),
            })
        })
        .collect()
}

/// Aligned plain-text table: `#T`, `FR% (sd)`, `#F (#F_c, #F_u)`.
pub fn render_table(rows: &[GroupSummary]) -> String {
    let cells: Vec<[String; 4]> = rows
        .iter()
        .map(|r| {
            [
                r.label.clone(),
                format!("{:.1}", r.n_tests),
                format!("{:.1} ({:.1})", r.fr_mean, r.fr_sd),
                format!("{:.1} ({:.1}, {:.1})", r.n_failed, r.n_consistent, r.n_unstable),
            ]
        })
        .collect();
    let header = ["run", "#T", "FR% (sd)", "#F (#F_c, #F_u)"].map(String::from);
    let mut widths = header.clone().map(|h| h.len());
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    for row in std::iter::once(&header).chain(&cells) {
        let line = row
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect::<Vec<_>>()
            .join("  ");
        let _ = writeln!(out, "{}", line.trim_end());
    }
    out
}

pub fn render_comparison_table(rows: &[MetricComparison]) -> String {
    let mut out = String::from("metric  baseline   treated    A12    Rel%\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<6} {:>9.2} {:>9.2} {:>6.3} {:>7}",
            r.metric,
            r.baseline_mean,
            r.treated_mean,
            r.a12,
            render_percent(r.relative_percent)
        );
    }
    out
}
