//! Regression-quality metrics: mean squared error and the two rank
//! correlations used to score predicted-vs-subjective quality.
//!
//! All functions take `f64` slices, validate finiteness up front, and share
//! one [`MetricError`] type. SROCC uses fractional (average) ranks, so tied
//! observations are handled exactly; the closed-form rank-difference formula
//! is used when both inputs are tie-free, and the two paths agree on that
//! domain.

mod report;

pub use report::{
    mos_histogram, read_eval_csv, render_histogram, render_matrix, write_eval_csv, AggregateCell,
    EvalReport, EvalRow, Metric, ReportError,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("input lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("metric undefined on empty input")]
    EmptyInput,
    #[error("non-finite value at index {index}")]
    NonFiniteValue { index: usize },
    #[error("correlation undefined for a constant input vector")]
    ConstantInput,
}

fn check_finite(values: &[f64]) -> Result<(), MetricError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(MetricError::NonFiniteValue { index }),
        None => Ok(()),
    }
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<(), MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    check_finite(a)?;
    check_finite(b)
}

/// Mean squared error `(1/n) * sum((a_i - b_i)^2)`.
pub fn mse(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    check_pair(a, b)?;
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    Ok(sum / a.len() as f64)
}

/// Pearson linear correlation coefficient.
pub fn plcc(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    check_pair(a, b)?;
    pearson(a, b)
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(MetricError::ConstantInput);
    }
    Ok(cov / (var_a.sqrt() * var_b.sqrt()))
}

/// Spearman rank-order correlation coefficient.
///
/// Ranks are fractional: tied values share the mean of the ranks they span.
/// Without ties this reduces to `1 - 6 * sum(d_i^2) / (n * (n^2 - 1))` where
/// `d_i` is the per-element rank difference.
pub fn srocc(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    check_pair(a, b)?;
    if a.len() == 1 {
        return Err(MetricError::ConstantInput);
    }
    let (ranks_a, ties_a) = fractional_ranks(a);
    let (ranks_b, ties_b) = fractional_ranks(b);
    if !ties_a && !ties_b {
        let n = a.len() as f64;
        let d2: f64 = ranks_a
            .iter()
            .zip(&ranks_b)
            .map(|(x, y)| (x - y).powi(2))
            .sum();
        Ok(1.0 - 6.0 * d2 / (n * (n * n - 1.0)))
    } else {
        pearson(&ranks_a, &ranks_b)
    }
}

/// 1-based fractional ranks and whether any ties were present.
fn fractional_ranks(values: &[f64]) -> (Vec<f64>, bool) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite"));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = false;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // ranks start..end are 1-based start+1 ..= end; ties get their mean
        let rank = (start + 1 + end) as f64 / 2.0;
        if end - start > 1 {
            ties = true;
        }
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    (ranks, ties)
}

/// Mean and sample standard deviation (n - 1 denominator; 0 for a single
/// value).
pub fn aggregate(values: &[f64]) -> Result<(f64, f64), MetricError> {
    if values.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    check_finite(values)?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    Ok((mean, (ss / (n - 1.0)).sqrt()))
}
