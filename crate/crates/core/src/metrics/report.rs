//! Evaluation-result rows, their CSV form, and plain-text report rendering.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{aggregate, MetricError};

/// One evaluation outcome: a trained model scored on one test dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub model: String,
    pub train_corpus: String,
    pub test_dataset: String,
    pub repetition: u32,
    pub plcc: f64,
    pub srocc: f64,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("eval csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

pub fn write_eval_csv(writer: impl Write, rows: &[EvalRow]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_eval_csv(reader: impl Read) -> Result<Vec<EvalRow>, ReportError> {
    let mut r = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

/// Mean and spread over repetitions for one (train corpus, test dataset)
/// cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCell {
    pub plcc_mean: f64,
    pub plcc_std: f64,
    pub srocc_mean: f64,
    pub srocc_std: f64,
    pub repetitions: usize,
}

/// Evaluation rows grouped into a (train corpus) x (test dataset) matrix.
#[derive(Debug, Clone)]
pub struct EvalReport {
    cells: BTreeMap<(String, String), AggregateCell>,
    train_corpora: Vec<String>,
    test_datasets: Vec<String>,
}

impl EvalReport {
    /// Aggregates raw rows. Axis order is lexicographic.
    pub fn from_rows(rows: &[EvalRow]) -> Result<Self, ReportError> {
        let mut grouped: BTreeMap<(String, String), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for row in rows {
            let entry = grouped
                .entry((row.train_corpus.clone(), row.test_dataset.clone()))
                .or_default();
            entry.0.push(row.plcc);
            entry.1.push(row.srocc);
        }
        let mut cells = BTreeMap::new();
        let mut train_corpora = Vec::new();
        let mut test_datasets = Vec::new();
        for ((train, test), (plccs, sroccs)) in grouped {
            let (plcc_mean, plcc_std) = aggregate(&plccs)?;
            let (srocc_mean, srocc_std) = aggregate(&sroccs)?;
            if !train_corpora.contains(&train) {
                train_corpora.push(train.clone());
            }
            if !test_datasets.contains(&test) {
                test_datasets.push(test.clone());
            }
            cells.insert(
                (train, test),
                AggregateCell {
                    plcc_mean,
                    plcc_std,
                    srocc_mean,
                    srocc_std,
                    repetitions: plccs.len(),
                },
            );
        }
        test_datasets.sort();
        Ok(Self {
            cells,
            train_corpora,
            test_datasets,
        })
    }

    pub fn cell(&self, train_corpus: &str, test_dataset: &str) -> Option<&AggregateCell> {
        self.cells
            .get(&(train_corpus.to_string(), test_dataset.to_string()))
    }

    pub fn train_corpora(&self) -> &[String] {
        &self.train_corpora
    }

    pub fn test_datasets(&self) -> &[String] {
        &self.test_datasets
    }

    /// Two monospaced tables (PLCC then SROCC), train corpora as rows and
    /// test datasets as columns, cells formatted `mean+-std`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&render_matrix(self, Metric::Plcc));
        out.push('\n');
        out.push_str(&render_matrix(self, Metric::Srocc));
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Metric {
    Plcc,
    Srocc,
}

/// Renders one metric of the report as an aligned text table.
pub fn render_matrix(report: &EvalReport, metric: Metric) -> String {
    let title = match metric {
        Metric::Plcc => "PLCC",
        Metric::Srocc => "SROCC",
    };
    let cell_text = |train: &str, test: &str| -> String {
        match report.cell(train, test) {
            Some(c) => {
                let (mean, std) = match metric {
                    Metric::Plcc => (c.plcc_mean, c.plcc_std),
                    Metric::Srocc => (c.srocc_mean, c.srocc_std),
                };
                format!("{mean:+.3}+-{std:.3}")
            }
            None => "-".to_string(),
        }
    };

    let row_header_width = report
        .train_corpora()
        .iter()
        .map(|s| s.len())
        .chain([title.len()])
        .max()
        .unwrap_or(5);
    let col_widths: Vec<usize> = report
        .test_datasets()
        .iter()
        .map(|test| {
            report
                .train_corpora()
                .iter()
                .map(|train| cell_text(train, test).len())
                .chain([test.len()])
                .max()
                .unwrap_or(1)
        })
        .collect();

    let mut out = String::new();
    out.push_str(&format!("{title:<row_header_width$}"));
    for (test, w) in report.test_datasets().iter().zip(&col_widths) {
        out.push_str(&format!("  {test:>w$}"));
    }
    out.push('\n');
    for train in report.train_corpora() {
        out.push_str(&format!("{train:<row_header_width$}"));
        for (test, w) in report.test_datasets().iter().zip(&col_widths) {
            let text = cell_text(train, test);
            out.push_str(&format!("  {text:>w$}"));
        }
        out.push('\n');
    }
    out
}

/// Counts scores into 10 equal-width bins over [1, 10]. Values outside the
/// range land in the nearest edge bin.
pub fn mos_histogram(values: &[f64]) -> [usize; 10] {
    let mut bins = [0usize; 10];
    for &v in values {
        let bin = (((v - 1.0) / 0.9).floor() as i64).clamp(0, 9) as usize;
        bins[bin] += 1;
    }
    bins
}

/// Text bar chart of a score histogram, one bin per line, bars scaled to a
/// 40-character maximum.
pub fn render_histogram(title: &str, values: &[f64]) -> String {
    let bins = mos_histogram(values);
    let max = bins.iter().copied().max().unwrap_or(0).max(1);
    let mut out = format!("{title} (n={})\n", values.len());
    for (i, count) in bins.iter().enumerate() {
        let lo = 1.0 + 0.9 * i as f64;
        let hi = lo + 0.9;
        let width = (count * 40).div_ceil(max).min(40);
        let bar: String = std::iter::repeat('#').take(width).collect();
        out.push_str(&format!("[{lo:>4.1},{hi:>4.1}) {count:>6} {bar}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<EvalRow> {
        vec![
            EvalRow {
                model: "m0".into(),
                train_corpus: "alpha".into(),
                test_dataset: "t1".into(),
                repetition: 0,
                plcc: 0.8,
                srocc: 0.7,
            },
            EvalRow {
                model: "m1".into(),
                train_corpus: "alpha".into(),
                test_dataset: "t1".into(),
                repetition: 1,
                plcc: 0.6,
                srocc: 0.9,
            },
            EvalRow {
                model: "m0".into(),
                train_corpus: "beta".into(),
                test_dataset: "t2".into(),
                repetition: 0,
                plcc: 0.5,
                srocc: 0.4,
            },
        ]
    }

    #[test]
    fn csv_roundtrip_preserves_rows() {
        let rows = sample_rows();
        let mut buf = Vec::new();
        write_eval_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("model,train_corpus,test_dataset,repetition,plcc,srocc\n"));
        assert_eq!(read_eval_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn report_aggregates_repetitions_per_cell() {
        let report = EvalReport::from_rows(&sample_rows()).unwrap();
        let cell = report.cell("alpha", "t1").unwrap();
        assert_eq!(cell.repetitions, 2);
        assert!((cell.plcc_mean - 0.7).abs() < 1e-12);
        assert!((cell.plcc_std - 0.02f64.sqrt()).abs() < 1e-12);
        assert!(report.cell("beta", "t1").is_none());
    }

    #[test]
    fn rendered_matrix_contains_axes_and_cells() {
        let report = EvalReport::from_rows(&sample_rows()).unwrap();
        let text = report.render();
        assert!(text.contains("PLCC"));
        assert!(text.contains("SROCC"));
        assert!(text.contains("alpha"));
        assert!(text.contains("t2"));
        assert!(text.contains("+0.700+-0.141"));
        // missing cells render as placeholders
        assert!(text.contains('-'));
    }

    #[test]
    fn histogram_bins_cover_score_range() {
        let bins = mos_histogram(&[1.0, 1.89, 2.0, 5.5, 9.99, 10.0, 12.0, -3.0]);
        assert_eq!(bins[0], 3); // 1.0, 1.89, -3.0 (clamped)
        assert_eq!(bins[1], 1); // 2.0
        assert_eq!(bins[5], 1); // 5.5
        assert_eq!(bins[9], 3); // 9.99, 10.0, 12.0 (clamped)
        assert_eq!(bins.iter().sum::<usize>(), 8);
    }

    #[test]
    fn histogram_rendering_is_bounded() {
        let values: Vec<f64> = (0..1000).map(|i| 1.0 + 9.0 * (i as f64) / 999.0).collect();
        let text = render_histogram("scores", &values);
        assert_eq!(text.lines().count(), 11);
        for line in text.lines().skip(1) {
            assert!(line.len() <= 60, "line too wide: {line}");
        }
    }
}
