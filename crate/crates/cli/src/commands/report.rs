use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;

use iqa_core::datasets;
use iqa_core::metrics::{
    mos_histogram, read_eval_csv, render_histogram, render_matrix, EvalReport, EvalRow, Metric,
};

use crate::cli::ReportArgs;
use crate::failure::Failure;
use crate::io::{create_out_dir, io_failure, write_result};

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn aggregate_csv(report: &EvalReport) -> String {
    let mut out =
        String::from("train_corpus,test_dataset,repetitions,plcc_mean,plcc_std,srocc_mean,srocc_std\n");
    for train in report.train_corpora() {
        for test in report.test_datasets() {
            if let Some(cell) = report.cell(train, test) {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    csv_field(train),
                    csv_field(test),
                    cell.repetitions,
                    cell.plcc_mean,
                    cell.plcc_std,
                    cell.srocc_mean,
                    cell.srocc_std
                ));
            }
        }
    }
    out
}

pub fn run(args: ReportArgs) -> Result<String, Failure> {
    let mut rows: Vec<EvalRow> = Vec::new();
    for path in &args.rows {
        let file = File::open(path).map_err(|e| io_failure(path, e))?;
        rows.extend(read_eval_csv(BufReader::new(file))?);
    }
    if rows.is_empty() {
        return Err(Failure::Validation("empty report: no evaluation rows".into()));
    }

    let report = EvalReport::from_rows(&rows)?;
    create_out_dir(&args.out)?;

    let aggregate_path = args.out.join("aggregate.csv");
    fs::write(&aggregate_path, aggregate_csv(&report))
        .map_err(|e| io_failure(&aggregate_path, e))?;

    let matrix_text = format!(
        "{}\n{}",
        render_matrix(&report, Metric::Plcc),
        render_matrix(&report, Metric::Srocc)
    );
    let matrix_path = args.out.join("matrix.txt");
    fs::write(&matrix_path, &matrix_text).map_err(|e| io_failure(&matrix_path, e))?;

    let mut outputs: Vec<(&str, &std::path::Path)> = vec![
        ("aggregate", &aggregate_path),
        ("matrix", &matrix_path),
    ];

    // Histograms of the harmonized scores, one block per dataset.
    let histogram_path = args.out.join("histograms.csv");
    let rendered_path = args.out.join("histograms.txt");
    if !args.manifest.is_empty() {
        let mut by_source: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for path in &args.manifest {
            for record in datasets::read_manifest(path)? {
                if let Some(mos) = record.mos {
                    by_source.entry(record.source).or_default().push(mos);
                }
            }
        }
        let mut csv = String::from("dataset,bin_lo,bin_hi,count\n");
        let mut rendered = String::new();
        for (source, values) in &by_source {
            for (i, count) in mos_histogram(values).iter().enumerate() {
                let lo = 1.0 + 0.9 * i as f64;
                csv.push_str(&format!(
                    "{},{},{},{count}\n",
                    csv_field(source),
                    lo,
                    lo + 0.9
                ));
            }
            rendered.push_str(&render_histogram(source, values));
            rendered.push('\n');
        }
        fs::write(&histogram_path, csv).map_err(|e| io_failure(&histogram_path, e))?;
        fs::write(&rendered_path, rendered).map_err(|e| io_failure(&rendered_path, e))?;
        outputs.push(("histograms", &histogram_path));
        outputs.push(("histograms_rendered", &rendered_path));
    }

    write_result(&args.out, "report", &outputs)?;
    Ok(format!(
        "aggregated {} rows into {}\n\n{matrix_text}",
        rows.len(),
        args.out.display()
    ))
}
