//! End-to-end checks of the binary: pipeline wiring, determinism of the
//! written artifacts, and the exit-code contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn forge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iqa-forge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn expect_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn path_str(dir: &Path, rest: &str) -> String {
    dir.join(rest).display().to_string()
}

/// fixture -> distort -> ingest -> split -> train -> eval -> report.
fn run_pipeline(dir: &Path) {
    let p = |rest: &str| path_str(dir, rest);
    fs::create_dir_all(dir).unwrap();
    fs::write(
        dir.join("config.json"),
        r#"{"epochs": 2, "batch_size": 8, "input_size": 48, "seed": 55}"#,
    )
    .unwrap();

    expect_success(&forge(&[
        "fixture", "--out", &p("fx"), "--count", "6", "--size", "64", "--seed", "55",
    ]));
    expect_success(&forge(&[
        "distort",
        "--pristine",
        &p("fx/pristine_manifest.csv"),
        "--out",
        &p("expanded"),
    ]));
    expect_success(&forge(&[
        "ingest",
        "--manifest",
        &p("expanded/manifest.csv"),
        "--ratings",
        &p("fx/ratings.csv"),
        "--descriptor",
        &p("fx/descriptor.json"),
        "--out",
        &p("harmonized"),
    ]));
    expect_success(&forge(&[
        "split",
        "--manifest",
        &p("harmonized/harmonized.csv"),
        "--descriptor",
        &p("fx/descriptor.json"),
        "--repetitions",
        "2",
        "--seed",
        "55",
        "--out",
        &p("splits"),
    ]));
    expect_success(&forge(&[
        "train",
        "--manifest",
        &p("harmonized/harmonized.csv"),
        "--descriptor",
        &p("fx/descriptor.json"),
        "--plan",
        &p("splits/plan.csv"),
        "--config",
        &p("config.json"),
        "--out",
        &p("run"),
    ]));
    expect_success(&forge(&[
        "eval",
        "--checkpoint",
        &p("run/checkpoint.bin"),
        "--manifest",
        &p("harmonized/harmonized.csv"),
        "--descriptor",
        &p("fx/descriptor.json"),
        "--plan",
        &p("splits/plan.csv"),
        "--out",
        &p("eval"),
    ]));
    expect_success(&forge(&[
        "report",
        "--rows",
        &p("eval/rows.csv"),
        "--manifest",
        &p("harmonized/harmonized.csv"),
        "--out",
        &p("report"),
    ]));
}

#[test]
fn pipeline_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_pipeline(&a);
    run_pipeline(&b);

    for artifact in [
        "fx/ratings.csv",
        "splits/plan.csv",
        "run/checkpoint.bin",
        "run/events.jsonl",
        "eval/rows.csv",
        "report/aggregate.csv",
        "report/matrix.txt",
        "report/histograms.csv",
    ] {
        let left = fs::read(a.join(artifact)).unwrap();
        let right = fs::read(b.join(artifact)).unwrap();
        assert_eq!(left, right, "{artifact} differs between reruns");
    }

    // Manifests embed absolute paths, so compare them with the roots masked.
    for artifact in [
        "fx/pristine_manifest.csv",
        "expanded/manifest.csv",
        "harmonized/harmonized.csv",
    ] {
        let mask = |root: &Path| {
            fs::read_to_string(root.join(artifact))
                .unwrap()
                .replace(&root.display().to_string(), "ROOT")
        };
        assert_eq!(mask(&a), mask(&b), "{artifact} differs between reruns");
    }

    // The report actually aggregated the run: one labeled row.
    let rows = fs::read_to_string(a.join("eval/rows.csv")).unwrap();
    assert!(rows.lines().count() >= 2, "rows.csv: {rows}");
    assert!(rows.contains("all/rep0"));
}

#[test]
fn two_domain_matrix_report_has_three_by_two_cells() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let p = |rest: &str| path_str(dir, rest);
    fs::write(
        dir.join("config.json"),
        r#"{"epochs": 2, "batch_size": 8, "input_size": 48, "seed": 9}"#,
    )
    .unwrap();

    for (name, style) in [("texdom", "texture"), ("shadom", "shapes")] {
        expect_success(&forge(&[
            "fixture", "--out", &p(&format!("{name}/fx")), "--style", style, "--name", name,
            "--count", "4", "--size", "64", "--seed", "9",
        ]));
        expect_success(&forge(&[
            "distort",
            "--pristine",
            &p(&format!("{name}/fx/pristine_manifest.csv")),
            "--out",
            &p(&format!("{name}/expanded")),
        ]));
        expect_success(&forge(&[
            "ingest",
            "--manifest",
            &p(&format!("{name}/expanded/manifest.csv")),
            "--ratings",
            &p(&format!("{name}/fx/ratings.csv")),
            "--descriptor",
            &p(&format!("{name}/fx/descriptor.json")),
            "--out",
            &p(&format!("{name}/harmonized")),
        ]));
    }

    expect_success(&forge(&[
        "train",
        "--matrix",
        "--manifest",
        &p("texdom/harmonized/harmonized.csv"),
        "--descriptor",
        &p("texdom/fx/descriptor.json"),
        "--manifest",
        &p("shadom/harmonized/harmonized.csv"),
        "--descriptor",
        &p("shadom/fx/descriptor.json"),
        "--config",
        &p("config.json"),
        "--repetitions",
        "2",
        "--seed",
        "9",
        "--out",
        &p("matrix"),
    ]));
    expect_success(&forge(&[
        "report", "--rows", &p("matrix/rows.csv"), "--out", &p("report"),
    ]));

    // Three training corpora (each domain plus the merge) by two test domains.
    let aggregate = fs::read_to_string(dir.join("report/aggregate.csv")).unwrap();
    assert_eq!(aggregate.lines().count(), 7, "header + 6 cells: {aggregate}");
    for corpus in ["texdom", "shadom", "all"] {
        for dataset in ["texdom", "shadom"] {
            assert!(
                aggregate.lines().any(|l| l.starts_with(&format!("{corpus},{dataset},"))),
                "missing cell {corpus}->{dataset}: {aggregate}"
            );
        }
    }
    let matrix = fs::read_to_string(dir.join("report/matrix.txt")).unwrap();
    assert!(matrix.contains("all"), "matrix.txt: {matrix}");
}

#[test]
fn missing_input_exits_with_io_code() {
    let out = forge(&["distort", "--pristine", "does-not-exist.csv", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_ladder_is_a_validation_failure_naming_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let ladder = tmp.path().join("ladder.csv");
    fs::write(&ladder, "family,parameter\njpeg_compression,40\nwobble,2\n").unwrap();
    let manifest = tmp.path().join("pristine.csv");
    fs::write(
        &manifest,
        "id,subject_id,path,source,family,level,mos,native_min,native_max\n\
         a,s0,/nowhere/a.png,d,,,,,\n",
    )
    .unwrap();

    let out = forge(&[
        "distort",
        "--pristine",
        &manifest.display().to_string(),
        "--ladder",
        &ladder.display().to_string(),
        "--out",
        &tmp.path().join("out").display().to_string(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 3"), "stderr: {stderr}");
}

#[test]
fn duplicate_ids_fail_the_split() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = tmp.path().join("manifest.csv");
    fs::write(
        &manifest,
        "id,subject_id,path,source,family,level,mos,native_min,native_max\n\
         a,s0,/nowhere/a.png,d,,,5.0,1.0,10.0\n\
         a,s1,/nowhere/b.png,d,,,6.0,1.0,10.0\n",
    )
    .unwrap();
    let descriptor = tmp.path().join("descriptor.json");
    fs::write(
        &descriptor,
        r#"{"name":"d","native_range":[1.0,10.0],"distortion_type":"authentic","split_policy":"full"}"#,
    )
    .unwrap();

    let out = forge(&[
        "split",
        "--manifest",
        &manifest.display().to_string(),
        "--descriptor",
        &descriptor.display().to_string(),
        "--out",
        &tmp.path().join("out").display().to_string(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains('a'), "stderr: {stderr}");
}

#[test]
fn empty_rows_make_report_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let rows = tmp.path().join("rows.csv");
    fs::write(&rows, "model,train_corpus,test_dataset,repetition,plcc,srocc\n").unwrap();
    let out = forge(&[
        "report",
        "--rows",
        &rows.display().to_string(),
        "--out",
        &tmp.path().join("out").display().to_string(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty report"));
}
