use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use iterfit::{BaseModel, InputTransform, SeriesModel, Term};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn iterfit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iterfit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn reference_series() -> SeriesModel {
    SeriesModel::new(
        BaseModel::Constant(237.23),
        InputTransform::Identity,
        vec![
            Term::sine(11.02, 1.00),
            Term::sine(-8.33, 1.14),
            Term::sine(4.58, 0.88),
            Term::sine(-2.20, 1.31),
            Term::sine(-1.81, 1.61),
            Term::sine(1.53, 1.07),
        ],
    )
}

fn write_model(dir: &TempDir) -> PathBuf {
    let p = path(dir, "reference.json");
    std::fs::write(&p, reference_series().serialize()).unwrap();
    p
}

#[test]
fn predict_rounds_to_integer_part() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(&dir);
    let out = iterfit(&["predict", "--model", s(&model), "--x", "0", "--round"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "0,237\n");
}

#[test]
fn predict_on_empty_input_prints_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(&dir);
    let input = path(&dir, "empty.csv");
    std::fs::write(&input, "").unwrap();
    let out = iterfit(&["predict", "--model", s(&model), "--input", s(&input)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
}

#[test]
fn predict_emits_one_row_per_input() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(&dir);
    let input = path(&dir, "xs.csv");
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let xs: Vec<f64> = (0..1000).map(|_| rng.random_range(-100.0..100.0)).collect();
    let text: String = xs.iter().map(|x| format!("{x:?}\n")).collect();
    std::fs::write(&input, text).unwrap();
    let out_file = path(&dir, "pred.csv");
    let out = iterfit(&[
        "predict",
        "--model",
        s(&model),
        "--input",
        s(&input),
        "--out",
        s(&out_file),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let pred = std::fs::read_to_string(&out_file).unwrap();
    let m = reference_series();
    let lines: Vec<&str> = pred.lines().collect();
    assert_eq!(lines.len(), 1000);
    for (line, x) in lines.iter().zip(&xs) {
        let (px, py) = line.split_once(',').unwrap();
        assert_eq!(px.parse::<f64>().unwrap(), *x);
        assert_eq!(py.parse::<f64>().unwrap(), m.predict(*x));
    }
}

fn write_sine_data(dir: &TempDir) -> PathBuf {
    let input = path(dir, "data.csv");
    let mut text = String::from("x,y,w\n");
    for i in 0..50 {
        let x = i as f64 * 0.3;
        let w = 1.0 + (i % 3) as f64;
        text.push_str(&format!("{x},{},{w}\n", 2.0 + (1.7 * x).sin() + 0.3 * (0.4 * x).sin()));
    }
    std::fs::write(&input, text).unwrap();
    input
}

#[test]
fn fit_then_plotdata_is_consistent_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_sine_data(&dir);
    let (model, report) = (path(&dir, "m.json"), path(&dir, "r.json"));
    let out = iterfit(&[
        "fit",
        "--input",
        s(&input),
        "--header",
        "--out",
        s(&model),
        "--report",
        s(&report),
        "--max-iters",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("stop: max_iterations"), "{stdout}");

    let report_json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let records = report_json["records"].as_array().unwrap();
    assert_eq!(records.len(), 5);
    // the printed trajectory carries the exact report values
    for r in records {
        let ss = r["train_ss"].as_f64().unwrap();
        assert!(stdout.contains(&format!("{ss:?}")), "{ss:?} missing from\n{stdout}");
    }
    let final_ss = records.last().unwrap()["train_ss"].as_f64().unwrap();

    let plot = iterfit(&["plotdata", "--model", s(&model), "--input", s(&input), "--header"]);
    assert_eq!(plot.status.code(), Some(0));
    let text = String::from_utf8(plot.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,actual,fitted,residual"));
    let weights: Vec<f64> = std::fs::read_to_string(&input)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    let mut ss = 0.0;
    let mut rows = 0;
    for (line, w) in lines.zip(&weights) {
        let v: Vec<f64> = line.split(',').map(|t| t.parse().unwrap()).collect();
        assert_eq!(v[3], v[1] - v[2]);
        ss += w * v[3] * v[3];
        rows += 1;
    }
    assert_eq!(rows, 50);
    assert!((ss - final_ss).abs() <= 1e-9 * final_ss.max(1.0), "{ss} vs {final_ss}");
}

#[test]
fn constant_data_gives_empty_series() {
    let dir = tempfile::tempdir().unwrap();
    let input = path(&dir, "flat.csv");
    std::fs::write(&input, "1,3.5\n2,3.5\n4,3.5\n").unwrap();
    let (model, report) = (path(&dir, "m.json"), path(&dir, "r.json"));
    let out = iterfit(&["fit", "--input", s(&input), "--out", s(&model), "--report", s(&report)]);
    assert_eq!(out.status.code(), Some(0));
    let m = SeriesModel::deserialize(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert!(m.terms.is_empty());
    assert_eq!(m.base, BaseModel::Constant(3.5));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(iterfit(&[]).status.code(), Some(1));
    assert_eq!(iterfit(&["fit"]).status.code(), Some(1));
    assert_eq!(iterfit(&["--help"]).status.code(), Some(0));

    let (model, report) = (path(&dir, "m.json"), path(&dir, "r.json"));
    let missing = path(&dir, "nope.csv");
    let out = iterfit(&[
        "fit",
        "--input",
        s(&missing),
        "--out",
        s(&model),
        "--report",
        s(&report),
    ]);
    assert_eq!(out.status.code(), Some(2));

    let bad = path(&dir, "bad.csv");
    std::fs::write(&bad, "1,2\n3,x\n").unwrap();
    let out = iterfit(&["fit", "--input", s(&bad), "--out", s(&model), "--report", s(&report)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());

    let input = write_sine_data(&dir);
    let out = iterfit(&[
        "fit",
        "--input",
        s(&input),
        "--header",
        "--out",
        s(&model),
        "--report",
        s(&report),
        "--beta-min",
        "2",
        "--beta-max",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));

    // a large minimum decrease stalls the fit: outputs are still written
    let _ = std::fs::remove_file(&model);
    let out = iterfit(&[
        "fit",
        "--input",
        s(&input),
        "--header",
        "--out",
        s(&model),
        "--report",
        s(&report),
        "--min-decrease",
        "0.99",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(model.exists());

    let tampered = path(&dir, "v2.json");
    std::fs::write(
        &tampered,
        reference_series().serialize().replace("\"version\": 1", "\"version\": 9"),
    )
    .unwrap();
    let out = iterfit(&["predict", "--model", s(&tampered), "--x", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn demo_writes_one_plot_row_per_century() {
    let dir = tempfile::tempdir().unwrap();
    let out = iterfit(&["demo-eclipse", "--out-dir", s(dir.path()), "--holdout"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("group A: 18th BC=253, 12th BC=250,"), "{stdout}");
    assert!(stdout.contains("18th AD=251 (range 3)"), "{stdout}");
    assert!(stdout.contains("21st AD=224 (range 5)"), "{stdout}");
    assert!(stdout.contains("holdout SS"), "{stdout}");

    let plot = std::fs::read_to_string(dir.path().join("eclipse_plot.csv")).unwrap();
    let mut lines = plot.lines();
    assert_eq!(lines.next(), Some("n,actual,fitted"));
    let centuries: Vec<i32> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(centuries, (-19..=30).collect::<Vec<_>>());

    let m = SeriesModel::deserialize(&std::fs::read_to_string(dir.path().join("eclipse_model.json")).unwrap()).unwrap();
    assert_eq!(m.terms.len(), 6);
    assert!(dir.path().join("eclipse_report.json").exists());
}

#[test]
fn collapse_duplicates_flag_merges_rows() {
    let dir = tempfile::tempdir().unwrap();
    let input = path(&dir, "dup.csv");
    std::fs::write(&input, "0,1\n1,0\n1,4\n2,2\n3,-1\n").unwrap();
    let (model, report) = (path(&dir, "m.json"), path(&dir, "r.json"));
    let out = iterfit(&[
        "fit",
        "--input",
        s(&input),
        "--out",
        s(&model),
        "--report",
        s(&report),
        "--collapse-duplicates",
        "--max-iters",
        "1",
    ]);
    assert!(matches!(out.status.code(), Some(0) | Some(3)));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    // collapsed data: (0,1) (1,2 w=2) (2,2) (3,-1); mean 6/5
    let mean = 6.0 / 5.0;
    let expected =
        (1.0f64 - mean).powi(2) + 2.0 * (2.0f64 - mean).powi(2) + (2.0f64 - mean).powi(2) + (-1.0f64 - mean).powi(2);
    assert!((r["initial_ss"].as_f64().unwrap() - expected).abs() < 1e-12);
}
