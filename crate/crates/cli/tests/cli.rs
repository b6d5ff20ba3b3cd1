mod common;

use std::fs;

use common::{gkdr, report, write_three_class_csv};
use gkdr_cli::io::read_matrix;
use serde_json::Value;

fn schema_check(value: &Value) {
    let schema: Value = serde_json::from_str(gkdr_cli::report::SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(value)
        .map(|e| format!("{e} at {}", e.instance_path))
        .collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

fn s(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fit_synthetic_writes_projection_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = gkdr(&[
        "fit",
        "--synth",
        "A",
        "--n",
        "200",
        "--d",
        "1",
        "--method",
        "gkdr",
        "--seed",
        "7",
        "--out-dir",
        s(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let b = read_matrix(&dir.path().join("projection.csv")).unwrap();
    assert_eq!(b.shape(), (10, 1));
    let r = report(dir.path());
    schema_check(&r);
    assert_eq!(r["command"], "fit");
    assert_eq!(r["seed"], 7);
    assert!(r["metrics"]["subspace_error"].as_f64().unwrap() < 0.5);

    // Same flags, same bytes.
    let first = fs::read(dir.path().join("projection.csv")).unwrap();
    let again = tempfile::tempdir().unwrap();
    let out = gkdr(&[
        "fit",
        "--synth",
        "A",
        "--n",
        "200",
        "--d",
        "1",
        "--method",
        "gkdr",
        "--seed",
        "7",
        "--out-dir",
        s(again.path()),
    ]);
    assert!(out.status.success());
    assert_eq!(first, fs::read(again.path().join("projection.csv")).unwrap());
}

#[test]
fn fit_csv_with_projector_averaging() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    write_three_class_csv(&data, 90, 5, 3);
    let out = gkdr(&[
        "fit",
        "--input",
        s(&data),
        "--label",
        "label",
        "--d",
        "2",
        "--method",
        "gkdr-v",
        "--out-dir",
        s(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_matrix(&dir.path().join("projection.csv")).unwrap().shape(), (5, 2));
    let r = report(dir.path());
    schema_check(&r);
    assert_eq!(
        r["config"]["data"]["classes"],
        serde_json::json!(["red", "green", "blue"])
    );
    assert_eq!(r["config"]["data"]["standardize"], true);
}

#[test]
fn fit_with_cv_and_low_rank() {
    let dir = tempfile::tempdir().unwrap();
    let out = gkdr(&[
        "fit",
        "--synth",
        "B",
        "--n",
        "120",
        "--d",
        "2",
        "--cv",
        "--multipliers",
        "1,2",
        "--low-rank",
        "--out-dir",
        s(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    schema_check(&r);
    assert_eq!(r["cv"]["table"].as_array().unwrap().len(), 2);
    assert_eq!(r["config"]["low_rank"]["enabled"], true);
}

#[test]
fn cv_grid_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = gkdr(&[
        "cv",
        "--synth",
        "A",
        "--n",
        "80",
        "--d",
        "1",
        "--out-dir",
        s(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    schema_check(&r);
    let table = r["cv"]["table"].as_array().unwrap();
    assert_eq!(table.len(), 8);
    let best = table
        .iter()
        .map(|row| row["mean_error"].as_f64().unwrap())
        .fold(f64::INFINITY, f64::min);
    assert_eq!(r["metrics"]["selected_cv_error"].as_f64().unwrap(), best);

    let one = tempfile::tempdir().unwrap();
    let out = gkdr(&[
        "cv",
        "--synth",
        "A",
        "--n",
        "80",
        "--d",
        "1",
        "--multipliers",
        "1.0",
        "--out-dir",
        s(one.path()),
    ]);
    assert!(out.status.success());
    let r = report(one.path());
    assert_eq!(r["cv"]["table"].as_array().unwrap().len(), 1);
    assert_eq!(r["cv"]["selected"][0], 1.0);
}

#[test]
fn bench_singleton() {
    let dir = tempfile::tempdir().unwrap();
    let out = gkdr(&[
        "bench",
        "--dataset",
        "B",
        "--n",
        "60",
        "--reps",
        "1",
        "--seed",
        "1",
        "--fixed-multiplier",
        "1",
        "--out-dir",
        s(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    schema_check(&r);
    assert_eq!(r["benchmark"]["singleton"], true);
    assert_eq!(r["benchmark"]["std_error"], 0.0);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("B  n=60  gkdr"));
}

#[test]
fn eval_shapes_and_separable_case() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = (dir.path().join("train.csv"), dir.path().join("test.csv"));
    // Two informative coordinates, classes well separated.
    let mut body = String::from("a,b,c,label\n");
    let mut test_body = body.clone();
    for i in 0..60 {
        let (class, sign) = if i % 2 == 0 { ("pos", 1.0) } else { ("neg", -1.0) };
        let row = format!(
            "{},{},{},{}\n",
            sign * 3.0 + (i as f64 * 0.37).sin(),
            sign * 2.0 + (i as f64 * 0.11).cos(),
            (i as f64 * 1.7).sin(),
            class
        );
        if i < 40 {
            body.push_str(&row);
        } else {
            test_body.push_str(&row);
        }
    }
    fs::write(&train, body).unwrap();
    fs::write(&test, test_body).unwrap();
    let proj = dir.path().join("b.csv");
    fs::write(&proj, "1.0,0.0\n0.0,1.0\n0.0,0.0\n").unwrap();

    let out = gkdr(&[
        "eval",
        "--projection",
        s(&proj),
        "--train",
        s(&train),
        "--test",
        s(&test),
        "--out-dir",
        s(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    schema_check(&r);
    assert!(r["metrics"]["classification_error"].as_f64().unwrap() <= 0.05);
    assert_eq!(r["config"]["knn_k"], 7);
    let z = read_matrix(&dir.path().join("projected.csv")).unwrap();
    assert_eq!(z.shape(), (20, 2));

    let out = gkdr(&[
        "eval",
        "--projection",
        s(&proj),
        "--train",
        s(&train),
        "--test",
        s(&test),
        "--knn-k",
        "41",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());

    // 1: IO and parse failures.
    let missing = dir.path().join("missing.csv");
    assert_eq!(
        gkdr(&["fit", "--input", s(&missing), "--d", "1", "--out-dir", d])
            .status
            .code(),
        Some(1)
    );
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "a,b,label\n1,2,x\n3,zz,y\n").unwrap();
    let out = gkdr(&["fit", "--input", s(&bad), "--d", "1", "--out-dir", d]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));

    // 2: invalid configuration.
    assert_eq!(
        gkdr(&["fit", "--synth", "A", "--d", "10", "--out-dir", d])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        gkdr(&["fit", "--synth", "A", "--d", "1", "--epsilon", "-1", "--out-dir", d])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(gkdr(&["fit", "--d", "1", "--out-dir", d]).status.code(), Some(2));
    assert_eq!(gkdr(&["fit", "--synth", "A", "--out-dir", d]).status.code(), Some(2));
    assert_eq!(
        gkdr(&["bench", "--dataset", "A", "--reps", "0", "--out-dir", d])
            .status
            .code(),
        Some(2)
    );
    let proj = dir.path().join("p.csv");
    fs::write(&proj, "1.0\n0.0\n0.0\n").unwrap();
    let data = dir.path().join("data.csv");
    write_three_class_csv(&data, 30, 4, 1);
    assert_eq!(
        gkdr(&["eval", "--projection", s(&proj), "--train", s(&data), "--out-dir", d])
            .status
            .code(),
        Some(2)
    );

    // 3: numerical failure. At this bandwidth every off-diagonal kernel value
    // underflows and all gradients vanish.
    let out = gkdr(&[
        "fit",
        "--synth",
        "A",
        "--n",
        "50",
        "--d",
        "1",
        "--sigma-x",
        "1e-3",
        "--out-dir",
        d,
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    assert_eq!(gkdr(&["--help"]).status.code(), Some(0));
}
