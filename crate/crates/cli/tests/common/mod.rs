#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use gkdr::rng::{seeded, uniform_symmetric};
use rand_distr::{Distribution, Normal};

pub const CLASS_NAMES: [&str; 3] = ["red", "green", "blue"];

/// Three Gaussian clusters in the first two of `m` coordinates (centres on
/// a circle of radius 2, spread 0.5); the other coordinates are uniform
/// noise on [-1, 1]. Written with header `f1..fm,label`.
pub fn write_three_class_csv(path: &Path, n: usize, m: usize, seed: u64) {
    let mut rng = seeded(seed);
    let spread = Normal::new(0.0, 0.5).unwrap();
    let mut out = String::new();
    let header: Vec<String> = (1..=m).map(|j| format!("f{j}")).collect();
    out.push_str(&header.join(","));
    out.push_str(",label\n");
    for i in 0..n {
        let class = i % 3;
        let angle = class as f64 * 2.0 * std::f64::consts::PI / 3.0;
        let mut row = vec![
            2.0 * angle.cos() + spread.sample(&mut rng),
            2.0 * angle.sin() + spread.sample(&mut rng),
        ];
        row.extend((2..m).map(|_| uniform_symmetric(&mut rng)));
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        out.push(',');
        out.push_str(CLASS_NAMES[class]);
        out.push('\n');
    }
    std::fs::write(path, out).unwrap();
}

pub fn gkdr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gkdr")).args(args).output().unwrap()
}

pub fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}
