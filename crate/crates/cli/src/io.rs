//! CSV input and output.
//!
//! Data files are comma separated with a header row; the response is picked
//! by column name and every other column is a numeric feature. Matrices
//! (projections, projected coordinates) are written without a header using
//! the shortest decimal that round-trips to the same `f64`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use gkdr::data::{one_hot, Dataset, Standardization};
use gkdr::model_selection::Task;
use gkdr::Matrix;

use crate::error::{CliError, CliResult};

/// A data file split into features and the raw response column.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub feature_names: Vec<String>,
    pub x: Matrix,
    pub response: Vec<String>,
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            _ => unreachable!(),
        },
        _ => CliError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        },
    }
}

/// Reads a headed CSV file, separating column `label` from the features.
pub fn read_table(path: &Path, label: &str) -> CliResult<RawTable> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(CliError::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    let label_idx = header
        .iter()
        .position(|h| h == label)
        .ok_or_else(|| CliError::MissingColumn {
            path: path.to_path_buf(),
            column: label.to_owned(),
        })?;
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut values = Vec::new();
    let mut response = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                response.push(cell.to_owned());
                continue;
            }
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| CliError::BadNumber {
                    path: path.to_path_buf(),
                    row: r + 1,
                    column: header[j].clone(),
                    value: cell.to_owned(),
                })?;
            values.push(v);
        }
    }
    if response.is_empty() {
        return Err(CliError::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    let x = Matrix::from_vec(response.len(), feature_names.len(), values)?;
    Ok(RawTable {
        feature_names,
        x,
        response,
    })
}

/// Encodes a response column. Classification labels become one-hot rows
/// with columns in `classes` order, extended by first appearance.
pub fn encode_response(
    path: &Path,
    column: &str,
    raw: &[String],
    task: Task,
    classes: &mut Vec<String>,
) -> CliResult<Matrix> {
    match task {
        Task::Regression => {
            let mut y = Vec::with_capacity(raw.len());
            for (r, cell) in raw.iter().enumerate() {
                let v: f64 = cell
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| CliError::BadNumber {
                        path: path.to_path_buf(),
                        row: r + 1,
                        column: column.to_owned(),
                        value: cell.clone(),
                    })?;
                y.push(v);
            }
            Ok(Matrix::column(&y))
        }
        Task::Classification => {
            // Prefix the known classes so their column order is kept.
            let mut all: Vec<&str> = classes.iter().map(String::as_str).collect();
            let known = all.len();
            all.extend(raw.iter().map(String::as_str));
            let (encoded, order) = one_hot(&all);
            *classes = order.into_iter().map(str::to_owned).collect();
            let rows: Vec<usize> = (known..known + raw.len()).collect();
            let y = encoded.select_rows(&rows);
            Ok(y)
        }
    }
}

/// Loads a data file as a [`Dataset`], optionally z-scoring the features.
/// Returns the fitted standardization so other files can reuse it.
pub fn load_csv(
    path: &Path,
    label: &str,
    task: Task,
    standardize: bool,
) -> CliResult<(Dataset, Option<Standardization>)> {
    let table = read_table(path, label)?;
    let mut classes = Vec::new();
    let y = encode_response(path, label, &table.response, task, &mut classes)?;
    let (x, scaling) = if standardize {
        let s = Standardization::fit(&table.x);
        (s.apply(&table.x), Some(s))
    } else {
        (table.x, None)
    };
    let labels = (task == Task::Classification).then_some(classes);
    Ok((Dataset { x, y, labels, b0: None }, scaling))
}

/// Writes `m` as CSV without a header, one matrix row per line.
pub fn write_matrix(path: &Path, m: &Matrix) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_matrix_to(&mut out, m).map_err(|e| CliError::io(path, e))?;
    out.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_matrix_to<W: Write>(out: &mut W, m: &Matrix) -> std::io::Result<()> {
    for row in m.iter_rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Reads a header-less numeric CSV written by [`write_matrix`].
pub fn read_matrix(path: &Path) -> CliResult<Matrix> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let mut row = Vec::with_capacity(record.len());
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| CliError::BadNumber {
                    path: path.to_path_buf(),
                    row: r + 1,
                    column: (j + 1).to_string(),
                    value: cell.to_owned(),
                })?;
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    Matrix::from_rows(&rows).map_err(|_| CliError::Parse {
        path: path.to_path_buf(),
        message: "rows have different lengths".to_owned(),
    })
}
