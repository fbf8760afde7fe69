//! Comma-separated matrix files.
//!
//! Format: one row per line, cells separated by commas, `.` as the decimal
//! separator, and the literal token `NA` (case-sensitive) for a missing
//! value. An optional first row of column names and an optional first column
//! of row labels are detected by their failure to parse as numbers; purely
//! numeric names are not supported. Missing cells come back as NaN.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::CliError;

/// A parsed matrix file. `values` holds NaN where the file said `NA`.
#[derive(Debug, Clone)]
pub struct Table {
    pub values: DMatrix<f64>,
    pub row_labels: Option<Vec<String>>,
    pub col_labels: Option<Vec<String>>,
}

fn parseable(cell: &str) -> bool {
    cell == "NA" || cell.parse::<f64>().is_ok()
}

/// Reads and shape-checks one matrix file.
pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: display.clone(),
        source,
    })?;
    let rows: Vec<Vec<String>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(|c| c.trim().to_string()).collect())
        .collect();
    if rows.is_empty() {
        return Err(CliError::EmptyFile { path: display });
    }

    let has_row_labels = if rows.len() >= 2 {
        !parseable(&rows[1][0])
    } else {
        !parseable(&rows[0][0]) && rows[0].iter().skip(1).all(|c| parseable(c))
    };
    let probe_col = usize::from(has_row_labels).min(rows[0].len() - 1);
    let has_header = rows.len() >= 2 && !parseable(&rows[0][probe_col]);

    let data_rows = &rows[usize::from(has_header)..];
    let col_offset = usize::from(has_row_labels);
    let ncols = data_rows[0].len().saturating_sub(col_offset);
    if ncols == 0 {
        return Err(CliError::EmptyFile { path: display });
    }

    let col_labels = if has_header {
        Some(rows[0][col_offset.min(rows[0].len())..].iter().map(String::clone).collect())
    } else {
        None
    };
    let mut row_labels = has_row_labels.then(Vec::new);

    let mut values = DMatrix::zeros(data_rows.len(), ncols);
    for (r, cells) in data_rows.iter().enumerate() {
        let file_row = r + 1 + usize::from(has_header);
        if cells.len() != ncols + col_offset {
            return Err(CliError::RaggedRow {
                path: display,
                row: file_row,
                got: cells.len(),
                want: ncols + col_offset,
            });
        }
        if let Some(labels) = row_labels.as_mut() {
            labels.push(cells[0].clone());
        }
        for (c, cell) in cells[col_offset..].iter().enumerate() {
            values[(r, c)] = if cell == "NA" {
                f64::NAN
            } else {
                cell.parse::<f64>().map_err(|_| CliError::UnparsableCell {
                    path: display.clone(),
                    row: file_row,
                    col: c + 1 + col_offset,
                    token: cell.clone(),
                })?
            };
        }
    }

    Ok(Table {
        values,
        row_labels,
        col_labels,
    })
}

/// A loaded dissimilarity matrix. `observed_pairs` is 1.0 where at least one
/// direction of a pair carried a value and 0.0 where both were missing;
/// excluded pairs have their dissimilarity zeroed and should get zero
/// weight.
#[derive(Debug, Clone)]
pub struct Dissimilarities {
    pub delta: DMatrix<f64>,
    pub observed_pairs: DMatrix<f64>,
    pub labels: Option<Vec<String>>,
}

/// Loads a square dissimilarity matrix. A pair is treated as unobserved
/// only when both directions are `NA`; a one-sided `NA` adopts the observed
/// direction's value. `NA` on the diagonal reads as zero.
pub fn load_dissimilarity(path: &Path) -> Result<Dissimilarities, CliError> {
    let table = read_table(path)?;
    let n = table.values.nrows();
    if table.values.ncols() != n {
        return Err(CliError::NotSquare {
            path: path.display().to_string(),
            rows: n,
            cols: table.values.ncols(),
        });
    }
    let mut delta = table.values.clone();
    let mut observed = DMatrix::from_element(n, n, 1.0);
    for i in 0..n {
        if delta[(i, i)].is_nan() {
            delta[(i, i)] = 0.0;
        }
        for j in (i + 1)..n {
            let a = delta[(i, j)];
            let b = delta[(j, i)];
            match (a.is_nan(), b.is_nan()) {
                (true, true) => {
                    delta[(i, j)] = 0.0;
                    delta[(j, i)] = 0.0;
                    observed[(i, j)] = 0.0;
                    observed[(j, i)] = 0.0;
                }
                (true, false) => {
                    delta[(i, j)] = b;
                }
                (false, true) => {
                    delta[(j, i)] = a;
                }
                (false, false) => {}
            }
        }
    }
    Ok(Dissimilarities {
        delta,
        observed_pairs: observed,
        labels: table.row_labels,
    })
}

/// Loads a conditioning matrix: N rows of q features, NaN at missing cells.
/// Rejects files where no row is complete.
pub fn load_conditioning(path: &Path) -> Result<Table, CliError> {
    let table = read_table(path)?;
    let complete = (0..table.values.nrows())
        .any(|i| (0..table.values.ncols()).all(|k| !table.values[(i, k)].is_nan()));
    if !complete {
        return Err(CliError::AllRowsIncomplete {
            path: path.display().to_string(),
        });
    }
    Ok(table)
}

/// Loads a square weight matrix; missing values are not allowed here.
pub fn load_weights(path: &Path, n: usize) -> Result<DMatrix<f64>, CliError> {
    let table = read_table(path)?;
    if table.values.nrows() != table.values.ncols() {
        return Err(CliError::NotSquare {
            path: path.display().to_string(),
            rows: table.values.nrows(),
            cols: table.values.ncols(),
        });
    }
    if table.values.nrows() != n {
        return Err(CliError::Invalid(format!(
            "{}: weight matrix is {}x{} but the dissimilarity matrix has {n} rows",
            path.display(),
            table.values.nrows(),
            table.values.ncols(),
        )));
    }
    if table.values.iter().any(|v| v.is_nan()) {
        return Err(CliError::Invalid(format!(
            "{}: weight matrix cannot contain NA",
            path.display()
        )));
    }
    Ok(table.values)
}

/// Writes a matrix as comma-separated text, NaN as `NA`, with optional row
/// labels. Finite values print in shortest round-trip form.
pub fn write_matrix(
    path: &Path,
    m: &DMatrix<f64>,
    row_labels: Option<&[String]>,
) -> Result<(), CliError> {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let mut cells: Vec<String> = Vec::with_capacity(m.ncols() + 1);
        if let Some(labels) = row_labels {
            cells.push(labels[i].clone());
        }
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            cells.push(if v.is_nan() { "NA".to_string() } else { format!("{v}") });
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })
}
