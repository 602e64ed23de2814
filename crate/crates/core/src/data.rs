//! Datasets, centering transforms, prediction and CSV ingestion.

use std::collections::HashSet;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Predictor matrix, response and optional column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<f64>,
    names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>, names: Option<Vec<String>>) -> Result<Self> {
        let (n, p) = x.dim();
        if n < 2 {
            return Err(Error::InvalidData(format!("need at least 2 rows, got {n}")));
        }
        if p < 1 {
            return Err(Error::InvalidData("need at least 1 predictor column".into()));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: y.len() });
        }
        check_finite(x.view(), y.view())?;
        if let Some(names) = &names {
            if names.len() != p {
                return Err(Error::DimensionMismatch { expected: p, got: names.len() });
            }
            let mut seen = HashSet::new();
            for name in names {
                if !seen.insert(name.as_str()) {
                    return Err(Error::InvalidData(format!("duplicate column name '{name}'")));
                }
            }
        }
        Ok(Self { x, y, names })
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Column labels, falling back to `x1..xp`.
    pub fn column_names(&self) -> Vec<String> {
        match &self.names {
            Some(names) => names.clone(),
            None => default_names(self.p()),
        }
    }

    /// Rows selected by `rows`, in that order (duplicates allowed).
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        let x = self.x.select(Axis(0), rows);
        let y = self.y.select(Axis(0), rows);
        Dataset::new(x, y, self.names.clone())
    }
}

pub fn default_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

fn check_finite(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<()> {
    for ((row, column), v) in x.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, column });
        }
    }
    if let Some(row) = y.iter().position(|v| !v.is_finite()) {
        // the response is reported as column index p
        return Err(Error::NonFinite { row, column: x.ncols() });
    }
    Ok(())
}

/// Mean-corrected (optionally unit-scaled) copy of a design.
#[derive(Debug, Clone)]
pub struct CenteredView {
    pub xc: Array2<f64>,
    pub yc: Array1<f64>,
    pub x_means: Array1<f64>,
    pub x_scales: Array1<f64>,
    pub y_mean: f64,
    pub degenerate: Vec<bool>,
}

impl CenteredView {
    /// Maps coefficients fitted on `xc` back to the original variable scale.
    pub fn to_original(&self, beta_centered: ArrayView1<'_, f64>) -> CoefficientVector {
        let beta: Array1<f64> = beta_centered
            .iter()
            .zip(self.x_scales.iter())
            .zip(self.degenerate.iter())
            .map(|((b, s), &deg)| if deg { 0.0 } else { b / s })
            .collect();
        let intercept = self.y_mean - self.x_means.dot(&beta);
        CoefficientVector { beta, intercept }
    }

    /// Maps original-scale coefficients into the coordinates of `xc`.
    pub fn to_centered(&self, beta: ArrayView1<'_, f64>) -> Array1<f64> {
        &beta * &self.x_scales
    }

    pub fn n(&self) -> usize {
        self.xc.nrows()
    }

    pub fn p(&self) -> usize {
        self.xc.ncols()
    }
}

/// Centers a validated dataset.
pub fn center(dataset: &Dataset, scale: bool) -> CenteredView {
    center_arrays(dataset.x(), dataset.y(), scale)
}

/// Centers raw arrays; inputs must already be finite.
pub fn center_arrays(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, scale: bool) -> CenteredView {
    let (n, p) = x.dim();
    let nf = n as f64;
    let mut xc = x.to_owned();
    let mut x_means = Array1::zeros(p);
    let mut x_scales = Array1::ones(p);
    let mut degenerate = vec![false; p];
    for (j, mut col) in xc.axis_iter_mut(Axis(1)).enumerate() {
        let mean = col.sum() / nf;
        col.mapv_inplace(|v| v - mean);
        x_means[j] = mean;
        let max_abs = x.column(j).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let spread = col.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if spread <= 1e-12 * max_abs.max(f64::MIN_POSITIVE) || spread == 0.0 {
            col.fill(0.0);
            degenerate[j] = true;
            continue;
        }
        if scale && n > 1 {
            let sd = (col.dot(&col) / (nf - 1.0)).sqrt();
            col.mapv_inplace(|v| v / sd);
            x_scales[j] = sd;
        }
    }
    let y_mean = y.sum() / nf;
    let yc = y.mapv(|v| v - y_mean);
    CenteredView { xc, yc, x_means, x_scales, y_mean, degenerate }
}

/// Coefficients on the original variable scale.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    pub beta: Array1<f64>,
    pub intercept: f64,
}

impl CoefficientVector {
    pub fn zeros(p: usize) -> Self {
        Self { beta: Array1::zeros(p), intercept: 0.0 }
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }
}

pub fn predict(coef: &CoefficientVector, x_new: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    if x_new.ncols() != coef.p() {
        return Err(Error::DimensionMismatch { expected: coef.p(), got: x_new.ncols() });
    }
    Ok(x_new.dot(&coef.beta) + coef.intercept)
}

pub fn mean_squared_error(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let d = &a - &b;
    d.dot(&d) / a.len() as f64
}

fn table_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Table { path: path.display().to_string(), message: message.into() }
}

/// Reads a numeric table (header + rows) into column names and a row-major matrix.
pub fn read_matrix(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| table_err(path, e.to_string()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| table_err(path, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let width = header.len();
    if width == 0 {
        return Err(table_err(path, "empty header"));
    }
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        // line 1 is the header
        let line = i + 2;
        let record = record.map_err(|e| table_err(path, e.to_string()))?;
        if record.len() != width {
            return Err(table_err(
                path,
                format!("line {line}: expected {width} fields, found {}", record.len()),
            ));
        }
        for (j, cell) in record.iter().enumerate() {
            let trimmed = cell.trim();
            let v: f64 = trimmed.parse().map_err(|_| {
                table_err(path, format!("line {line}, column '{}': non-numeric cell '{trimmed}'", header[j]))
            })?;
            if !v.is_finite() {
                return Err(table_err(
                    path,
                    format!("line {line}, column '{}': non-finite cell '{trimmed}'", header[j]),
                ));
            }
            values.push(v);
        }
        rows += 1;
    }
    let matrix = Array2::from_shape_vec((rows, width), values)
        .map_err(|e| table_err(path, e.to_string()))?;
    Ok((header, matrix))
}

/// Loads a CSV whose header names `response_column`; the other columns are predictors.
pub fn read_table(path: &Path, response_column: &str) -> Result<Dataset> {
    let (header, matrix) = read_matrix(path)?;
    let yi = header
        .iter()
        .position(|h| h == response_column)
        .ok_or_else(|| table_err(path, format!("missing response column '{response_column}'")))?;
    let keep: Vec<usize> = (0..header.len()).filter(|&j| j != yi).collect();
    if keep.is_empty() {
        return Err(table_err(path, "no predictor columns"));
    }
    let names = keep.iter().map(|&j| header[j].clone()).collect();
    let x = matrix.select(Axis(1), &keep);
    let y = matrix.column(yi).to_owned();
    Dataset::new(x, y, Some(names)).map_err(|e| table_err(path, e.to_string()))
}

/// Reads a predictor-only CSV whose columns must match `names` by label.
pub fn read_predictors(path: &Path, names: &[String]) -> Result<Array2<f64>> {
    let (header, matrix) = read_matrix(path)?;
    let mut cols = Vec::with_capacity(names.len());
    for name in names {
        let j = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| table_err(path, format!("missing column '{name}'")))?;
        cols.push(j);
    }
    Ok(matrix.select(Axis(1), &cols))
}

/// Writes the response first, then the predictors.
pub fn write_table(dataset: &Dataset, response_column: &str, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![response_column.to_string()];
    header.extend(dataset.column_names());
    w.write_record(&header)?;
    for (row, y) in dataset.x().outer_iter().zip(dataset.y().iter()) {
        let mut rec = Vec::with_capacity(row.len() + 1);
        rec.push(y.to_string());
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub const INTERCEPT_LABEL: &str = "(intercept)";

/// `name,coefficient` rows followed by the `(intercept)` row.
pub fn write_coefficients(coef: &CoefficientVector, names: &[String], path: &Path) -> Result<()> {
    if names.len() != coef.p() {
        return Err(Error::DimensionMismatch { expected: coef.p(), got: names.len() });
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["name", "coefficient"])?;
    for (name, b) in names.iter().zip(coef.beta.iter()) {
        w.write_record([name.as_str(), &b.to_string()])?;
    }
    w.write_record([INTERCEPT_LABEL, &coef.intercept.to_string()])?;
    w.flush()?;
    Ok(())
}

pub fn read_coefficients(path: &Path) -> Result<(Vec<String>, CoefficientVector)> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    if header.len() != 2 || &header[0] != "name" || &header[1] != "coefficient" {
        return Err(table_err(path, "expected header 'name,coefficient'"));
    }
    let mut names = Vec::new();
    let mut beta = Vec::new();
    let mut intercept = None;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let v: f64 = record[1]
            .trim()
            .parse()
            .map_err(|_| table_err(path, format!("line {line}: non-numeric coefficient '{}'", &record[1])))?;
        if &record[0] == INTERCEPT_LABEL {
            intercept = Some(v);
        } else {
            names.push(record[0].to_string());
            beta.push(v);
        }
    }
    let intercept = intercept.ok_or_else(|| table_err(path, "missing (intercept) row"))?;
    Ok((names, CoefficientVector { beta: Array1::from(beta), intercept }))
}

/// Single-column CSV writer used for predictions and importance scores.
pub fn write_named_column(path: &Path, header: &[&str], rows: &[(String, f64)]) -> Result<()> {
    let mut file = File::create(path)?;
    writeln!(file, "{}", header.join(","))?;
    for (name, v) in rows {
        writeln!(file, "{name},{v}")?;
    }
    Ok(())
}
