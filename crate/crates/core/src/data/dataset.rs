use std::fs::File;
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Per-column affine map to mean 0 and standard deviation 1.
///
/// The standard deviation uses the `1/n` convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardization {
    /// Column means and standard deviations. Constant columns are rejected.
    pub fn fit(values: ArrayView2<f64>) -> Result<Self> {
        let n = values.nrows();
        if n == 0 {
            return Err(Error::Empty("data"));
        }
        let mut means = Vec::with_capacity(values.ncols());
        let mut sds = Vec::with_capacity(values.ncols());
        for (j, col) in values.columns().into_iter().enumerate() {
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            let sd = var.sqrt();
            if !(sd > 0.0) || col.iter().all(|&x| x == col[0]) {
                return Err(Error::Degenerate(format!("column {} is constant", j + 1)));
            }
            means.push(mean);
            sds.push(sd);
        }
        Ok(Self { means, sds })
    }

    pub fn dimension(&self) -> usize {
        self.means.len()
    }

    fn check(&self, d: usize) -> Result<()> {
        if d == self.dimension() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dimension(), found: d })
        }
    }

    pub fn apply(&self, values: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(values.ncols())?;
        let mut out = values.to_owned();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|x| (x - self.means[j]) / self.sds[j]);
        }
        Ok(out)
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check(row.len())?;
        Ok(row
            .iter()
            .enumerate()
            .map(|(j, &x)| (x - self.means[j]) / self.sds[j])
            .collect())
    }

    pub fn invert(&self, values: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(values.ncols())?;
        let mut out = values.to_owned();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|z| z * self.sds[j] + self.means[j]);
        }
        Ok(out)
    }

    /// `-sum ln sd`: the log-Jacobian from standardised to original densities.
    pub fn log_jacobian(&self) -> f64 {
        -self.sds.iter().map(|s| s.ln()).sum::<f64>()
    }

    /// Restriction to a subset of columns.
    pub fn select(&self, columns: &[usize]) -> Self {
        Self {
            means: columns.iter().map(|&j| self.means[j]).collect(),
            sds: columns.iter().map(|&j| self.sds[j]).collect(),
        }
    }
}

/// Numeric table with optional column names and target column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Array2<f64>,
    column_names: Vec<String>,
    standardization: Option<Standardization>,
    target_column: Option<usize>,
}

impl Dataset {
    /// Rejects non-finite entries. Columns are named `x1, x2, ...`.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let names = (1..=values.ncols()).map(|j| format!("x{j}")).collect();
        Self::with_names(values, names)
    }

    pub fn with_names(values: Array2<f64>, column_names: Vec<String>) -> Result<Self> {
        if column_names.len() != values.ncols() {
            return Err(Error::DimensionMismatch { expected: values.ncols(), found: column_names.len() });
        }
        if let Some(index) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { values, column_names, standardization: None, target_column: None })
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.values.column(j)
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    pub fn target_column(&self) -> Option<usize> {
        self.target_column
    }

    pub fn with_target(mut self, column: usize) -> Result<Self> {
        if column >= self.n_cols() {
            return Err(Error::param("target_column", format!("{column} out of range")));
        }
        self.target_column = Some(column);
        Ok(self)
    }

    /// Standardised copy. Applying it twice composes the two maps, so the
    /// stored standardisation always maps back to the original scale.
    pub fn standardize(&self) -> Result<Self> {
        let step = Standardization::fit(self.values.view())?;
        let values = step.apply(self.values.view())?;
        let total = match &self.standardization {
            None => step,
            Some(prev) => Standardization {
                means: (0..step.dimension())
                    .map(|j| prev.means[j] + prev.sds[j] * step.means[j])
                    .collect(),
                sds: (0..step.dimension()).map(|j| prev.sds[j] * step.sds[j]).collect(),
            },
        };
        Ok(Self { values, standardization: Some(total), ..self.clone() })
    }

    /// Maps standardised values (e.g. samples) back to the original scale.
    pub fn destandardize(&self, values: ArrayView2<f64>) -> Result<Array2<f64>> {
        match &self.standardization {
            Some(s) => s.invert(values),
            None => Ok(values.to_owned()),
        }
    }

    /// Rows in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self { values: self.values.select(Axis(0), rows), ..self.clone() }
    }
}

/// Train/test partition with the row indices drawn into each part.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// Seeded shuffle, then the first `round(fraction * n)` rows go to training.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::param("train_fraction", format!("must lie in (0, 1), got {train_fraction}")));
    }
    let n = ds.n_rows();
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::param("train_fraction", format!("{train_fraction} of {n} rows leaves an empty part")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, &[tag::SPLIT]));
    let (train_rows, test_rows) = (order[..n_train].to_vec(), order[n_train..].to_vec());
    Ok(Split {
        train: ds.select_rows(&train_rows),
        test: ds.select_rows(&test_rows),
        train_rows,
        test_rows,
    })
}

/// Reads a rectangular numeric CSV. Row and column numbers in errors are
/// 1-based and count the header line.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool, delimiter: u8) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let offset = usize::from(has_header) + 1;
    let names: Option<Vec<String>> = if has_header {
        Some(reader.headers()?.iter().map(str::to_owned).collect())
    } else {
        None
    };
    let mut width = names.as_ref().map(Vec::len);
    let mut flat = Vec::new();
    let mut n = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + offset;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::Parse {
                    row,
                    column: record.len().min(w) + 1,
                    message: format!("expected {w} fields, found {}", record.len()),
                })
            }
            Some(_) => {}
        }
        for (j, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: j + 1,
                message: format!("`{cell}` is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse { row, column: j + 1, message: format!("`{cell}` is not finite") });
            }
            flat.push(value);
        }
        n += 1;
    }
    let d = width.unwrap_or(0);
    if n == 0 || d == 0 {
        return Err(Error::Empty("csv file has no data rows"));
    }
    let values = Array2::from_shape_vec((n, d), flat).expect("rectangular");
    match names {
        Some(names) => Dataset::with_names(values, names),
        None => Dataset::new(values),
    }
}

/// Writes `values` as CSV with a header line. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_csv(path: impl AsRef<Path>, header: &[String], values: ArrayView2<f64>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(header)?;
    for row in values.rows() {
        writer.write_record(row.iter().map(|x| x.to_string()))?;
    }
    writer.flush().map_err(|source| Error::Io { path: path.to_owned(), source })?;
    Ok(())
}
