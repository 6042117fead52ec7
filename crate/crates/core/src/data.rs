//! Response/covariate containers and CSV ingestion.

use std::borrow::Cow;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// A response vector and a column-major covariate matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    columns: Vec<Vec<f64>>,
    names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from a response and covariate columns.
    ///
    /// Requires at least one row, at least one covariate, equal column lengths
    /// and finite values throughout.
    pub fn new(y: Vec<f64>, columns: Vec<Vec<f64>>, names: Option<Vec<String>>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::domain("dataset needs at least one row"));
        }
        if columns.is_empty() {
            return Err(Error::domain("dataset needs at least one covariate"));
        }
        if let Some(j) = columns.iter().position(|c| c.len() != y.len()) {
            return Err(Error::domain(format!(
                "covariate {j} has {} rows, response has {}",
                columns[j].len(),
                y.len()
            )));
        }
        if y.iter().chain(columns.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::domain("dataset values must be finite"));
        }
        let names = match names {
            Some(names) if names.len() != columns.len() => {
                return Err(Error::Dimension {
                    expected: columns.len(),
                    found: names.len(),
                })
            }
            Some(names) => names,
            None => (1..=columns.len()).map(|j| format!("x{j}")).collect(),
        };
        Ok(Self { y, columns, names })
    }

    /// Builds a dataset from row-major covariates.
    pub fn from_rows(y: Vec<f64>, rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::Dimension {
                expected: d,
                found: bad.len(),
            });
        }
        let columns = (0..d).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        Self::new(y, columns, None)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.columns.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Same covariates with a replaced response (used for boosting residuals).
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        Self::new(y, self.columns.clone(), Some(self.names.clone()))
    }

    /// Replaces the response in place; same length and finiteness rules.
    pub fn set_response(&mut self, y: Vec<f64>) -> Result<()> {
        if y.len() != self.y.len() {
            return Err(Error::Dimension {
                expected: self.y.len(),
                found: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("response values must be finite"));
        }
        self.y = y;
        Ok(())
    }

    /// Rows `rows` in the given order.
    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            y: rows.iter().map(|&i| self.y[i]).collect(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&i| c[i]).collect())
                .collect(),
            names: self.names.clone(),
        }
    }

    /// Column permutation: new column `k` is old column `order[k]`.
    pub fn permute_columns(&self, order: &[usize]) -> Self {
        Self {
            y: self.y.clone(),
            columns: order.iter().map(|&j| self.columns[j].clone()).collect(),
            names: order.iter().map(|&j| self.names[j].clone()).collect(),
        }
    }

    pub fn mean_response(&self) -> f64 {
        self.y.iter().sum::<f64>() / self.n() as f64
    }

    pub fn root(&self) -> NodeData<'_> {
        NodeData {
            dataset: self,
            rows: Cow::Owned((0..self.n()).collect()),
        }
    }
}

/// The rows of a dataset that reach one tree node.
#[derive(Debug, Clone)]
pub struct NodeData<'a> {
    dataset: &'a Dataset,
    rows: Cow<'a, [usize]>,
}

impl<'a> NodeData<'a> {
    pub fn new(dataset: &'a Dataset, rows: impl Into<Cow<'a, [usize]>>) -> Self {
        Self {
            dataset,
            rows: rows.into(),
        }
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.dataset
    }

    pub fn row_ids(&self) -> &[usize] {
        &self.rows
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn d(&self) -> usize {
        self.dataset.d()
    }

    pub fn y(&self, k: usize) -> f64 {
        self.dataset.y[self.rows[k]]
    }

    pub fn x(&self, k: usize, j: usize) -> f64 {
        self.dataset.columns[j][self.rows[k]]
    }

    pub fn responses(&self) -> Vec<f64> {
        self.rows.iter().map(|&i| self.dataset.y[i]).collect()
    }
}

/// Where and how to read a training CSV.
#[derive(Debug, Clone)]
pub struct IngestSpec {
    pub path: PathBuf,
    pub target: String,
    /// Feature columns; `None` means every column except the target.
    pub features: Option<Vec<String>>,
    pub delimiter: u8,
}

impl IngestSpec {
    pub fn new(path: impl Into<PathBuf>, target: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            target: target.into(),
            features: None,
            delimiter: b',',
        }
    }
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn read_table(path: &Path, delimiter: u8) -> Result<Table> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io_err)?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .from_reader(std::io::BufReader::new(file));
    let csv_err = |row: usize, column: &str, message: String| Error::Csv {
        path: path.to_path_buf(),
        row,
        column: column.to_string(),
        message,
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(0, "", e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        // 1-based data row numbers; the header is row 0.
        let row = idx + 1;
        let record = record.map_err(|e| csv_err(row, "", e.to_string()))?;
        if record.len() != header.len() {
            return Err(csv_err(
                row,
                "",
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let values = record
            .iter()
            .zip(&header)
            .map(|(cell, name)| {
                let cell = cell.trim();
                if cell.is_empty() {
                    return Err(csv_err(row, name, "missing value".into()));
                }
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(csv_err(row, name, format!("not a finite real: {cell:?}"))),
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(csv_err(0, "", "no data rows".into()));
    }
    Ok(Table { header, rows })
}

fn column_index(header: &[String], name: &str, path: &Path) -> Result<usize> {
    header.iter().position(|h| h == name).ok_or_else(|| Error::Csv {
        path: path.to_path_buf(),
        row: 0,
        column: name.to_string(),
        message: "column not found in header".into(),
    })
}

/// Reads a training CSV into a dataset.
pub fn load_csv(spec: &IngestSpec) -> Result<Dataset> {
    let table = read_table(&spec.path, spec.delimiter)?;
    let target = column_index(&table.header, &spec.target, &spec.path)?;
    let features: Vec<usize> = match &spec.features {
        Some(names) => names
            .iter()
            .map(|n| column_index(&table.header, n, &spec.path))
            .collect::<Result<_>>()?,
        None => (0..table.header.len()).filter(|&j| j != target).collect(),
    };
    if features.is_empty() {
        return Err(Error::Csv {
            path: spec.path.clone(),
            row: 0,
            column: String::new(),
            message: "no feature columns".into(),
        });
    }
    let y = table.rows.iter().map(|r| r[target]).collect();
    let columns = features
        .iter()
        .map(|&j| table.rows.iter().map(|r| r[j]).collect())
        .collect();
    let names = features.iter().map(|&j| table.header[j].clone()).collect();
    Dataset::new(y, columns, Some(names))
}

/// Reads row-major feature vectors for prediction.
///
/// Columns are picked by name when every name in `names` appears in the
/// header; otherwise the file must have exactly `names.len()` columns, used in
/// order.
pub fn load_features(path: &Path, names: &[String], delimiter: u8) -> Result<Vec<Vec<f64>>> {
    let table = read_table(path, delimiter)?;
    let by_name: Option<Vec<usize>> = names.iter().map(|n| table.header.iter().position(|h| h == n)).collect();
    let picks = match by_name {
        Some(picks) if !names.is_empty() => picks,
        _ if table.header.len() == names.len() => (0..names.len()).collect(),
        _ => {
            return Err(Error::Dimension {
                expected: names.len(),
                found: table.header.len(),
            })
        }
    };
    Ok(table
        .rows
        .into_iter()
        .map(|r| picks.iter().map(|&j| r[j]).collect())
        .collect())
}

/// Shortest round-trip text for a real, in exponent form outside
/// `[1e-4, 1e16)`. Negative zero prints as `0`.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else if x.is_finite() && (1e-4..1e16).contains(&x.abs()) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}
