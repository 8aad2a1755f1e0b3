//! Tabular data: loading, validation, empirical moments, quantiles and splits.
//!
//! An [`EmpiricalDataset`] is the uniform empirical measure over its rows.
//! It is immutable once built; every transformation returns a new dataset.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// `n x d` matrix of finite reals with unique column names, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDataset {
    column_names: Vec<String>,
    data: Vec<f64>,
    n: usize,
    d: usize,
}

/// Mean and symmetric empirical quantiles of one column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnStat {
    pub mean: f64,
    pub quantile_lo: f64,
    pub quantile_hi: f64,
    pub alpha: f64,
}

/// Result of [`load_csv`]: the numeric dataset and the number of rows
/// discarded because a selected cell was missing.
#[derive(Debug, Clone)]
pub struct CsvLoad {
    pub dataset: EmpiricalDataset,
    pub dropped_rows: usize,
}

impl EmpiricalDataset {
    pub fn new(column_names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = column_names.len();
        let mut data = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidDataset(format!(
                    "row {i} has {} values, expected {d}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(column_names, data)
    }

    /// Builds a dataset from row-major values.
    pub fn from_flat(column_names: Vec<String>, data: Vec<f64>) -> Result<Self> {
        let d = column_names.len();
        if d == 0 {
            return Err(Error::InvalidDataset("no columns".into()));
        }
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !data.len().is_multiple_of(d) {
            return Err(Error::InvalidDataset(format!(
                "{} values do not fill rows of width {d}",
                data.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &column_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {}, column `{}`",
                pos / d,
                column_names[pos % d]
            )));
        }
        Ok(Self {
            n: data.len() / d,
            d,
            column_names,
            data,
        })
    }

    /// Same columns, new row-major values.
    pub fn with_values(&self, data: Vec<f64>) -> Result<Self> {
        Self::from_flat(self.column_names.clone(), data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.d)
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.column_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    fn check_column(&self, j: usize) -> Result<()> {
        if j >= self.d {
            return Err(Error::ColumnOutOfRange { index: j, d: self.d });
        }
        Ok(())
    }

    pub fn column(&self, j: usize) -> Result<Vec<f64>> {
        self.check_column(j)?;
        Ok(self.rows().map(|r| r[j]).collect())
    }

    /// Arithmetic mean of column `j`.
    pub fn column_mean(&self, j: usize) -> Result<f64> {
        self.check_column(j)?;
        Ok(self.rows().map(|r| r[j]).sum::<f64>() / self.n as f64)
    }

    /// Mean of the squared entries of column `j`.
    pub fn column_second_moment(&self, j: usize) -> Result<f64> {
        self.check_column(j)?;
        Ok(self.rows().map(|r| r[j] * r[j]).sum::<f64>() / self.n as f64)
    }

    /// Population standard deviation of column `j`.
    pub fn column_std(&self, j: usize) -> Result<f64> {
        let m = self.column_mean(j)?;
        let var = self.rows().map(|r| (r[j] - m).powi(2)).sum::<f64>() / self.n as f64;
        Ok(var.sqrt())
    }

    /// Nearest-rank (type 1) quantile: the `ceil(p n)`-th smallest value.
    pub fn empirical_quantile(&self, j: usize, p: f64) -> Result<f64> {
        self.check_column(j)?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "quantile level {p} outside (0, 1)"
            )));
        }
        let mut col = self.column(j)?;
        col.sort_by(f64::total_cmp);
        Ok(col[nearest_rank(p, self.n) - 1])
    }

    pub fn column_stat(&self, j: usize, alpha: f64) -> Result<ColumnStat> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 0.5)")));
        }
        Ok(ColumnStat {
            mean: self.column_mean(j)?,
            quantile_lo: self.empirical_quantile(j, alpha)?,
            quantile_hi: self.empirical_quantile(j, 1.0 - alpha)?,
            alpha,
        })
    }

    /// Rows at `indices`, in that order (repeats allowed).
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            if i >= self.n {
                return Err(Error::InvalidArgument(format!(
                    "row {i} out of range for {} rows",
                    self.n
                )));
            }
            data.extend_from_slice(self.row(i));
        }
        self.with_values(data)
    }

    /// Keeps the named columns, in the given order.
    pub fn select_columns(&self, names: &[&str]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| self.column_index(n))
            .collect::<Result<Vec<_>>>()?;
        let data = self.rows().flat_map(|r| idx.iter().map(move |&j| r[j])).collect();
        Self::from_flat(names.iter().map(|s| s.to_string()).collect(), data)
    }

    /// Drops one column.
    pub fn without_column(&self, name: &str) -> Result<Self> {
        self.column_index(name)?;
        let keep: Vec<&str> = self
            .column_names
            .iter()
            .map(String::as_str)
            .filter(|c| *c != name)
            .collect();
        self.select_columns(&keep)
    }

    /// Seeded random partition into `(train, test)`.
    ///
    /// The train part holds `round(n * train_fraction)` rows. Both parts keep
    /// the original row order.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train fraction {train_fraction} outside (0, 1)"
            )));
        }
        let n_train = (self.n as f64 * train_fraction).round() as usize;
        if n_train == 0 || n_train >= self.n {
            return Err(Error::InvalidArgument(format!(
                "train fraction {train_fraction} leaves an empty part for n = {}",
                self.n
            )));
        }
        let mut idx: Vec<usize> = (0..self.n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (train, test) = idx.split_at_mut(n_train);
        train.sort_unstable();
        test.sort_unstable();
        Ok((self.select_rows(train)?, self.select_rows(test)?))
    }

    /// Writes the dataset as CSV, optionally followed by extra constant
    /// columns (used for provenance such as `__tau`).
    pub fn write_csv<W: std::io::Write>(&self, out: W, extra: &[(String, f64)]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header = self
            .column_names
            .iter()
            .map(String::as_str)
            .chain(extra.iter().map(|(k, _)| k.as_str()));
        w.write_record(header)?;
        for row in self.rows() {
            let rec = row
                .iter()
                .chain(extra.iter().map(|(_, v)| v))
                .map(|v| v.to_string());
            w.write_record(rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}

/// 1-based nearest rank `ceil(p n)`, guarded against `p n` landing a few ulps
/// above an integer.
fn nearest_rank(p: f64, n: usize) -> usize {
    let x = p * n as f64;
    let rank = (x - x * 8.0 * f64::EPSILON).ceil() as usize;
    rank.clamp(1, n)
}

fn is_missing(cell: &str) -> bool {
    matches!(cell.trim(), "" | "?" | "NA" | "na" | "NaN" | "nan" | "null")
}

/// Loads a comma-separated file with a header row.
///
/// With `numeric_columns = None` every column whose non-missing cells all
/// parse as numbers is kept; otherwise exactly the named columns are kept in
/// file order. Rows with a missing selected cell are dropped and counted.
pub fn load_csv(path: impl AsRef<Path>, numeric_columns: Option<&[&str]>) -> Result<CsvLoad> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, numeric_columns)
}

pub fn read_csv<R: Read>(reader: R, numeric_columns: Option<&[&str]>) -> Result<CsvLoad> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let records = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;

    let selected: Vec<usize> = match numeric_columns {
        Some(names) => {
            for name in names {
                if !header.iter().any(|h| h == name) {
                    return Err(Error::UnknownColumn(name.to_string()));
                }
            }
            (0..header.len())
                .filter(|&j| names.contains(&header[j].as_str()))
                .collect()
        }
        None => (0..header.len())
            .filter(|&j| {
                records.iter().all(|r| {
                    let cell = r.get(j).unwrap_or("");
                    is_missing(cell) || cell.parse::<f64>().is_ok_and(f64::is_finite)
                })
            })
            .collect(),
    };
    if selected.is_empty() {
        return Err(Error::InvalidDataset("no numeric columns selected".into()));
    }

    let mut data = Vec::with_capacity(records.len() * selected.len());
    let mut dropped = 0;
    let mut row_buf = Vec::with_capacity(selected.len());
    'rows: for (i, rec) in records.iter().enumerate() {
        row_buf.clear();
        for &j in &selected {
            let cell = rec.get(j).unwrap_or("");
            if is_missing(cell) {
                dropped += 1;
                continue 'rows;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => row_buf.push(v),
                _ => {
                    return Err(Error::NonNumeric {
                        // 1-based data row, header excluded
                        row: i + 1,
                        column: header[j].clone(),
                        value: cell.to_string(),
                    });
                }
            }
        }
        data.extend_from_slice(&row_buf);
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let names = selected.iter().map(|&j| header[j].clone()).collect();
    Ok(CsvLoad {
        dataset: EmpiricalDataset::from_flat(names, data)?,
        dropped_rows: dropped,
    })
}
