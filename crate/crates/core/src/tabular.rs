//! Column-typed tabular data.
//!
//! A [`Dataset`] stores every cell as `f64`. Numeric columns hold their values
//! directly; categorical columns hold the index of the cell's level in
//! [`ColumnMeta::levels`]. Keeping one representation lets partial dependence
//! substitute grid values into rows without caring about column kinds.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
    /// Distinct levels in first-appearance order; empty for numeric columns.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
}

impl ColumnMeta {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Numeric,
            levels: Vec::new(),
        }
    }

    pub fn categorical(name: impl Into<String>, levels: Vec<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical,
            levels,
        }
    }

    pub fn is_numeric(&self) -> bool {
        self.kind == ColumnKind::Numeric
    }

    /// Checks that `value` is a legal cell for this column.
    pub fn accepts(&self, value: f64) -> bool {
        match self.kind {
            ColumnKind::Numeric => value.is_finite(),
            ColumnKind::Categorical => {
                value >= 0.0 && value.fract() == 0.0 && (value as usize) < self.levels.len()
            }
        }
    }

    /// Renders a cell the way it is written to CSV.
    pub fn format_cell(&self, value: f64) -> String {
        match self.kind {
            ColumnKind::Numeric => format!("{value}"),
            ColumnKind::Categorical => self.levels[value as usize].clone(),
        }
    }
}

/// Dense row-major matrix of cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::Dataset(format!(
                "matrix of {n_rows}x{n_cols} needs {} cells, got {}",
                n_rows * n_cols,
                data.len()
            )));
        }
        Ok(Self {
            n_rows,
            n_cols,
            data,
        })
    }

    /// Builds a matrix from row vectors; all rows must share one length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n_cols {
                return Err(Error::Dataset(format!(
                    "row {i} has {} cells, expected {n_cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            n_rows: rows.len(),
            n_cols,
            data,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact panics on a zero chunk size
        let width = self.n_cols.max(1);
        self.data
            .chunks_exact(width)
            .take(if self.n_cols == 0 { 0 } else { self.n_rows })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n_cols + j] = value;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Copy of the matrix with column `j` overwritten by `value` in every row.
    pub fn with_column_fixed(&self, j: usize, value: f64) -> Matrix {
        self.with_columns_fixed(&[j], &[value])
    }

    /// Copy of the matrix with each column in `cols` overwritten by the
    /// matching entry of `values`.
    pub fn with_columns_fixed(&self, cols: &[usize], values: &[f64]) -> Matrix {
        let mut out = self.clone();
        for i in 0..out.n_rows {
            for (&c, &v) in cols.iter().zip(values) {
                out.set(i, c, v);
            }
        }
        out
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    name: String,
    columns: Vec<ColumnMeta>,
    cells: Matrix,
    target: Option<usize>,
    dropped_rows: usize,
}

impl Dataset {
    /// Builds a dataset and checks every invariant: at least one row and one
    /// column, unique column names, legal cells.
    pub fn new(name: impl Into<String>, columns: Vec<ColumnMeta>, cells: Matrix) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Dataset("dataset has no columns".into()));
        }
        if cells.n_rows() == 0 {
            return Err(Error::Dataset("dataset has no rows".into()));
        }
        if cells.n_cols() != columns.len() {
            return Err(Error::Dataset(format!(
                "{} columns declared but rows have {} cells",
                columns.len(),
                cells.n_cols()
            )));
        }
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Dataset(format!("duplicate column name '{}'", c.name)));
            }
            if c.kind == ColumnKind::Categorical {
                let mut lv = HashSet::new();
                for l in &c.levels {
                    if l.is_empty() || !lv.insert(l.as_str()) {
                        return Err(Error::Dataset(format!(
                            "column '{}' has an empty or repeated level",
                            c.name
                        )));
                    }
                }
            }
        }
        for (i, row) in cells.rows().enumerate() {
            for (c, &v) in columns.iter().zip(row) {
                if !c.accepts(v) {
                    return Err(Error::Dataset(format!(
                        "row {i}, column '{}': illegal cell value {v}",
                        c.name
                    )));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            columns,
            cells,
            target: None,
            dropped_rows: 0,
        })
    }

    /// All-numeric dataset from row vectors. Mostly useful in tests.
    pub fn from_numeric_rows<R: AsRef<[f64]>>(names: &[&str], rows: &[R]) -> Result<Self> {
        let columns = names.iter().map(|n| ColumnMeta::numeric(*n)).collect();
        Self::new("inline", columns, Matrix::from_rows(rows)?)
    }

    pub fn with_target(mut self, name: &str) -> Result<Self> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| Error::Dataset(format!("no target column named '{name}'")))?;
        self.target = Some(idx);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn columns(&self) -> &[ColumnMeta] {
        &self.columns
    }

    pub fn cells(&self) -> &Matrix {
        &self.cells
    }

    pub fn n_rows(&self) -> usize {
        self.cells.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn target(&self) -> Option<usize> {
        self.target
    }

    /// Number of rows removed during ingestion because of missing values.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.cells.row(i)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.cells.column(j)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Indices of all columns except the target.
    pub fn feature_indices(&self) -> Vec<usize> {
        (0..self.n_cols()).filter(|&j| Some(j) != self.target).collect()
    }

    /// The feature columns alone, without the target.
    pub fn features(&self) -> Dataset {
        let idx = self.feature_indices();
        self.select_columns(&idx)
    }

    /// Target values; categorical targets are returned as their level index,
    /// which encodes a two-level target as 0/1.
    pub fn target_values(&self) -> Result<Vec<f64>> {
        let t = self
            .target
            .ok_or_else(|| Error::Dataset(format!("dataset '{}' has no target", self.name)))?;
        Ok(self.column(t))
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols());
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        Dataset {
            name: self.name.clone(),
            columns: self.columns.clone(),
            cells: Matrix {
                n_rows: rows.len(),
                n_cols: self.n_cols(),
                data,
            },
            target: self.target,
            dropped_rows: self.dropped_rows,
        }
    }

    /// Projection onto `cols` in the given order. The target survives only
    /// if it is among them.
    pub fn select_columns(&self, cols: &[usize]) -> Dataset {
        let mut data = Vec::with_capacity(self.n_rows() * cols.len());
        for row in self.cells.rows() {
            data.extend(cols.iter().map(|&c| row[c]));
        }
        Dataset {
            name: self.name.clone(),
            columns: cols.iter().map(|&c| self.columns[c].clone()).collect(),
            cells: Matrix {
                n_rows: self.n_rows(),
                n_cols: cols.len(),
                data,
            },
            target: self.target.and_then(|t| cols.iter().position(|&c| c == t)),
            dropped_rows: self.dropped_rows,
        }
    }

    /// Appends a column. Fails on a duplicate name or length mismatch.
    pub fn with_column(&self, meta: ColumnMeta, values: &[f64]) -> Result<Dataset> {
        if values.len() != self.n_rows() {
            return Err(Error::Dataset(format!(
                "column '{}' has {} values for {} rows",
                meta.name,
                values.len(),
                self.n_rows()
            )));
        }
        let mut columns = self.columns.clone();
        columns.push(meta);
        let mut data = Vec::with_capacity(self.n_rows() * columns.len());
        for (row, &v) in self.cells.rows().zip(values) {
            data.extend_from_slice(row);
            data.push(v);
        }
        let mut out = Dataset::new(
            self.name.clone(),
            columns.clone(),
            Matrix::new(self.n_rows(), columns.len(), data)?,
        )?;
        out.target = self.target;
        out.dropped_rows = self.dropped_rows;
        Ok(out)
    }

    /// Renders the dataset as CSV with canonical numeric formatting.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for row in self.cells.rows() {
            w.write_record(self.columns.iter().zip(row).map(|(c, &v)| c.format_cell(v)))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Csv(e.to_string()))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()?).map_err(|e| Error::io(path, e))
    }

    /// SHA-256 of the canonical CSV rendering, hex encoded.
    pub fn content_hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_csv_string()?.as_bytes());
        Ok(hex::encode(digest))
    }
}

#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    /// Column kinds that bypass inference.
    pub overrides: HashMap<String, ColumnKind>,
    /// Drop rows with missing cells instead of failing.
    pub drop_missing: bool,
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok()
}

fn is_missing(cell: &str) -> bool {
    cell.trim().is_empty()
}

pub fn load_csv(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    parse_csv(&name, &text, options)
}

/// Parses CSV text with a header row. Columns not listed in
/// `options.overrides` are numeric when every non-missing cell parses as a
/// number, categorical otherwise.
pub fn parse_csv(name: &str, text: &str, options: &LoadOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Csv(format!("header: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(Error::Csv("header row missing".into()));
    }
    for unknown in options.overrides.keys().filter(|k| !header.contains(k)) {
        return Err(Error::Dataset(format!("override for unknown column '{unknown}'")));
    }

    let mut records: Vec<(u64, Vec<String>)> = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(Error::Csv(format!(
                "line {line}: expected {} fields, found {}",
                header.len(),
                rec.len()
            )));
        }
        records.push((line, rec.iter().map(str::to_string).collect()));
    }
    if records.is_empty() {
        return Err(Error::Dataset("no data rows".into()));
    }

    let kinds: Vec<ColumnKind> = header
        .iter()
        .enumerate()
        .map(|(j, h)| {
            options.overrides.get(h).copied().unwrap_or_else(|| {
                let numeric = records
                    .iter()
                    .map(|(_, r)| r[j].as_str())
                    .filter(|c| !is_missing(c))
                    .all(|c| parse_number(c).is_some());
                if numeric {
                    ColumnKind::Numeric
                } else {
                    ColumnKind::Categorical
                }
            })
        })
        .collect();

    let mut kept = Vec::with_capacity(records.len());
    let mut dropped = 0;
    'rows: for (line, rec) in &records {
        for (j, cell) in rec.iter().enumerate() {
            let missing = match kinds[j] {
                ColumnKind::Numeric => !parse_number(cell).is_some_and(f64::is_finite),
                ColumnKind::Categorical => is_missing(cell),
            };
            if missing {
                if options.drop_missing {
                    dropped += 1;
                    continue 'rows;
                }
                return Err(Error::MissingValue {
                    line: *line,
                    column: header[j].clone(),
                });
            }
        }
        kept.push(rec);
    }
    if kept.is_empty() {
        return Err(Error::Dataset("no complete data rows".into()));
    }

    let mut columns: Vec<ColumnMeta> = header
        .iter()
        .zip(&kinds)
        .map(|(h, &k)| ColumnMeta {
            name: h.clone(),
            kind: k,
            levels: Vec::new(),
        })
        .collect();
    let mut level_index: Vec<HashMap<String, usize>> = vec![HashMap::new(); columns.len()];
    let mut data = Vec::with_capacity(kept.len() * columns.len());
    for rec in &kept {
        for (j, cell) in rec.iter().enumerate() {
            let value = match kinds[j] {
                ColumnKind::Numeric => parse_number(cell).expect("checked above"),
                ColumnKind::Categorical => {
                    let level = cell.trim().to_string();
                    let next = level_index[j].len();
                    let idx = *level_index[j].entry(level.clone()).or_insert_with(|| {
                        columns[j].levels.push(level);
                        next
                    });
                    idx as f64
                }
            };
            data.push(value);
        }
    }
    let n = kept.len();
    let mut ds = Dataset::new(name, columns, Matrix::new(n, header.len(), data)?)?;
    ds.dropped_rows = dropped;
    Ok(ds)
}

/// Pearson correlation of two slices. Fails when either side is constant.
pub fn pearson(xs: &[f64], ys: &[f64]) -> std::result::Result<f64, PearsonError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(PearsonError::TooShort);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(PearsonError::ConstantFirst);
    }
    if syy == 0.0 {
        return Err(PearsonError::ConstantSecond);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PearsonError {
    TooShort,
    ConstantFirst,
    ConstantSecond,
}

pub fn pearson_correlation(d: &Dataset, col_a: usize, col_b: usize) -> Result<f64> {
    for &c in &[col_a, col_b] {
        let meta = d
            .columns()
            .get(c)
            .ok_or_else(|| Error::Dataset(format!("column index {c} out of range")))?;
        if !meta.is_numeric() {
            return Err(Error::Dataset(format!(
                "correlation needs numeric columns; '{}' is categorical",
                meta.name
            )));
        }
    }
    match pearson(&d.column(col_a), &d.column(col_b)) {
        Ok(r) => Ok(r),
        Err(PearsonError::TooShort) => {
            Err(Error::Dataset("correlation needs at least two rows".into()))
        }
        Err(PearsonError::ConstantFirst) => Err(Error::UndefinedCorrelation {
            column: d.columns()[col_a].name.clone(),
        }),
        Err(PearsonError::ConstantSecond) => Err(Error::UndefinedCorrelation {
            column: d.columns()[col_b].name.clone(),
        }),
    }
}

/// Row indices chosen by [`sample_rows`], in ascending order.
pub fn sample_indices(n: usize, k: usize, seed: u64) -> Vec<usize> {
    if k >= n {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = index::sample(&mut rng, n, k).into_vec();
    idx.sort_unstable();
    idx
}

/// Samples `k` rows without replacement, keeping their original order.
/// Returns every row when `k >= n`.
pub fn sample_rows(d: &Dataset, k: usize, seed: u64) -> Result<Dataset> {
    if k == 0 {
        return Err(Error::Dataset("sample size must be at least 1".into()));
    }
    if k >= d.n_rows() {
        return Ok(d.clone());
    }
    Ok(d.select_rows(&sample_indices(d.n_rows(), k, seed)))
}

/// Short human-readable summary used in reports and diagnostics.
pub fn describe(d: &Dataset) -> String {
    let mut s = format!("{} ({} rows x {} columns)", d.name(), d.n_rows(), d.n_cols());
    if d.dropped_rows() > 0 {
        let _ = write!(s, ", {} rows dropped", d.dropped_rows());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<Dataset> {
        parse_csv("t", text, &LoadOptions::default())
    }

    #[test]
    fn parses_numeric_csv() {
        let d = parse("a,b\n1,2\n3,4\n5,6").unwrap();
        assert_eq!(d.n_rows(), 3);
        assert!(d.columns().iter().all(ColumnMeta::is_numeric));
        assert_eq!(d.row(2), &[5.0, 6.0]);
    }

    #[test]
    fn infers_categorical_levels_in_first_appearance_order() {
        let d = parse("color,x\nred,1\nblue,2\nred,3").unwrap();
        assert_eq!(d.columns()[0].kind, ColumnKind::Categorical);
        assert_eq!(d.columns()[0].levels, vec!["red", "blue"]);
        assert_eq!(d.column(0), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn drops_rows_with_missing_cells() {
        let opts = LoadOptions {
            drop_missing: true,
            ..Default::default()
        };
        let d = parse_csv("t", "a,b,c\n1,2,3\n1,,3\n4,5,6", &opts).unwrap();
        assert_eq!(d.n_rows(), 2);
        assert_eq!(d.dropped_rows(), 1);
    }

    #[test]
    fn missing_without_drop_is_an_error() {
        let err = parse("a,b\n1,2\n,3").unwrap_err();
        assert!(matches!(err, Error::MissingValue { line: 3, .. }), "{err}");
    }

    #[test]
    fn non_finite_numbers_count_as_missing() {
        assert!(matches!(parse("a\n1\ninf"), Err(Error::MissingValue { .. })));
        assert!(matches!(parse("a\n1\nNaN"), Err(Error::MissingValue { .. })));
    }

    #[test]
    fn scientific_notation_is_numeric() {
        let d = parse("a\n1e3\n-2.5E-2\n.5").unwrap();
        assert!(d.columns()[0].is_numeric());
        assert_eq!(d.column(0), vec![1000.0, -0.025, 0.5]);
    }

    #[test]
    fn override_forces_categorical() {
        let mut opts = LoadOptions::default();
        opts.overrides.insert("zip".into(), ColumnKind::Categorical);
        let d = parse_csv("t", "zip\n10001\n94105\n10001", &opts).unwrap();
        assert_eq!(d.columns()[0].levels, vec!["10001", "94105"]);
    }

    #[test]
    fn ragged_rows_rejected() {
        let err = parse("a,b\n1,2\n3").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn zero_rows_rejected() {
        assert!(parse("a,b\n").is_err());
    }

    #[test]
    fn duplicate_columns_rejected() {
        assert!(parse("a,a\n1,2").is_err());
    }

    #[test]
    fn unreadable_file() {
        let err = load_csv("/nonexistent/file.csv", &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn pearson_examples() {
        let d = Dataset::from_numeric_rows(&["x", "y", "z"], &[[1.0, 2.0, 3.0], [2.0, 4.0, 2.0], [3.0, 6.0, 1.0]])
            .unwrap();
        assert_eq!(pearson_correlation(&d, 0, 1).unwrap(), 1.0);
        assert_eq!(pearson_correlation(&d, 0, 2).unwrap(), -1.0);
        // hand evaluation: deviations (-1.5,-.5,.5,1.5) and (-1.5,.5,-.5,1.5),
        // cross sum 4, both sums of squares 5, r = 4/5
        let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-15);
    }

    #[test]
    fn pearson_constant_column_is_an_error() {
        let d = Dataset::from_numeric_rows(&["x", "c"], &[[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]).unwrap();
        let err = pearson_correlation(&d, 0, 1).unwrap_err();
        assert!(matches!(err, Error::UndefinedCorrelation { ref column } if column == "c"));
    }

    #[test]
    fn sampling_returns_everything_when_k_exceeds_n() {
        let rows: Vec<[f64; 1]> = (0..5).map(|i| [i as f64]).collect();
        let d = Dataset::from_numeric_rows(&["x"], &rows).unwrap();
        assert_eq!(sample_rows(&d, 10, 3).unwrap(), d);
        assert!(sample_rows(&d, 0, 3).is_err());
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let rows: Vec<[f64; 1]> = (0..100).map(|i| [i as f64]).collect();
        let d = Dataset::from_numeric_rows(&["x"], &rows).unwrap();
        let a = sample_rows(&d, 10, 7).unwrap();
        let b = sample_rows(&d, 10, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_rows(), 10);
        let col = a.column(0);
        assert!(col.windows(2).all(|w| w[0] < w[1]));
    }

    proptest! {
        #[test]
        fn csv_round_trip(rows in prop::collection::vec((-1e6f64..1e6, 0usize..3), 1..20)) {
            let levels = ["lo", "mid", "hi"];
            let mut text = String::from("x,level\n");
            for (x, l) in &rows {
                text.push_str(&format!("{x},{}\n", levels[*l]));
            }
            let d = parse(&text).unwrap();
            let again = parse(&d.to_csv_string().unwrap()).unwrap();
            prop_assert_eq!(d.column(0), again.column(0));
            prop_assert_eq!(&d.columns()[1].levels, &again.columns()[1].levels);
        }

        #[test]
        fn correlation_bounded_and_symmetric(
            pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..40)
        ) {
            let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            if let (Ok(a), Ok(b)) = (pearson(&xs, &ys), pearson(&ys, &xs)) {
                prop_assert!((-1.0..=1.0).contains(&a));
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn exact_linear_relation_has_unit_correlation(
            xs in prop::collection::vec(-100i32..100, 3..30),
            slope in prop::sample::select(vec![-3.0f64, -1.0, 0.5, 2.0]),
        ) {
            let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
            prop_assume!(xs.iter().any(|&x| x != xs[0]));
            let ys: Vec<f64> = xs.iter().map(|x| slope * x + 1.0).collect();
            let r = pearson(&xs, &ys).unwrap();
            prop_assert!((r.abs() - 1.0).abs() < 1e-12);
            prop_assert_eq!(r.signum(), slope.signum());
        }
    }
}
