//! Black-box prediction contract and the reference predictors.
//!
//! Every predictor maps a batch of feature rows to one finite scalar per row
//! and must be a pure function of its input. Classifiers expose the score of
//! one designated class.

mod external;
mod knn;
mod linear;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use external::{connect_external, ExternalModel, DEFAULT_RESPONSE_TIMEOUT};
pub use knn::{fit_knn, KnnModel};
pub use linear::{fit_linear, LinearModel};

use crate::error::{Error, Result};
use crate::tabular::{ColumnMeta, Dataset, Matrix};

pub trait Predictor: Send + Sync {
    /// Expected feature columns, in order.
    fn signature(&self) -> &[ColumnMeta];

    fn predict_batch(&self, rows: &Matrix) -> Result<Vec<f64>>;

    fn predict_row(&self, row: &[f64]) -> Result<f64> {
        let m = Matrix::from_rows(&[row])?;
        Ok(self.predict_batch(&m)?[0])
    }

    /// Predictions for every row of a dataset whose columns match the
    /// signature.
    fn predict_dataset(&self, d: &Dataset) -> Result<Vec<f64>> {
        self.predict_batch(d.cells())
    }
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn signature(&self) -> &[ColumnMeta] {
        (**self).signature()
    }

    fn predict_batch(&self, rows: &Matrix) -> Result<Vec<f64>> {
        (**self).predict_batch(rows)
    }
}

/// Verifies that `rows` has the signature's width and legal categorical cells.
pub fn check_rows(signature: &[ColumnMeta], rows: &Matrix) -> Result<()> {
    if rows.n_cols() != signature.len() {
        return Err(Error::Signature(format!(
            "expected {} columns, got {}",
            signature.len(),
            rows.n_cols()
        )));
    }
    for (i, row) in rows.rows().enumerate() {
        for (meta, &v) in signature.iter().zip(row) {
            if !meta.accepts(v) {
                return Err(Error::Signature(format!(
                    "row {i}: value {v} is not valid for {:?} column '{}'",
                    meta.kind, meta.name
                )));
            }
        }
    }
    Ok(())
}

/// Checks that a dataset's columns line up with a predictor's signature.
pub fn check_dataset(signature: &[ColumnMeta], d: &Dataset) -> Result<()> {
    if d.n_cols() != signature.len() {
        return Err(Error::Signature(format!(
            "predictor expects {} columns, dataset has {}",
            signature.len(),
            d.n_cols()
        )));
    }
    for (want, have) in signature.iter().zip(d.columns()) {
        if want.name != have.name || want.kind != have.kind {
            return Err(Error::Signature(format!(
                "predictor expects {:?} column '{}', dataset has {:?} column '{}'",
                want.kind, want.name, have.kind, have.name
            )));
        }
    }
    Ok(())
}

pub(crate) fn ensure_finite(scores: &[f64]) -> Result<()> {
    match scores.iter().position(|s| !s.is_finite()) {
        Some(row) => Err(Error::NonFinitePrediction { row }),
        None => Ok(()),
    }
}

/// Predicts the same value for every row.
#[derive(Clone, Debug)]
pub struct ConstantModel {
    signature: Vec<ColumnMeta>,
    value: f64,
}

impl ConstantModel {
    pub fn new(signature: Vec<ColumnMeta>, value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Fit("constant must be finite".into()));
        }
        Ok(Self { signature, value })
    }
}

impl Predictor for ConstantModel {
    fn signature(&self) -> &[ColumnMeta] {
        &self.signature
    }

    fn predict_batch(&self, rows: &Matrix) -> Result<Vec<f64>> {
        check_rows(&self.signature, rows)?;
        Ok(vec![self.value; rows.n_rows()])
    }
}

/// `f(x) = x_j * x_k`: the smallest model with a genuine interaction.
#[derive(Clone, Debug)]
pub struct ProductModel {
    signature: Vec<ColumnMeta>,
    j: usize,
    k: usize,
}

impl ProductModel {
    pub fn new(signature: Vec<ColumnMeta>, j: usize, k: usize) -> Result<Self> {
        if j == k {
            return Err(Error::Fit("product model needs two distinct features".into()));
        }
        for idx in [j, k] {
            match signature.get(idx) {
                None => {
                    return Err(Error::Fit(format!(
                        "feature index {idx} out of range for {} features",
                        signature.len()
                    )))
                }
                Some(c) if !c.is_numeric() => {
                    return Err(Error::Fit(format!("feature '{}' is not numeric", c.name)))
                }
                Some(_) => {}
            }
        }
        Ok(Self { signature, j, k })
    }

    pub fn features(&self) -> (usize, usize) {
        (self.j, self.k)
    }
}

impl Predictor for ProductModel {
    fn signature(&self) -> &[ColumnMeta] {
        &self.signature
    }

    fn predict_batch(&self, rows: &Matrix) -> Result<Vec<f64>> {
        check_rows(&self.signature, rows)?;
        let out: Vec<f64> = rows.rows().map(|r| r[self.j] * r[self.k]).collect();
        ensure_finite(&out)?;
        Ok(out)
    }
}

/// Model selection syntax: `linear`, `knn:<k>`, `product:<j>,<k>` or
/// `external:<command line>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ModelSpec {
    Linear,
    Knn(usize),
    Product(usize, usize),
    External(Vec<String>),
}

impl ModelSpec {
    /// Whether building this model requires a target column.
    pub fn needs_target(&self) -> bool {
        matches!(self, ModelSpec::Linear | ModelSpec::Knn(_))
    }

    /// Fits or connects the model. `train` must carry a target for the
    /// fitted kinds; the predictor's signature is the feature columns.
    pub fn build(&self, train: &Dataset) -> Result<Box<dyn Predictor>> {
        let signature = train.features().columns().to_vec();
        Ok(match self {
            ModelSpec::Linear => Box::new(fit_linear(train)?),
            ModelSpec::Knn(k) => Box::new(fit_knn(train, *k)?),
            ModelSpec::Product(j, k) => Box::new(ProductModel::new(signature, *j, *k)?),
            ModelSpec::External(argv) => Box::new(connect_external(argv, signature)?),
        })
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Linear => write!(f, "linear"),
            ModelSpec::Knn(k) => write!(f, "knn:{k}"),
            ModelSpec::Product(j, k) => write!(f, "product:{j},{k}"),
            ModelSpec::External(argv) => write!(f, "external:{}", argv.join(" ")),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        match (kind, arg) {
            ("linear", None) => Ok(ModelSpec::Linear),
            ("knn", Some(a)) => match a.trim().parse::<usize>() {
                Ok(k) if k >= 1 => Ok(ModelSpec::Knn(k)),
                _ => Err(format!("knn needs a positive neighbour count, got '{a}'")),
            },
            ("product", Some(a)) => {
                let parts: Vec<_> = a.split(',').map(|p| p.trim().parse::<usize>()).collect();
                match parts.as_slice() {
                    [Ok(j), Ok(k)] => Ok(ModelSpec::Product(*j, *k)),
                    _ => Err(format!("product needs two feature indices 'j,k', got '{a}'")),
                }
            }
            ("external", Some(cmd)) => {
                let argv: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
                if argv.is_empty() {
                    Err("external needs a command".into())
                } else {
                    Ok(ModelSpec::External(argv))
                }
            }
            _ => Err(format!(
                "unknown model '{s}'; expected linear, knn:<k>, product:<j>,<k> or external:<cmd>"
            )),
        }
    }
}

impl From<ModelSpec> for String {
    fn from(m: ModelSpec) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for ModelSpec {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}
