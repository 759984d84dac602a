use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_rows, ensure_finite, Predictor};
use crate::error::{Error, Result};
use crate::tabular::{ColumnMeta, Dataset, Matrix};

/// `f(x) = intercept + sum(coefficients[j] * x[j])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    signature: Vec<ColumnMeta>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl LinearModel {
    pub fn new(signature: Vec<ColumnMeta>, intercept: f64, coefficients: Vec<f64>) -> Result<Self> {
        if signature.len() != coefficients.len() {
            return Err(Error::Fit(format!(
                "{} coefficients for {} features",
                coefficients.len(),
                signature.len()
            )));
        }
        if let Some(c) = signature.iter().find(|c| !c.is_numeric()) {
            return Err(Error::Fit(format!(
                "linear model needs numeric features; '{}' is categorical",
                c.name
            )));
        }
        Ok(Self {
            signature,
            intercept,
            coefficients,
        })
    }

    fn eval(&self, row: &[f64]) -> f64 {
        self.coefficients
            .iter()
            .zip(row)
            .fold(self.intercept, |acc, (c, x)| acc + c * x)
    }
}

impl Predictor for LinearModel {
    fn signature(&self) -> &[ColumnMeta] {
        &self.signature
    }

    fn predict_batch(&self, rows: &Matrix) -> Result<Vec<f64>> {
        check_rows(&self.signature, rows)?;
        let out: Vec<f64> = rows.rows().map(|r| self.eval(r)).collect();
        ensure_finite(&out)?;
        Ok(out)
    }
}

/// Ordinary least squares on the dataset's features against its target.
///
/// Solved on mean-centred columns so that the intercept is recovered as
/// `mean(y) - beta . mean(x)`; a constant target therefore yields zero
/// coefficients exactly.
pub fn fit_linear(d: &Dataset) -> Result<LinearModel> {
    let y = d.target_values()?;
    let features = d.features();
    let (n, m) = (features.n_rows(), features.n_cols());
    if let Some(c) = features.columns().iter().find(|c| !c.is_numeric()) {
        return Err(Error::Fit(format!(
            "linear model needs numeric features; '{}' is categorical",
            c.name
        )));
    }
    if n <= m {
        return Err(Error::Fit(format!("{n} rows cannot determine {m} coefficients and an intercept")));
    }

    let means: Vec<f64> = (0..m)
        .map(|j| features.column(j).iter().sum::<f64>() / n as f64)
        .collect();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let x = DMatrix::from_fn(n, m, |i, j| features.row(i)[j] - means[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));

    let svd = x.svd(true, true);
    let s_max = svd.singular_values.max();
    let tol = s_max * (n.max(m) as f64) * f64::EPSILON;
    if s_max == 0.0 || svd.singular_values.min() <= tol {
        return Err(Error::Fit("design matrix is rank deficient".into()));
    }
    let beta = svd
        .solve(&yc, tol)
        .map_err(|e| Error::Fit(format!("least squares solve failed: {e}")))?;

    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let intercept = y_mean - coefficients.iter().zip(&means).map(|(b, mu)| b * mu).sum::<f64>();
    LinearModel::new(features.columns().to_vec(), intercept, coefficients)
}
