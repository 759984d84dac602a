//! Interaction strength from partial dependence.
//!
//! For feature `j` the one-vs-rest statistic compares the centred
//! prediction with the sum of the centred partial dependence on `j` and on
//! all other features jointly, both evaluated at each evaluation row:
//!
//! ```text
//! H_j^2 = sum_i [f(x_i) - PD_j(x_ij) - PD_-j(x_i,-j)]^2 / sum_i f(x_i)^2
//! ```
//!
//! (all three terms centred over the evaluation rows). `H_j = 0` exactly
//! when `f` splits into a function of `x_j` plus a function of the rest.
//!
//! Both partial dependences come from the same batches: replacing `x_j` by
//! grid point `g` in every row gives `PD_j(g)` as the batch mean, and
//! `PD_-j(x_i,-j)` as the grid-weighted mean of row `i` across batches. When
//! the grid holds every distinct value of `x_j` this is the exact
//! double-sum estimator at a cost of `n * distinct(x_j)` predictions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partial_dependence::{evaluation_rows, feature_grid, grid_predictions, mean, PdConfig};
use crate::predictor::{check_dataset, Predictor};
use crate::tabular::Dataset;

/// Centred-prediction energy below which a predictor counts as constant.
pub const CONSTANT_DENOMINATOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureInteraction {
    pub feature: usize,
    pub name: String,
    /// Clipped statistic in `[0, 1]`.
    pub h: f64,
    /// `H^2` before clipping.
    pub h_squared_raw: f64,
    /// Set when the predictions do not vary over the evaluation rows.
    pub constant_predictor: bool,
    /// Set when the feature has no other feature to interact with.
    pub no_partner: bool,
    /// True when every distinct value of the feature was a grid point.
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationMeta {
    pub dataset_rows: usize,
    pub evaluation_rows: usize,
    pub grid_size: usize,
    pub sample_cap: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionReport {
    pub per_feature: Vec<FeatureInteraction>,
    /// Arithmetic mean of the per-feature `h` values.
    pub aggregate_i: f64,
    pub method: String,
    pub aggregation: String,
    pub evaluation: EvaluationMeta,
}

impl InteractionReport {
    pub fn h_values(&self) -> Vec<f64> {
        self.per_feature.iter().map(|f| f.h).collect()
    }

    pub fn h_for(&self, feature: usize) -> Option<f64> {
        self.per_feature.iter().find(|f| f.feature == feature).map(|f| f.h)
    }

    /// Recomputes the aggregate from the stored per-feature values.
    pub fn recompute_aggregate(&self) -> f64 {
        aggregate(&self.h_values())
    }
}

pub fn aggregate(h: &[f64]) -> f64 {
    if h.is_empty() {
        0.0
    } else {
        h.iter().sum::<f64>() / h.len() as f64
    }
}

fn centre(xs: &mut [f64]) {
    let m = mean(xs);
    xs.iter_mut().for_each(|x| *x -= m);
}

/// One-vs-rest interaction statistic for feature `j`, evaluated on exactly
/// the rows of `eval`.
pub fn h_one_vs_rest(
    p: &dyn Predictor,
    eval: &Dataset,
    j: usize,
    grid_size: usize,
) -> Result<FeatureInteraction> {
    check_dataset(p.signature(), eval)?;
    let name = eval
        .columns()
        .get(j)
        .ok_or_else(|| Error::PartialDependence(format!("feature index {j} out of range")))?
        .name
        .clone();
    let mut result = FeatureInteraction {
        feature: j,
        name,
        h: 0.0,
        h_squared_raw: 0.0,
        constant_predictor: false,
        no_partner: false,
        exact: true,
    };
    if eval.n_cols() < 2 {
        result.no_partner = true;
        return Ok(result);
    }

    let mut f = p.predict_dataset(eval)?;
    centre(&mut f);
    let denominator: f64 = f.iter().map(|v| v * v).sum();
    if denominator < CONSTANT_DENOMINATOR {
        result.constant_predictor = true;
        return Ok(result);
    }

    let grid = feature_grid(eval, j, grid_size)?;
    result.exact = grid.exact;
    let preds = grid_predictions(p, eval, j, &grid)?;
    let n = eval.n_rows();
    let pd_values: Vec<f64> = preds.iter().map(|b| mean(b)).collect();

    let mut pd_j = Vec::with_capacity(n);
    for row in eval.cells().rows() {
        pd_j.push(grid.interpolate(&pd_values, row[j])?);
    }
    let total_weight: f64 = grid.weights.iter().sum();
    let mut pd_rest: Vec<f64> = (0..n)
        .map(|i| {
            preds
                .iter()
                .zip(&grid.weights)
                .map(|(batch, w)| w * batch[i])
                .sum::<f64>()
                / total_weight
        })
        .collect();
    centre(&mut pd_j);
    centre(&mut pd_rest);

    let numerator: f64 = (0..n)
        .map(|i| (f[i] - pd_j[i] - pd_rest[i]).powi(2))
        .sum();
    let raw = numerator / denominator;
    result.h_squared_raw = raw;
    result.h = raw.clamp(0.0, 1.0).sqrt();
    Ok(result)
}

/// Per-feature statistics for `features` and their mean, over the
/// evaluation rows that `config` selects from `d`. `d` must hold exactly
/// the predictor's feature columns.
pub fn interaction_strength(
    p: &dyn Predictor,
    d: &Dataset,
    features: &[usize],
    config: &PdConfig,
) -> Result<InteractionReport> {
    if features.is_empty() {
        return Err(Error::PartialDependence("interaction needs at least one feature".into()));
    }
    let eval = evaluation_rows(d, config)?;
    let per_feature = features
        .iter()
        .map(|&j| h_one_vs_rest(p, &eval, j, config.grid_size))
        .collect::<Result<Vec<_>>>()?;
    let aggregate_i = aggregate(&per_feature.iter().map(|f| f.h).collect::<Vec<_>>());
    Ok(InteractionReport {
        per_feature,
        aggregate_i,
        method: "one_vs_rest".into(),
        aggregation: "mean".into(),
        evaluation: EvaluationMeta {
            dataset_rows: d.n_rows(),
            evaluation_rows: eval.n_rows(),
            grid_size: config.grid_size,
            sample_cap: config.sample_cap,
            seed: config.seed,
        },
    })
}
