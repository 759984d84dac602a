//! One- and two-dimensional partial dependence.
//!
//! The partial dependence of a feature at value `v` is the mean prediction
//! over the evaluation rows after overwriting that feature with `v` in every
//! row. Values are computed on a grid:
//!
//! * a numeric feature with at most `grid_size` distinct values uses every
//!   distinct value, so the curve is exact at each observed value;
//! * otherwise the grid holds the distinct values among `grid_size`
//!   empirical quantiles at probabilities `0, 1/(G-1), ..., 1`, so the
//!   minimum and maximum are always grid points;
//! * a categorical feature uses all of its levels.
//!
//! Between grid points the curve is linearly interpolated; outside the grid
//! it is clamped to the end values. Each evaluation row is spread over its
//! bracketing grid points with its interpolation weights, and curves are
//! centred by the resulting weighted mean. This makes the mean of the
//! interpolated, centred curve over the evaluation rows exactly zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::{check_dataset, Predictor};
use crate::tabular::{sample_rows, ColumnKind, Dataset};

pub const DEFAULT_GRID_SIZE: usize = 20;
pub const DEFAULT_SAMPLE_CAP: usize = 500;

/// Grid and sampling parameters shared by the PD based computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PdConfig {
    pub grid_size: usize,
    pub sample_cap: usize,
    pub seed: u64,
}

impl Default for PdConfig {
    fn default() -> Self {
        Self {
            grid_size: DEFAULT_GRID_SIZE,
            sample_cap: DEFAULT_SAMPLE_CAP,
            seed: 0,
        }
    }
}

/// The rows PD averages over: the whole dataset when it has at most
/// `sample_cap` rows, a seeded sample otherwise.
pub fn evaluation_rows(d: &Dataset, config: &PdConfig) -> Result<Dataset> {
    if config.sample_cap == 0 {
        return Err(Error::PartialDependence("sample cap must be at least 1".into()));
    }
    sample_rows(d, config.sample_cap, config.seed)
}

/// Grid points of one feature plus the interpolation weight mass that the
/// evaluation rows put on each point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureGrid {
    pub kind: ColumnKind,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// True when every distinct evaluation value is a grid point.
    pub exact: bool,
}

/// Position of a value on a grid: weight `1 - t` on `lo`, `t` on `hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Bracket {
    pub lo: usize,
    pub hi: usize,
    pub t: f64,
}

impl FeatureGrid {
    pub(crate) fn locate(&self, v: f64) -> Result<Bracket> {
        match self.kind {
            ColumnKind::Categorical => {
                if v >= 0.0 && v.fract() == 0.0 && (v as usize) < self.points.len() {
                    let i = v as usize;
                    Ok(Bracket { lo: i, hi: i, t: 0.0 })
                } else {
                    Err(Error::PartialDependence(format!("{v} is not a level index")))
                }
            }
            ColumnKind::Numeric => {
                if !v.is_finite() {
                    return Err(Error::PartialDependence(format!("cannot place {v} on a grid")));
                }
                let last = self.points.len() - 1;
                let hi = self.points.partition_point(|&p| p <= v);
                if hi == 0 {
                    return Ok(Bracket { lo: 0, hi: 0, t: 0.0 });
                }
                if hi > last {
                    return Ok(Bracket { lo: last, hi: last, t: 0.0 });
                }
                let lo = hi - 1;
                if self.points[lo] == v {
                    return Ok(Bracket { lo, hi: lo, t: 0.0 });
                }
                let t = (v - self.points[lo]) / (self.points[hi] - self.points[lo]);
                Ok(Bracket { lo, hi, t })
            }
        }
    }

    /// Interpolates `values` (one per grid point) at `v`.
    pub fn interpolate(&self, values: &[f64], v: f64) -> Result<f64> {
        let b = self.locate(v)?;
        Ok(if b.lo == b.hi {
            values[b.lo]
        } else {
            (1.0 - b.t) * values[b.lo] + b.t * values[b.hi]
        })
    }
}

/// Type-7 empirical quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn feature_grid(eval: &Dataset, j: usize, grid_size: usize) -> Result<FeatureGrid> {
    let meta = eval.columns().get(j).ok_or_else(|| {
        Error::PartialDependence(format!(
            "feature index {j} out of range for {} columns",
            eval.n_cols()
        ))
    })?;
    let column = eval.column(j);
    let (points, exact) = match meta.kind {
        ColumnKind::Categorical => ((0..meta.levels.len()).map(|l| l as f64).collect(), true),
        ColumnKind::Numeric => {
            if grid_size < 2 {
                return Err(Error::PartialDependence(format!(
                    "grid size must be at least 2, got {grid_size}"
                )));
            }
            let mut sorted = column.clone();
            sorted.sort_by(f64::total_cmp);
            let mut distinct = sorted.clone();
            distinct.dedup();
            if distinct.len() < 2 {
                return Err(Error::PartialDependence(format!(
                    "feature '{}' is constant on the evaluation rows",
                    meta.name
                )));
            }
            if distinct.len() <= grid_size {
                (distinct, true)
            } else {
                let mut pts: Vec<f64> = (0..grid_size)
                    .map(|g| quantile_sorted(&sorted, g as f64 / (grid_size - 1) as f64))
                    .collect();
                pts.dedup();
                (pts, false)
            }
        }
    };
    let mut grid = FeatureGrid {
        kind: meta.kind,
        weights: vec![0.0; points.len()],
        points,
        exact,
    };
    for &v in &column {
        let b = grid.locate(v)?;
        grid.weights[b.lo] += 1.0 - b.t;
        if b.hi != b.lo {
            grid.weights[b.hi] += b.t;
        }
    }
    Ok(grid)
}

/// Predictions for every evaluation row with feature `j` set to each grid
/// point in turn: `out[g][i]`.
pub(crate) fn grid_predictions(
    p: &dyn Predictor,
    eval: &Dataset,
    j: usize,
    grid: &FeatureGrid,
) -> Result<Vec<Vec<f64>>> {
    grid.points
        .iter()
        .map(|&g| p.predict_batch(&eval.cells().with_column_fixed(j, g)))
        .collect()
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdGrid {
    pub feature: usize,
    pub feature_name: String,
    pub grid: FeatureGrid,
    pub values: Vec<f64>,
    pub centered_values: Vec<f64>,
    /// Weighted mean subtracted from `values`.
    pub center: f64,
}

impl PdGrid {
    pub fn points(&self) -> &[f64] {
        &self.grid.points
    }

    pub fn value_at(&self, v: f64) -> Result<f64> {
        self.grid.interpolate(&self.values, v)
    }

    pub fn centered_at(&self, v: f64) -> Result<f64> {
        self.grid.interpolate(&self.centered_values, v)
    }

    pub(crate) fn from_predictions(
        feature: usize,
        feature_name: String,
        grid: FeatureGrid,
        predictions: &[Vec<f64>],
    ) -> Self {
        let values: Vec<f64> = predictions.iter().map(|p| mean(p)).collect();
        let center = weighted_mean(&values, &grid.weights);
        let centered_values = values.iter().map(|v| v - center).collect();
        Self {
            feature,
            feature_name,
            grid,
            values,
            centered_values,
            center,
        }
    }
}

/// Partial dependence of `p` on feature `j` over the evaluation rows `eval`.
pub fn pd_curve(p: &dyn Predictor, eval: &Dataset, j: usize, grid_size: usize) -> Result<PdGrid> {
    check_dataset(p.signature(), eval)?;
    let grid = feature_grid(eval, j, grid_size)?;
    let preds = grid_predictions(p, eval, j, &grid)?;
    Ok(PdGrid::from_predictions(
        j,
        eval.columns()[j].name.clone(),
        grid,
        &preds,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdGrid2 {
    pub features: (usize, usize),
    pub grids: (FeatureGrid, FeatureGrid),
    /// `values[g][h]` for grid points `g` of the first feature and `h` of
    /// the second.
    pub values: Vec<Vec<f64>>,
    pub centered_values: Vec<Vec<f64>>,
    /// Joint interpolation weight mass of the evaluation rows.
    pub weights: Vec<Vec<f64>>,
    pub center: f64,
}

impl PdGrid2 {
    fn interpolate(&self, table: &[Vec<f64>], a: f64, b: f64) -> Result<f64> {
        let ba = self.grids.0.locate(a)?;
        let bb = self.grids.1.locate(b)?;
        let at = |g: usize| (1.0 - bb.t) * table[g][bb.lo] + bb.t * table[g][bb.hi];
        Ok((1.0 - ba.t) * at(ba.lo) + ba.t * at(ba.hi))
    }

    pub fn value_at(&self, a: f64, b: f64) -> Result<f64> {
        self.interpolate(&self.values, a, b)
    }

    pub fn centered_at(&self, a: f64, b: f64) -> Result<f64> {
        self.interpolate(&self.centered_values, a, b)
    }
}

/// Two-way partial dependence of `p` on features `j` and `k`.
pub fn pd_surface(
    p: &dyn Predictor,
    eval: &Dataset,
    j: usize,
    k: usize,
    grid_size: usize,
) -> Result<PdGrid2> {
    check_dataset(p.signature(), eval)?;
    if j == k {
        return Err(Error::PartialDependence("two-way PD needs distinct features".into()));
    }
    let gj = feature_grid(eval, j, grid_size)?;
    let gk = feature_grid(eval, k, grid_size)?;
    let mut values = vec![vec![0.0; gk.points.len()]; gj.points.len()];
    for (g, &a) in gj.points.iter().enumerate() {
        for (h, &b) in gk.points.iter().enumerate() {
            let batch = eval.cells().with_columns_fixed(&[j, k], &[a, b]);
            values[g][h] = mean(&p.predict_batch(&batch)?);
        }
    }
    let mut weights = vec![vec![0.0; gk.points.len()]; gj.points.len()];
    for row in eval.cells().rows() {
        let ba = gj.locate(row[j])?;
        let bb = gk.locate(row[k])?;
        for (g, wa) in [(ba.lo, 1.0 - ba.t), (ba.hi, ba.t)] {
            for (h, wb) in [(bb.lo, 1.0 - bb.t), (bb.hi, bb.t)] {
                // a degenerate bracket lists the same point twice with t = 0
                weights[g][h] += wa * wb;
            }
        }
    }
    let total: f64 = weights.iter().flatten().sum();
    let center = values
        .iter()
        .flatten()
        .zip(weights.iter().flatten())
        .map(|(v, w)| v * w)
        .sum::<f64>()
        / total;
    let centered_values = values
        .iter()
        .map(|r| r.iter().map(|v| v - center).collect())
        .collect();
    Ok(PdGrid2 {
        features: (j, k),
        grids: (gj, gk),
        values,
        centered_values,
        weights,
        center,
    })
}

/// Partial dependence of a group of columns replaced jointly.
///
/// The group's "grid" is a set of member-value combinations that actually
/// occur in the evaluation rows: all distinct combinations with their counts
/// when there are at most `grid_size`, otherwise `grid_size` rows taken at an
/// even stride. The curve at an arbitrary combination is evaluated directly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupPd {
    pub members: Vec<usize>,
    pub combos: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
    pub center: f64,
    pub exact: bool,
}

impl GroupPd {
    /// Centred group PD at the given member values.
    pub fn centered_at(&self, p: &dyn Predictor, eval: &Dataset, values: &[f64]) -> Result<f64> {
        if let Some(g) = self.combos.iter().position(|c| c.as_slice() == values) {
            return Ok(self.values[g] - self.center);
        }
        let batch = eval.cells().with_columns_fixed(&self.members, values);
        Ok(mean(&p.predict_batch(&batch)?) - self.center)
    }
}

pub fn pd_group(
    p: &dyn Predictor,
    eval: &Dataset,
    members: &[usize],
    grid_size: usize,
) -> Result<GroupPd> {
    check_dataset(p.signature(), eval)?;
    if members.is_empty() {
        return Err(Error::PartialDependence("empty feature group".into()));
    }
    if let Some(&bad) = members.iter().find(|&&m| m >= eval.n_cols()) {
        return Err(Error::PartialDependence(format!("feature index {bad} out of range")));
    }
    let mut all: Vec<Vec<f64>> = eval
        .cells()
        .rows()
        .map(|r| members.iter().map(|&m| r[m]).collect())
        .collect();
    let cmp = |a: &Vec<f64>, b: &Vec<f64>| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    };
    let mut sorted = all.clone();
    sorted.sort_by(cmp);
    let mut combos: Vec<Vec<f64>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for c in sorted {
        if combos.last() == Some(&c) {
            *weights.last_mut().expect("nonempty") += 1.0;
        } else {
            combos.push(c);
            weights.push(1.0);
        }
    }
    let exact = combos.len() <= grid_size.max(1);
    if !exact {
        let n = all.len();
        combos = (0..grid_size)
            .map(|g| std::mem::take(&mut all[g * n / grid_size]))
            .collect();
        weights = vec![1.0; combos.len()];
    }
    let values = combos
        .iter()
        .map(|c| Ok(mean(&p.predict_batch(&eval.cells().with_columns_fixed(members, c))?)))
        .collect::<Result<Vec<f64>>>()?;
    let center = weighted_mean(&values, &weights);
    Ok(GroupPd {
        members: members.to_vec(),
        combos,
        weights,
        values,
        center,
        exact,
    })
}
