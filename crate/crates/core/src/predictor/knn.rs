use super::{check_rows, ensure_finite, Predictor};
use crate::error::{Error, Result};
use crate::tabular::{ColumnKind, ColumnMeta, Dataset, Matrix};

/// k-nearest-neighbour regressor.
///
/// Numeric features are standardised with the training mean and standard
/// deviation (a zero-deviation feature contributes no distance); categorical
/// features are one-hot encoded. The prediction is the mean target of the
/// `k` closest training rows, ties going to the lower row index.
#[derive(Clone, Debug)]
pub struct KnnModel {
    signature: Vec<ColumnMeta>,
    k: usize,
    means: Vec<f64>,
    scales: Vec<f64>,
    encoded_width: usize,
    train: Vec<f64>,
    targets: Vec<f64>,
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    fn encode_into(&self, row: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (j, meta) in self.signature.iter().enumerate() {
            match meta.kind {
                ColumnKind::Numeric => {
                    let s = self.scales[j];
                    out.push(if s > 0.0 { (row[j] - self.means[j]) / s } else { 0.0 });
                }
                ColumnKind::Categorical => {
                    let hot = row[j] as usize;
                    out.extend((0..meta.levels.len()).map(|l| if l == hot { 1.0 } else { 0.0 }));
                }
            }
        }
    }

    fn predict_encoded(&self, query: &[f64], best: &mut Vec<(f64, usize)>) -> f64 {
        best.clear();
        for (i, t) in self.train.chunks_exact(self.encoded_width).enumerate() {
            let d: f64 = t.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
            // strict comparison keeps the earlier row on equal distance
            if best.len() < self.k || d < best[best.len() - 1].0 {
                let pos = best.partition_point(|&(bd, _)| bd <= d);
                best.insert(pos, (d, i));
                best.truncate(self.k);
            }
        }
        best.iter().map(|&(_, i)| self.targets[i]).sum::<f64>() / self.k as f64
    }
}

pub fn fit_knn(d: &Dataset, k: usize) -> Result<KnnModel> {
    let targets = d.target_values()?;
    let features = d.features();
    let n = features.n_rows();
    if k == 0 || k > n {
        return Err(Error::Fit(format!("k = {k} must lie in 1..={n}")));
    }
    let signature = features.columns().to_vec();
    let mut means = vec![0.0; signature.len()];
    let mut scales = vec![0.0; signature.len()];
    for (j, meta) in signature.iter().enumerate() {
        if meta.is_numeric() {
            let col = features.column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            means[j] = mean;
            scales[j] = var.sqrt();
        }
    }
    let encoded_width = signature
        .iter()
        .map(|c| match c.kind {
            ColumnKind::Numeric => 1,
            ColumnKind::Categorical => c.levels.len(),
        })
        .sum::<usize>()
        .max(1);
    let mut model = KnnModel {
        signature,
        k,
        means,
        scales,
        encoded_width,
        train: Vec::with_capacity(n * encoded_width),
        targets,
    };
    let mut buf = Vec::with_capacity(encoded_width);
    let mut train = Vec::with_capacity(n * encoded_width);
    for row in features.cells().rows() {
        model.encode_into(row, &mut buf);
        buf.resize(encoded_width, 0.0);
        train.extend_from_slice(&buf);
    }
    model.train = train;
    Ok(model)
}

impl Predictor for KnnModel {
    fn signature(&self) -> &[ColumnMeta] {
        &self.signature
    }

    fn predict_batch(&self, rows: &Matrix) -> Result<Vec<f64>> {
        check_rows(&self.signature, rows)?;
        let mut query = Vec::with_capacity(self.encoded_width);
        let mut best = Vec::with_capacity(self.k + 1);
        let out: Vec<f64> = rows
            .rows()
            .map(|r| {
                self.encode_into(r, &mut query);
                query.resize(self.encoded_width, 0.0);
                self.predict_encoded(&query, &mut best)
            })
            .collect();
        ensure_finite(&out)?;
        Ok(out)
    }
}
