//! Least squares against the normal equations solved by hand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xq::predictor::{fit_linear, ModelSpec};
use xq::{Dataset, Predictor};

/// Solves the 3x3 system by Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            for c in col..3 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

fn noisy_plane() -> (Dataset, Vec<[f64; 3]>) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut rows = Vec::new();
    for _ in 0..50 {
        let x1: f64 = rng.random_range(-1.0..1.0);
        let x2: f64 = rng.random_range(-1.0..1.0);
        let noise: f64 = rng.random_range(-1e-3..1e-3);
        rows.push([x1, x2, 3.0 * x1 - x2 + noise]);
    }
    (Dataset::from_numeric_rows(&["x1", "x2", "y"], &rows).unwrap().with_target("y").unwrap(), rows)
}

#[test]
fn ols_matches_normal_equations() {
    let (d, rows) = noisy_plane();
    // design [1, x1, x2]
    let mut xtx = [[0.0; 3]; 3];
    let mut xty = [0.0; 3];
    for r in &rows {
        let z = [1.0, r[0], r[1]];
        for i in 0..3 {
            for j in 0..3 {
                xtx[i][j] += z[i] * z[j];
            }
            xty[i] += z[i] * r[2];
        }
    }
    let beta = solve3(xtx, xty);
    let m = fit_linear(&d).unwrap();
    assert!((m.intercept - beta[0]).abs() <= 1e-9);
    assert!((m.coefficients[0] - beta[1]).abs() <= 1e-9);
    assert!((m.coefficients[1] - beta[2]).abs() <= 1e-9);
    // and both recover the generating plane
    assert!((m.coefficients[0] - 3.0).abs() <= 1e-2);
    assert!((m.coefficients[1] + 1.0).abs() <= 1e-2);
    assert!(m.intercept.abs() <= 1e-2);
}

#[test]
fn model_spec_builds_fitted_linear() {
    let (d, rows) = noisy_plane();
    let m = "linear".parse::<ModelSpec>().unwrap().build(&d).unwrap();
    let pred = m.predict_dataset(&d.features()).unwrap();
    for (p, r) in pred.iter().zip(&rows) {
        assert!((p - r[2]).abs() <= 2e-3);
    }
}

#[test]
fn knn_with_k1_reproduces_training_targets() {
    let (d, rows) = noisy_plane();
    let m = "knn:1".parse::<ModelSpec>().unwrap().build(&d).unwrap();
    let pred = m.predict_dataset(&d.features()).unwrap();
    for (p, r) in pred.iter().zip(&rows) {
        assert_eq!(*p, r[2]);
    }
}
