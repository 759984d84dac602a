//! Partial dependence against closed forms and direct averages.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xq::partial_dependence::{pd_curve, pd_surface};
use xq::predictor::{LinearModel, ProductModel};
use xq::{Dataset, Predictor};

fn seeded_rows(n: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..m).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn linear_fixture(n: usize, seed: u64) -> (Dataset, LinearModel) {
    let rows = seeded_rows(n, 2, seed);
    let d = Dataset::from_numeric_rows(&["x1", "x2"], &rows).unwrap();
    let m = LinearModel::new(d.columns().to_vec(), 1.0, vec![2.0, 3.0]).unwrap();
    (d, m)
}

#[test]
fn linear_pd_matches_closed_form_exact_grid() {
    // f = 1 + 2 x1 + 3 x2  =>  PD_1(v) = 1 + 2 v + 3 mean(x2)
    let (d, m) = linear_fixture(12, 3);
    let x1 = d.column(0);
    let x2 = d.column(1);
    let pd = pd_curve(&m, &d, 0, 20).unwrap();
    assert!(pd.grid.exact);
    for (g, &v) in pd.points().iter().enumerate() {
        assert!((pd.values[g] - (1.0 + 2.0 * v + 3.0 * mean(&x2))).abs() <= 1e-9);
        assert!((pd.centered_values[g] - 2.0 * (v - mean(&x1))).abs() <= 1e-9);
    }
}

#[test]
fn linear_pd_matches_closed_form_quantile_grid() {
    let (d, m) = linear_fixture(200, 8);
    let x1 = d.column(0);
    let pd = pd_curve(&m, &d, 0, 20).unwrap();
    assert!(!pd.grid.exact);
    assert_eq!(pd.points().len(), 20);
    for (g, &v) in pd.points().iter().enumerate() {
        assert!((pd.centered_values[g] - 2.0 * (v - mean(&x1))).abs() <= 1e-9);
    }
}

#[test]
fn additivity_for_linear_predictor() {
    // f(x_i) - mean f = sum_j centred PD_j(x_ij)
    let (d, m) = linear_fixture(150, 4);
    let f = m.predict_dataset(&d).unwrap();
    let fbar = mean(&f);
    let curves: Vec<_> = (0..2).map(|j| pd_curve(&m, &d, j, 20).unwrap()).collect();
    for (i, row) in d.cells().rows().enumerate() {
        let sum: f64 = curves.iter().map(|c| c.centered_at(row[c.feature]).unwrap()).sum();
        assert!((f[i] - fbar - sum).abs() <= 1e-9, "row {i}");
    }
}

#[test]
fn product_surface_matches_direct_average() {
    // f = x1 * x2 with x3 inert: PD_12(a, b) = a * b exactly
    let rows = seeded_rows(9, 3, 17);
    let d = Dataset::from_numeric_rows(&["x1", "x2", "x3"], &rows).unwrap();
    let m = ProductModel::new(d.columns().to_vec(), 0, 1).unwrap();
    let s = pd_surface(&m, &d, 0, 1, 20).unwrap();
    let all: Vec<f64> = rows.iter().map(|r| r[0] * r[1]).collect();
    let mut weighted = 0.0;
    for (g, &a) in s.grids.0.points.iter().enumerate() {
        for (h, &b) in s.grids.1.points.iter().enumerate() {
            let direct = mean(&rows.iter().map(|r| m.predict_row(&[a, b, r[2]]).unwrap()).collect::<Vec<_>>());
            assert!((direct - a * b).abs() <= 1e-12);
            assert!((s.values[g][h] - direct).abs() <= 1e-12);
            weighted += s.weights[g][h] * s.values[g][h];
        }
    }
    // rows sit on grid points, so the joint weights reproduce the row mean
    assert!((s.center - mean(&all)).abs() <= 1e-12);
    assert!((s.center - weighted / rows.len() as f64).abs() <= 1e-12);
    for r in &rows {
        assert!((s.centered_at(r[0], r[1]).unwrap() - (r[0] * r[1] - mean(&all))).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn centred_pd_has_zero_mean_over_rows(
        seed in any::<u64>(),
        n in 2usize..120,
        grid in 2usize..25,
        coefs in prop::collection::vec(-4.0f64..4.0, 2),
    ) {
        let rows = seeded_rows(n, 2, seed);
        let d = Dataset::from_numeric_rows(&["x1", "x2"], &rows).unwrap();
        let linear = LinearModel::new(d.columns().to_vec(), 0.5, coefs).unwrap();
        let product = ProductModel::new(d.columns().to_vec(), 0, 1).unwrap();
        let models: [&dyn Predictor; 2] = [&linear, &product];
        for m in models {
            for j in 0..2 {
                let pd = pd_curve(m, &d, j, grid).unwrap();
                let centred: Vec<f64> = d.cells().rows().map(|r| pd.centered_at(r[j]).unwrap()).collect();
                prop_assert!(mean(&centred).abs() <= 1e-10);
            }
        }
    }
}
