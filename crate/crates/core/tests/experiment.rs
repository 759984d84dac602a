//! Synthetic comparison: generator closed form, degenerate groupings and
//! the default run.

use xq::experiment::{
    classification_metrics, generate_synthetic, run_comparison, split_indices, ComparisonConfig,
    Setting, SyntheticSpec,
};
use xq::predictor::LinearModel;
use xq::tabular::pearson;
use xq::{ModelSpec, Predictor, WeightVector};

#[test]
fn same_seed_gives_identical_bytes() {
    let spec = SyntheticSpec { seed: 42, ..SyntheticSpec::default() };
    let a = generate_synthetic(&spec).unwrap().dataset.to_csv_string().unwrap();
    let b = generate_synthetic(&spec).unwrap().dataset.to_csv_string().unwrap();
    assert_eq!(a, b);
}

#[test]
fn blocks_correlate_more_within_than_between() {
    let s = generate_synthetic(&SyntheticSpec { n_rows: 2000, ..SyntheticSpec::default() }).unwrap();
    let ranges = s.group_ranges();
    let d = &s.dataset;
    let (mut within, mut between) = (Vec::new(), Vec::new());
    for (g, r) in ranges.iter().enumerate() {
        let first = d.column(r.start);
        within.push(pearson(&first, &d.column(r.start + 1)).unwrap());
        if let Some(next) = ranges.get(g + 1) {
            between.push(pearson(&first, &d.column(next.start)).unwrap().abs());
        }
    }
    let min_within = within.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_between = between.iter().cloned().fold(0.0, f64::max);
    assert!(min_within > max_between, "{within:?} vs {between:?}");
}

#[test]
fn noiseless_target_is_recovered_by_group_mean_model() {
    let spec = SyntheticSpec { noise: 0.0, seed: 3, ..SyntheticSpec::default() };
    let s = generate_synthetic(&spec).unwrap();
    let d = &s.dataset;
    let x = d.features();
    // latent = sum_g w_g * mean(group g) as a linear model over raw features
    let mut coefficients = vec![0.0; x.n_cols()];
    for (r, w) in s.group_ranges().iter().zip(&s.group_weights) {
        for c in r.clone() {
            coefficients[c] = w / r.len() as f64;
        }
    }
    let m = LinearModel::new(x.columns().to_vec(), 0.5 - s.threshold, coefficients).unwrap();
    let labels = d.target_values().unwrap();
    for (i, row) in x.cells().rows().enumerate() {
        assert_eq!(labels[i], f64::from(u8::from(s.latent_score(row) > s.threshold)));
    }
    let (_, test) = split_indices(d.n_rows(), 0.7, 0).unwrap();
    let test = d.select_rows(&test);
    let scores = m.predict_dataset(&test.features()).unwrap();
    let (_, recall) = classification_metrics(&scores, &test.target_values().unwrap(), 0.5);
    assert_eq!(recall, Some(1.0));
}

fn small_config() -> ComparisonConfig {
    ComparisonConfig {
        model: ModelSpec::Knn(5),
        ..ComparisonConfig::default()
    }
}

#[test]
fn singleton_groups_keep_original_input_count() {
    let spec = SyntheticSpec { n_rows: 120, n_features: 6, n_groups: 6, ..SyntheticSpec::default() };
    let s = generate_synthetic(&spec).unwrap();
    let table = run_comparison(&s.dataset, &s.groups, &small_config()).unwrap();
    let original = table.get(Setting::Original).unwrap();
    let constructed = table.get(Setting::Constructed).unwrap();
    assert_eq!(original.score.n_input, 6);
    assert_eq!(constructed.score.n_input, original.score.n_input);
}

#[test]
fn single_group_collapses_to_one_chunk() {
    let spec = SyntheticSpec { n_rows: 120, n_features: 6, n_groups: 1, ..SyntheticSpec::default() };
    let s = generate_synthetic(&spec).unwrap();
    let cfg = small_config();
    let table = run_comparison(&s.dataset, &s.groups, &cfg).unwrap();
    let c = table.get(Setting::Constructed).unwrap();
    assert_eq!((c.score.n_input, c.score.n_output), (1, 1));
    let w = cfg.weights;
    let expected = w.w1 + w.w2 + w.w3 * (1.0 - c.interaction.aggregate_i);
    assert!((c.score.value - expected).abs() <= 1e-12);
    // one feature has nothing to interact with
    assert_eq!(c.interaction.aggregate_i, 0.0);
    assert_eq!(c.score.value, 1.0);
}

#[test]
fn default_run_orders_settings() {
    let s = generate_synthetic(&SyntheticSpec::default()).unwrap();
    let table = run_comparison(&s.dataset, &s.groups, &ComparisonConfig::default()).unwrap();
    let e = |k| table.get(k).unwrap().score.value;
    assert!(e(Setting::Constructed) > e(Setting::Domain));
    assert!(e(Setting::Domain) > e(Setting::Original));
    for row in &table.rows {
        assert_eq!(row.score.recompute(), row.score.value);
        assert!((0.0..=1.0).contains(&row.interaction.aggregate_i));
    }
}

#[test]
fn weights_are_validated_before_running() {
    let s = generate_synthetic(&SyntheticSpec { n_rows: 50, ..SyntheticSpec::default() }).unwrap();
    let cfg = ComparisonConfig {
        weights: WeightVector { w1: 0.5, w2: 0.6, w3: 0.1 },
        ..small_config()
    };
    assert!(run_comparison(&s.dataset, &s.groups, &cfg).is_err());
}
