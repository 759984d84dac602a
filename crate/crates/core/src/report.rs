//! JSON reports, the scoring pipeline that produces them, recomputation
//! checks and plot-data export.

use serde::{Deserialize, Serialize};

use crate::chunking::{ChunkEffects, ChunkSpec, Contribution};
use crate::error::{Error, Result};
use crate::experiment::{
    generate_synthetic, run_comparison, ComparisonConfig, ComparisonTable, SyntheticSpec,
};
use crate::interaction::{interaction_strength, InteractionReport};
use crate::partial_dependence::{evaluation_rows, pd_curve, PdConfig};
use crate::predictor::ModelSpec;
use crate::score::{local_interaction, score_global, score_local, ExplainabilityScore, WeightVector};
use crate::tabular::{ColumnKind, Dataset};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SCHEMA_ID: &str = "xq-report/1";

/// JSON schema every emitted report validates against.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.v1.schema.json");

/// Tolerance for `check` when re-deriving scores from a report.
pub const RECOMPUTE_TOLERANCE: f64 = 1e-12;

/// Default local threshold as a fraction of the prediction standard
/// deviation over the evaluation rows.
pub const DEFAULT_EPSILON_SCALE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub name: String,
    pub rows: usize,
    pub columns: usize,
    pub dropped_rows: usize,
    pub sha256: String,
}

impl DatasetFingerprint {
    pub fn of(d: &Dataset) -> Result<Self> {
        Ok(Self {
            name: d.name().to_string(),
            rows: d.n_rows(),
            columns: d.n_cols(),
            dropped_rows: d.dropped_rows(),
            sha256: d.content_hash()?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfigEcho {
    pub model: ModelSpec,
    pub target: Option<String>,
    pub weights: WeightVector,
    pub grid_size: usize,
    pub sample_cap: usize,
    pub seed: u64,
    pub epsilon: f64,
    /// `"flag"` when supplied, `"default"` when derived from the predictions.
    pub epsilon_source: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalExplanation {
    pub instance: usize,
    pub prediction: f64,
    pub interaction: f64,
    pub breakdown: Vec<Contribution>,
    pub score: ExplainabilityScore,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdCurveRecord {
    pub feature: String,
    pub kind: ColumnKind,
    pub points: Vec<f64>,
    /// Level names for categorical features, aligned with `points`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
    pub values: Vec<f64>,
    pub centered_values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub schema: String,
    pub engine_version: String,
    pub dataset: DatasetFingerprint,
    pub config: ScoreConfigEcho,
    pub chunks: ChunkSpec,
    pub interaction: InteractionReport,
    pub global: ExplainabilityScore,
    pub locals: Vec<LocalExplanation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pd_curves: Option<Vec<PdCurveRecord>>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub engine_version: String,
    pub synthetic: SyntheticSpec,
    pub config: ComparisonConfig,
    pub dataset: DatasetFingerprint,
    pub table: ComparisonTable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Report {
    Score(ScoreReport),
    Experiment(ExperimentReport),
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialise")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Report(format!("cannot parse report: {e}")))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        })?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        })
    }
}

/// Everything the scoring pipeline needs.
#[derive(Clone, Debug)]
pub struct ScoreRun {
    /// Features plus, for fitted models, the target.
    pub data: Dataset,
    pub chunks: ChunkSpec,
    pub model: ModelSpec,
    pub weights: WeightVector,
    pub pd: PdConfig,
    /// Absolute local threshold; derived from the predictions when `None`.
    pub epsilon: Option<f64>,
    /// Row indices of `data` to explain locally.
    pub explain_rows: Vec<usize>,
    pub export_pd: bool,
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Load-free scoring pipeline: fit or connect the model, compute the
/// interaction report and global score, then local explanations.
pub fn run_score(run: &ScoreRun) -> Result<ScoreReport> {
    run.weights.validate()?;
    if run.model.needs_target() && run.data.target().is_none() {
        return Err(Error::Dataset(format!("model '{}' needs a target column", run.model)));
    }
    // validates against the full data so a chunk naming the target is reported
    run.chunks.resolve(&run.data)?;
    let features = run.data.features();
    let resolved = run.chunks.resolve(&features)?;
    let model = run.model.build(&run.data)?;
    let predictor = model.as_ref();

    let interaction = interaction_strength(predictor, &features, &resolved.input_columns(), &run.pd)?;
    let global = score_global(
        run.chunks.n_input(),
        run.chunks.n_output(),
        interaction.aggregate_i,
        &run.weights,
    )?;

    let eval = evaluation_rows(&features, &run.pd)?;
    let (epsilon, epsilon_source) = match run.epsilon {
        Some(e) => (e, "flag"),
        None => {
            let preds = predictor.predict_dataset(&eval)?;
            (DEFAULT_EPSILON_SCALE * sample_std(&preds), "default")
        }
    };

    let mut warnings = Vec::new();
    if run.data.dropped_rows() > 0 {
        warnings.push(format!("{} rows with missing values were dropped", run.data.dropped_rows()));
    }
    if interaction.per_feature.iter().any(|f| f.constant_predictor) {
        warnings.push("predictor is constant on the evaluation rows; interaction set to 0".into());
    }
    let approx: Vec<&str> = interaction
        .per_feature
        .iter()
        .filter(|f| !f.exact)
        .map(|f| f.name.as_str())
        .collect();
    if !approx.is_empty() {
        warnings.push(format!(
            "interaction for {} feature(s) uses a {}-point quantile grid rather than every distinct value",
            approx.len(),
            run.pd.grid_size
        ));
    }

    let mut locals = Vec::with_capacity(run.explain_rows.len());
    if !run.explain_rows.is_empty() {
        let effects = ChunkEffects::new(predictor, &eval, &run.chunks, run.pd.grid_size)?;
        for &i in &run.explain_rows {
            if i >= features.n_rows() {
                return Err(Error::Dataset(format!(
                    "row {i} out of range for {} rows",
                    features.n_rows()
                )));
            }
            let instance = features.row(i);
            let breakdown = effects.breakdown(instance)?;
            let i_local = local_interaction(&interaction, &resolved, &breakdown, epsilon);
            let score = score_local(
                run.chunks.n_input(),
                &run.chunks,
                &breakdown,
                i_local,
                &run.weights,
                epsilon,
                i,
            )?;
            if score.degenerate {
                warnings.push(format!("row {i}: no chunk contribution exceeds epsilon"));
            }
            locals.push(LocalExplanation {
                instance: i,
                prediction: predictor.predict_row(instance)?,
                interaction: i_local,
                breakdown,
                score,
            });
        }
    }

    let pd_curves = if run.export_pd {
        let mut curves = Vec::new();
        for j in resolved.input_columns() {
            let pd = pd_curve(predictor, &eval, j, run.pd.grid_size)?;
            let meta = &features.columns()[j];
            curves.push(PdCurveRecord {
                feature: meta.name.clone(),
                kind: meta.kind,
                labels: match meta.kind {
                    ColumnKind::Categorical => meta.levels.clone(),
                    ColumnKind::Numeric => Vec::new(),
                },
                points: pd.grid.points.clone(),
                values: pd.values.clone(),
                centered_values: pd.centered_values.clone(),
            });
        }
        Some(curves)
    } else {
        None
    };

    Ok(ScoreReport {
        schema: SCHEMA_ID.into(),
        engine_version: ENGINE_VERSION.into(),
        dataset: DatasetFingerprint::of(&run.data)?,
        config: ScoreConfigEcho {
            model: run.model.clone(),
            target: run.data.target().map(|t| run.data.columns()[t].name.clone()),
            weights: run.weights,
            grid_size: run.pd.grid_size,
            sample_cap: run.pd.sample_cap,
            seed: run.pd.seed,
            epsilon,
            epsilon_source: epsilon_source.into(),
        },
        chunks: run.chunks.clone(),
        interaction,
        global,
        locals,
        pd_curves,
        warnings,
    })
}

/// Generates the synthetic data and runs the three-setting comparison.
pub fn run_experiment(synthetic: &SyntheticSpec, config: &ComparisonConfig) -> Result<ExperimentReport> {
    let data = generate_synthetic(synthetic)?;
    let table = run_comparison(&data.dataset, &data.groups, config)?;
    Ok(ExperimentReport {
        schema: SCHEMA_ID.into(),
        engine_version: ENGINE_VERSION.into(),
        synthetic: synthetic.clone(),
        config: config.clone(),
        dataset: DatasetFingerprint::of(&data.dataset)?,
        table,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckEntry {
    pub label: String,
    pub stored: f64,
    pub recomputed: f64,
}

impl CheckEntry {
    pub fn delta(&self) -> f64 {
        (self.stored - self.recomputed).abs()
    }

    pub fn passes(&self) -> bool {
        self.delta() <= RECOMPUTE_TOLERANCE
    }
}

fn check_score(label: &str, s: &ExplainabilityScore, out: &mut Vec<CheckEntry>) {
    out.push(CheckEntry {
        label: format!("{label}: E"),
        stored: s.value,
        recomputed: s.recompute(),
    });
}

fn check_interaction(label: &str, r: &InteractionReport, used: f64, out: &mut Vec<CheckEntry>) {
    out.push(CheckEntry {
        label: format!("{label}: I"),
        stored: used,
        recomputed: r.recompute_aggregate(),
    });
}

/// Re-derives every score (and its interaction aggregate) in the report
/// from the report's own numbers.
pub fn check_report(report: &Report) -> Vec<CheckEntry> {
    let mut out = Vec::new();
    match report {
        Report::Score(r) => {
            check_interaction("global", &r.interaction, r.global.interaction, &mut out);
            check_score("global", &r.global, &mut out);
            for l in &r.locals {
                check_score(&format!("row {}", l.instance), &l.score, &mut out);
            }
        }
        Report::Experiment(r) => {
            for row in &r.table.rows {
                let label = format!("{:?}", row.setting).to_lowercase();
                check_interaction(&label, &row.interaction, row.score.interaction, &mut out);
                check_score(&label, &row.score, &mut out);
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    Breakdown,
    PdCurves,
}

/// CSV backing a plot. `instance` picks the local explanation for a
/// breakdown (default: the first one in the report).
pub fn export_plotdata(report: &Report, kind: PlotKind, instance: Option<usize>) -> Result<String> {
    let Report::Score(r) = report else {
        return Err(Error::Report("plot data is only available for score reports".into()));
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    match kind {
        PlotKind::Breakdown => {
            let local = match instance {
                Some(i) => r.locals.iter().find(|l| l.instance == i),
                None => r.locals.first(),
            }
            .ok_or_else(|| {
                Error::Report("report has no local breakdown for the requested instance".into())
            })?;
            w.write_record(["chunk", "contribution"])?;
            for c in &local.breakdown {
                w.write_record([c.chunk.clone(), format!("{}", c.contribution)])?;
            }
        }
        PlotKind::PdCurves => {
            let curves = r.pd_curves.as_ref().ok_or_else(|| {
                Error::Report("report has no pd_curves section (generate it with PD export enabled)".into())
            })?;
            w.write_record(["feature", "grid_point", "pd_value", "centered_pd_value"])?;
            for c in curves {
                for (g, &p) in c.points.iter().enumerate() {
                    let point = match c.kind {
                        ColumnKind::Categorical => c.labels[g].clone(),
                        ColumnKind::Numeric => format!("{p}"),
                    };
                    w.write_record([
                        c.feature.clone(),
                        point,
                        format!("{}", c.values[g]),
                        format!("{}", c.centered_values[g]),
                    ])?;
                }
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Csv(e.to_string()))
}
