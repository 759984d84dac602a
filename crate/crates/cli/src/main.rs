//! `xq`: explainability scores for tabular predictors.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error,
//! 3 external-model protocol error.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use xq::experiment::{
    relative_improvement, reproduce_published, ComparisonConfig, Setting, SyntheticSpec,
    PUBLISHED_TOLERANCE,
};
use xq::partial_dependence::{DEFAULT_GRID_SIZE, DEFAULT_SAMPLE_CAP};
use xq::report::{check_report, export_plotdata, run_experiment, run_score, PlotKind, ScoreRun};
use xq::score::DEFAULT_WEIGHTS_ARG;
use xq::{ChunkSpec, ColumnKind, Error, LoadOptions, ModelSpec, PdConfig, Report, WeightVector};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_PROTOCOL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "xq", version, about = "Explainability scores for tabular black-box predictors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score a model on a dataset under a chunk specification.
    Score(ScoreArgs),
    /// Run the synthetic original / domain / constructed comparison.
    Experiment(ExperimentArgs),
    /// Recompute the published reference scores.
    Table1(Table1Args),
    /// Write plot data from a score report as CSV.
    Export(ExportArgs),
    /// Re-derive every score in a report from its own inputs.
    Check(CheckArgs),
}

fn parse_weights(s: &str) -> Result<WeightVector, String> {
    s.parse::<WeightVector>().map_err(|e| e.to_string())
}

#[derive(Args, Debug)]
struct ScoringOptions {
    /// Score weights `w1,w2,w3`; they must sum to 1.
    #[arg(long, default_value = DEFAULT_WEIGHTS_ARG, value_parser = parse_weights)]
    weights: WeightVector,
    /// Maximum number of grid points per feature.
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    grid_size: usize,
    /// Rows above which evaluation uses a seeded sample of this size.
    #[arg(long, default_value_t = DEFAULT_SAMPLE_CAP)]
    sample_cap: usize,
    /// Seed for every random choice.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ScoringOptions {
    fn pd(&self) -> PdConfig {
        PdConfig {
            grid_size: self.grid_size,
            sample_cap: self.sample_cap,
            seed: self.seed,
        }
    }
}

#[derive(Args, Debug)]
struct ScoreArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Target column, required by fitted models.
    #[arg(long)]
    target: Option<String>,
    /// Chunk specification JSON.
    #[arg(long)]
    chunks: PathBuf,
    /// `linear`, `knn:<k>`, `product:<j>,<k>` or `external:<cmd>`.
    #[arg(long)]
    model: ModelSpec,
    #[command(flatten)]
    scoring: ScoringOptions,
    /// Absolute threshold above which a local contribution counts as a chunk.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Comma-separated row indices to explain locally.
    #[arg(long, value_delimiter = ',')]
    explain_rows: Vec<usize>,
    /// Include partial-dependence curves in the report.
    #[arg(long)]
    export_pd: bool,
    /// Treat these columns as categorical.
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
    /// Drop rows with missing cells instead of failing.
    #[arg(long)]
    drop_missing: bool,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[command(flatten)]
    scoring: ScoringOptions,
    /// Synthetic rows.
    #[arg(long, default_value_t = SyntheticSpec::default().n_rows)]
    rows: usize,
    /// Synthetic original features.
    #[arg(long, default_value_t = SyntheticSpec::default().n_features)]
    features: usize,
    /// Synthetic feature groups.
    #[arg(long, default_value_t = SyntheticSpec::default().n_groups)]
    groups: usize,
    /// Standard deviation of the latent-score noise.
    #[arg(long, default_value_t = SyntheticSpec::default().noise)]
    noise: f64,
    /// Reference predictor fitted in every setting.
    #[arg(long, default_value = "knn:10")]
    model: ModelSpec,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Table1Args {
    #[arg(long, default_value = DEFAULT_WEIGHTS_ARG, value_parser = parse_weights)]
    weights: WeightVector,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Breakdown,
    #[value(name = "pd_curves", alias = "pd-curves")]
    PdCurves,
}

#[derive(Args, Debug)]
struct ExportArgs {
    /// Score report JSON.
    #[arg(long)]
    report: PathBuf,
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Row whose breakdown to export; the first local explanation by default.
    #[arg(long)]
    instance: Option<usize>,
    /// CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Report JSON.
    #[arg(long)]
    report: PathBuf,
}

enum Failure {
    Usage(String),
    Engine(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

type CliResult = Result<ExitCode, Failure>;

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| {
            Failure::Engine(Error::Io {
                path: path.into(),
                source: e,
            })
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| {
                    Failure::Engine(Error::Io {
                        path: "<stdout>".into(),
                        source: e,
                    })
                })
        }
    }
}

fn cmd_score(args: ScoreArgs) -> CliResult {
    let overrides: HashMap<String, ColumnKind> = args
        .categorical
        .iter()
        .map(|c| (c.clone(), ColumnKind::Categorical))
        .collect();
    let options = LoadOptions {
        overrides,
        drop_missing: args.drop_missing,
    };
    let mut data = xq::load_csv(&args.data, &options)?;
    if let Some(t) = &args.target {
        data = data.with_target(t)?;
    }
    let chunks = ChunkSpec::load(&args.chunks)?;
    let report = run_score(&ScoreRun {
        data,
        chunks,
        model: args.model,
        weights: args.scoring.weights,
        pd: args.scoring.pd(),
        epsilon: args.epsilon,
        explain_rows: args.explain_rows,
        export_pd: args.export_pd,
    })?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let report = Report::Score(report);
    emit(&(report.to_json() + "\n"), args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_experiment(args: ExperimentArgs) -> CliResult {
    let synthetic = SyntheticSpec {
        n_rows: args.rows,
        n_features: args.features,
        n_groups: args.groups,
        noise: args.noise,
        seed: args.scoring.seed,
    };
    let config = ComparisonConfig {
        model: args.model,
        weights: args.scoring.weights,
        pd: args.scoring.pd(),
        ..ComparisonConfig::default()
    };
    let report = run_experiment(&synthetic, &config)?;
    for row in &report.table.rows {
        eprintln!(
            "{:<12} N_i={:<3} N_o={:<3} I={:.4} E={:.4} accuracy={:.3} recall={}",
            setting_name(row.setting),
            row.score.n_input,
            row.score.n_output,
            row.score.interaction,
            row.score.value,
            row.accuracy,
            row.recall.map_or("n/a".into(), |r| format!("{r:.3}")),
        );
    }
    emit(&(Report::Experiment(report).to_json() + "\n"), args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn setting_name(s: Setting) -> &'static str {
    match s {
        Setting::Original => "original",
        Setting::Domain => "domain",
        Setting::Constructed => "constructed",
    }
}

fn cmd_table1(args: Table1Args) -> CliResult {
    let default_weights = args.weights.is_default();
    if !default_weights {
        println!(
            "non-default weights {}: published scores assume equal weights, deltas are informational",
            args.weights
        );
    }
    let rows = reproduce_published(&args.weights)?;
    println!(
        "{:<12} {:>4} {:>4} {:>7} {:>10} {:>10} {:>10}",
        "setting", "N_i", "N_o", "I", "computed", "published", "delta"
    );
    let mut within = true;
    for r in &rows {
        within &= r.delta().abs() <= PUBLISHED_TOLERANCE;
        println!(
            "{:<12} {:>4} {:>4} {:>7.4} {:>10.5} {:>10.4} {:>+10.5}",
            setting_name(r.row.setting),
            r.row.n_input,
            r.row.n_output,
            r.row.interaction,
            r.computed.value,
            r.row.score,
            r.delta(),
        );
    }
    let gain = relative_improvement(rows[0].computed.value, rows[2].computed.value);
    println!("improvement constructed vs original: {:.2}%", 100.0 * gain);
    if default_weights && !within {
        eprintln!("error: a computed score differs from its published value by more than {PUBLISHED_TOLERANCE}");
        return Ok(ExitCode::from(EXIT_DATA));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_export(args: ExportArgs) -> CliResult {
    let report = Report::load(&args.report)?;
    let kind = match args.kind {
        KindArg::Breakdown => PlotKind::Breakdown,
        KindArg::PdCurves => PlotKind::PdCurves,
    };
    let csv = export_plotdata(&report, kind, args.instance)?;
    emit(&csv, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(args: CheckArgs) -> CliResult {
    let report = Report::load(&args.report)?;
    let entries = check_report(&report);
    if entries.is_empty() {
        return Err(Failure::Usage("report contains no scores to check".into()));
    }
    let mut ok = true;
    for e in &entries {
        ok &= e.passes();
        println!(
            "{} {:<24} stored={:.17} recomputed={:.17} delta={:.3e}",
            if e.passes() { "ok  " } else { "FAIL" },
            e.label,
            e.stored,
            e.recomputed,
            e.delta()
        );
    }
    if ok {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("error: stored values do not match their recomputation");
        Ok(ExitCode::from(EXIT_DATA))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Score(a) => cmd_score(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Table1(a) => cmd_table1(a),
        Command::Export(a) => cmd_export(a),
        Command::Check(a) => cmd_check(a),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Engine(e)) => {
            eprintln!("error: {e}");
            if e.is_protocol() {
                ExitCode::from(EXIT_PROTOCOL)
            } else {
                ExitCode::from(EXIT_DATA)
            }
        }
    }
}
