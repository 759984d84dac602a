//! The explainability score.
//!
//! The score rewards explanations that need few cognitive chunks and whose
//! chunks interact little:
//!
//! ```text
//! E = w1 / N_i + w2 / N_o + w3 * (1 - I)
//! ```
//!
//! with `N_i` input chunks, `N_o` output chunks (those used by the
//! explanation), interaction strength `I` in `[0, 1]` and non-negative
//! weights summing to one. [`score_basic`], [`score_penalized`] and
//! [`score_segregated`] are the simpler forms this one is built from.
//!
//! ```
//! use xq::score::{score_global, WeightVector};
//!
//! let e = score_global(1, 1, 0.0, &WeightVector::default()).unwrap();
//! assert_eq!(e.value, 1.0);
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chunking::{ChunkSpec, Contribution, ResolvedChunks};
use crate::error::{Error, Result};
use crate::interaction::InteractionReport;

/// Tolerance on `w1 + w2 + w3 = 1`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Weight string that selects exact thirds.
pub const DEFAULT_WEIGHTS_ARG: &str = "0.3333,0.3333,0.3334";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl Default for WeightVector {
    fn default() -> Self {
        Self {
            w1: 1.0 / 3.0,
            w2: 1.0 / 3.0,
            w3: 1.0 / 3.0,
        }
    }
}

impl WeightVector {
    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self> {
        let w = Self { w1, w2, w3 };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let ws = [self.w1, self.w2, self.w3];
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Weights(format!(
                "weights must be finite and non-negative, got {ws:?}"
            )));
        }
        let sum: f64 = ws.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::Weights(format!("weights sum to {sum}, not 1")));
        }
        Ok(())
    }

    pub fn is_default(&self) -> bool {
        *self == Self::default()
    }
}

impl FromStr for WeightVector {
    type Err = Error;

    /// Parses `w1,w2,w3`. The four-decimal default `0.3333,0.3333,0.3334`
    /// stands for exact thirds.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts == DEFAULT_WEIGHTS_ARG.split(',').collect::<Vec<_>>() {
            return Ok(Self::default());
        }
        let nums = parts
            .iter()
            .map(|p| p.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|_| Error::Weights(format!("cannot parse '{s}' as three numbers")))?;
        match nums.as_slice() {
            [a, b, c] => Self::new(*a, *b, *c),
            _ => Err(Error::Weights(format!("expected three weights, got {}", nums.len()))),
        }
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.w1, self.w2, self.w3)
    }
}

fn check_count(name: &str, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::ScoreInput(format!("{name} must be at least 1")));
    }
    Ok(())
}

fn check_interaction(i: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&i) {
        return Err(Error::ScoreInput(format!("interaction {i} outside [0, 1]")));
    }
    Ok(())
}

/// `1 / N_c`.
pub fn score_basic(n_chunks: usize) -> Result<f64> {
    check_count("chunk count", n_chunks)?;
    Ok(1.0 / n_chunks as f64)
}

/// `1 / N_c + (1 - I)`. Not normalised: ranges over `(0, 2]`.
pub fn score_penalized(n_chunks: usize, interaction: f64) -> Result<f64> {
    check_count("chunk count", n_chunks)?;
    check_interaction(interaction)?;
    Ok(1.0 / n_chunks as f64 + (1.0 - interaction))
}

/// `1 / N_i + 1 / N_o + (1 - I)`: input and output chunks counted
/// separately, without weights.
pub fn score_segregated(n_input: usize, n_output: usize, interaction: f64) -> Result<f64> {
    check_count("input chunk count", n_input)?;
    check_count("output chunk count", n_output)?;
    check_interaction(interaction)?;
    Ok(1.0 / n_input as f64 + 1.0 / n_output as f64 + (1.0 - interaction))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scope {
    Global,
    Local { instance: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplainabilityScore {
    /// Predicate sum divided by the weight sum.
    pub value: f64,
    pub predicate_input: f64,
    pub predicate_output: f64,
    pub predicate_interaction: f64,
    pub n_input: usize,
    pub n_output: usize,
    pub interaction: f64,
    pub weights: WeightVector,
    pub scope: Scope,
    /// Local scores only: no chunk exceeded the contribution threshold.
    #[serde(default)]
    pub degenerate: bool,
}

impl ExplainabilityScore {
    fn compute(
        n_input: usize,
        n_output: usize,
        interaction: f64,
        weights: &WeightVector,
        scope: Scope,
    ) -> Result<Self> {
        check_count("input chunk count", n_input)?;
        check_count("output chunk count", n_output)?;
        check_interaction(interaction)?;
        weights.validate()?;
        let predicate_input = weights.w1 / n_input as f64;
        let predicate_output = weights.w2 / n_output as f64;
        let predicate_interaction = weights.w3 * (1.0 - interaction);
        Ok(Self {
            value: normalised(predicate_input, predicate_output, predicate_interaction, weights),
            predicate_input,
            predicate_output,
            predicate_interaction,
            n_input,
            n_output,
            interaction,
            weights: *weights,
            scope,
            degenerate: false,
        })
    }

    /// Re-evaluates the score from the stored inputs alone.
    pub fn recompute(&self) -> f64 {
        let w = &self.weights;
        normalised(
            w.w1 / self.n_input as f64,
            w.w2 / self.n_output as f64,
            w.w3 * (1.0 - self.interaction),
            w,
        )
    }
}

/// Predicate sum over the weight sum. The weight sum is 1 up to rounding;
/// dividing by it makes the ideal point `(1, 1, 0)` score exactly 1 for any
/// valid weights, since numerator and denominator then round identically.
fn normalised(input: f64, output: f64, interaction: f64, w: &WeightVector) -> f64 {
    (input + output + interaction) / (w.w1 + w.w2 + w.w3)
}

pub fn score_global(
    n_input: usize,
    n_output: usize,
    interaction: f64,
    weights: &WeightVector,
) -> Result<ExplainabilityScore> {
    ExplainabilityScore::compute(n_input, n_output, interaction, weights, Scope::Global)
}

/// Instance-level score: `N_o` counts only output chunks whose contribution
/// magnitude exceeds `epsilon`, with a floor of one (flagged as degenerate).
pub fn score_local(
    n_input: usize,
    spec: &ChunkSpec,
    breakdown: &[Contribution],
    interaction: f64,
    weights: &WeightVector,
    epsilon: f64,
    instance: usize,
) -> Result<ExplainabilityScore> {
    if !(epsilon >= 0.0) {
        return Err(Error::ScoreInput(format!("epsilon must be non-negative, got {epsilon}")));
    }
    if let Some(c) = breakdown.iter().find(|c| !spec.output_chunks.contains(&c.chunk)) {
        return Err(Error::ScoreInput(format!("'{}' is not an output chunk", c.chunk)));
    }
    let active = breakdown.iter().filter(|c| c.contribution.abs() > epsilon).count();
    let mut score = ExplainabilityScore::compute(
        n_input,
        active.max(1),
        interaction,
        weights,
        Scope::Local { instance },
    )?;
    score.degenerate = active == 0;
    Ok(score)
}

/// Interaction for one instance: the mean `H` over the columns of the
/// output chunks whose contribution exceeds `epsilon`, or 0 when fewer than
/// two such chunks remain.
pub fn local_interaction(
    report: &InteractionReport,
    chunks: &ResolvedChunks,
    breakdown: &[Contribution],
    epsilon: f64,
) -> f64 {
    let active: Vec<&(String, Vec<usize>)> = chunks
        .output_chunks()
        .filter(|(name, _)| {
            breakdown
                .iter()
                .any(|c| &c.chunk == name && c.contribution.abs() > epsilon)
        })
        .collect();
    if active.len() < 2 {
        return 0.0;
    }
    let h: Vec<f64> = active
        .iter()
        .flat_map(|(_, cols)| cols.iter().filter_map(|&c| report.h_for(c)))
        .collect();
    crate::interaction::aggregate(&h)
}
