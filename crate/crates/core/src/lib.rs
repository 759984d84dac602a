//! Model-agnostic explainability scoring for tabular predictors.
//!
//! The score of a model under a chunk configuration is
//!
//! ```text
//! E = w1 / N_input + w2 / N_output + w3 * (1 - I)
//! ```
//!
//! where `N_input` and `N_output` count the input and output chunks and `I`
//! is the mean partial-dependence interaction strength of the predictor.
//! Every term lies in `[0, 1]` once the weights sum to one, so `E` does too.
//!
//! The crate is organised by pipeline stage:
//!
//! * [`tabular`]: CSV loading, column kinds, correlation and sampling.
//! * [`predictor`]: the black-box interface plus linear, k-NN and
//!   external-process models.
//! * [`partial_dependence`]: grids, curves, surfaces and group effects.
//! * [`interaction`]: one-vs-rest interaction statistics.
//! * [`chunking`]: chunk specifications, feature construction and
//!   per-instance contribution breakdowns.
//! * [`score`]: the score itself, global and local.
//! * [`experiment`]: the synthetic three-setting comparison.
//! * [`report`]: JSON reports, recomputation checks and plot-data export.

pub mod chunking;
pub mod error;
pub mod experiment;
pub mod interaction;
pub mod partial_dependence;
pub mod predictor;
pub mod report;
pub mod score;
pub mod tabular;

pub use chunking::{ChunkSpec, Contribution, Provenance};
pub use error::{Error, Result};
pub use interaction::{interaction_strength, InteractionReport};
pub use partial_dependence::PdConfig;
pub use predictor::{ModelSpec, Predictor};
pub use report::{Report, ScoreReport, REPORT_SCHEMA};
pub use score::{score_global, ExplainabilityScore, WeightVector};
pub use tabular::{load_csv, ColumnKind, ColumnMeta, Dataset, LoadOptions, Matrix};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/scoring.md")]
    mod scoring {}
    #[doc = include_str!("../../../book/src/partial-dependence.md")]
    mod partial_dependence {}
    #[doc = include_str!("../../../book/src/interaction.md")]
    mod interaction {}
    #[doc = include_str!("../../../book/src/chunks.md")]
    mod chunks {}
    #[doc = include_str!("../../../book/src/experiment.md")]
    mod experiment {}
    #[doc = include_str!("../../../book/src/external-models.md")]
    mod external_models {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
