//! Evaluation protocol: batch scoring, correlation, logistic fitting and
//! the robustness experiments.

mod correlation;
mod dataset;
mod experiments;
mod logistic;
mod simplex;

pub use correlation::{average_ranks, plcc, srcc};
pub use dataset::{
    load_manifest, parse_manifest, read_score_table, score_dataset, write_score_table,
    DatasetManifest, FailureKind, ImageFailure, ManifestRecord, ScoreOptions, ScoreRow, ScoreTable,
};
pub use experiments::{
    evaluate, jpeg_ladder, misalignment_experiment, per_group_srcc, CorrelationReport, GroupSrcc,
    LadderReport, LadderStep, MetricMisalignment, MisalignmentReport, Monotonicity,
};
pub use logistic::{fit_logistic, linear_fit, logistic, FitOptions, LogisticParams};
pub use simplex::{nelder_mead, SimplexOptions, SimplexResult};

use thiserror::Error;

use crate::image_io::ImageIoError;
use crate::metric::MetricError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("logistic fit did not converge from any start")]
    FitDivergence,
    #[error("group `{group}` has {size} row(s), need at least 2")]
    GroupTooSmall { group: String, size: usize },
    #[error("table has no group column")]
    NoGroups,
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },
    #[error("duplicate image path `{0}` in manifest")]
    DuplicatePath(String),
    #[error("failed to score {} image(s): {}", .0.len(), .0.iter().map(|f| f.path.as_str()).collect::<Vec<_>>().join(", "))]
    ImageFailures(Vec<ImageFailure>),
    #[error("qualities must be strictly decreasing, within 1..=100, and number at least 2")]
    InvalidLadder,
    #[error(transparent)]
    Image(#[from] ImageIoError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid worker count 0")]
    ZeroParallelism,
}
