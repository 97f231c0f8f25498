//! Multi-target affinity scoring and the threshold state machine.

mod oracle;
mod thresholds;

pub use oracle::{
    build_fixed_set, bundled_targets, parse_targets, score_requests_csv, scores_csv, AffinityOracle, CsvOracle, FixedSet,
    MockOracle, ScoreCache, Target, MOCK_MAX, MOCK_MIN,
};
pub use thresholds::{
    advance, decay, evaluate, evaluate_at, from_milli, simulate, to_milli, update_patience, CycleTransition, ScoreRecord,
    ThresholdState,
};

#[derive(Debug, thiserror::Error)]
pub enum AffinityError {
    #[error("no score for {molecule} against target {target}")]
    MissingScore { molecule: String, target: String },
    #[error("unknown target {0}")]
    UnknownTarget(String),
    #[error("invalid affinity configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
