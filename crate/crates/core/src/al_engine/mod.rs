//! Two-level active learning: chemical cycles that grow a specific set
//! through property filters, nested in affinity cycles that score it and
//! tighten thresholds. Every completed step is one ledger line.

mod config;
mod engine;
mod ledger;
mod report;
mod state;

use std::path::PathBuf;

pub use config::{OracleKind, Phase, RunConfig, SmartsStage, VaeSection};
pub use engine::{
    derive_seed, encode_corpus, replay, resume_run, start_run, train_general, RunOptions, RunOutcome, CHECKPOINT_DIR,
    LEDGER_FILE, REPORT_DIR,
};
pub use ledger::{chain, read_ledger, LedgerContents, LedgerWriter, GENESIS};
pub use report::{build_report, write_report, RunReport};
pub use state::{
    AffinityCycleRecord, CheckpointRef, ChemicalCycleRecord, Event, FilterStage, FinetuneRecord, Origin, RunCompleted,
    RunStarted, RunState, SetSizes, Step, StopReason,
};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("ledger line {line}: {msg}")]
    Ledger { line: usize, msg: String },
    #[error("ledger replay: {0}")]
    Inconsistent(String),
    #[error("{0} already holds a run; resume it or pick another directory")]
    AlreadyStarted(PathBuf),
    #[error("{0} holds no ledger")]
    NotStarted(PathBuf),
    #[error(transparent)]
    Vae(#[from] crate::vae::VaeError),
    #[error(transparent)]
    Affinity(#[from] crate::affinity::AffinityError),
    #[error(transparent)]
    Catalogue(#[from] crate::smarts::CatalogueError),
    #[error(transparent)]
    Fingerprint(#[from] crate::fingerprints::FingerprintError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl EngineError {
    /// True for problems with the invocation or configuration rather than the data.
    pub fn is_usage(&self) -> bool {
        matches!(self, EngineError::Config(_) | EngineError::AlreadyStarted(_) | EngineError::NotStarted(_))
    }
}
