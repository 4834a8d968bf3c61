use segstat_core::coverage::CoverageError;
use segstat_core::planner::PlanError;
use segstat_core::stats::InvalidLevel;
use segstat_core::subsample::SweepError;
use segstat_core::{CiError, NiftiError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed metrics table: {0}")]
    Malformed(String),
    #[error("unknown column {name:?} (available: {available})")]
    UnknownColumn { name: String, available: String },
    #[error("column {0:?} has no defined values")]
    AllUndefined(String),
    #[error("no .nii or .nii.gz files in {0}")]
    NoSubjects(String),
    #[error("SEGSTAT_THREADS must be a positive integer, got {0:?}")]
    BadThreads(String),
    #[error(transparent)]
    Level(#[from] InvalidLevel),
    #[error(transparent)]
    Ci(#[from] CiError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error(transparent)]
    Nifti(#[from] NiftiError),
}
