//! Segmentation evaluation and precision analysis.
//!
//! Per-subject Dice and 95th-percentile Hausdorff distances are computed from
//! NIfTI-1 label volumes. The statistical side turns a series of per-subject
//! values into parametric and percentile-bootstrap confidence intervals for
//! the mean, runs repeated subsample sweeps, generates Gaussian lookup tables
//! and test-set size plans, and checks interval coverage by simulation.
//!
//! Every stochastic routine is driven by counter-based random streams keyed
//! on an explicit seed, so results do not depend on thread count.

pub mod ci;
pub mod coverage;
pub mod metrics;
pub mod nifti;
pub mod planner;
pub mod rng;
pub mod stats;
pub mod subsample;
pub mod volume;

pub use ci::{
    bootstrap_ci, exhaustive_bootstrap, parametric_ci, parametric_ci_with, BootstrapConfig, BootstrapReport, CiError,
    CiReport, MetricSeries, SdDivisor,
};
pub use coverage::{run_coverage, CoverageConfig, CoverageReport, CoverageResult, SyntheticDistribution};
pub use metrics::{dice, evaluate_subject, hd95, surface_voxels, Hd95, SubjectMetrics};
pub use nifti::{parse_nifti, read_nifti, write_nifti, NiftiError, NiftiHeader};
pub use planner::{gaussian_table, plan_sample_size, PlanResult, TableSpec};
pub use stats::ConfidenceLevel;
pub use subsample::{draw_subsample, run_sweep, SubsampleSweepResult, SweepConfig};
pub use volume::{extract_binary_mask, LabelVolume, VolumeError};
