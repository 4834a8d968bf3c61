//! Monte Carlo check of interval coverage and of how closely the
//! normal-approximation interval tracks the percentile bootstrap.
//!
//! Each trial draws a synthetic test set from a distribution with a known
//! mean, builds both intervals, and records whether they contain that mean.

use crate::ci::{self, BootstrapConfig, MetricSeries};
use crate::rng::{self, tag};
use crate::stats::{self, ConfidenceLevel};
use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub const MIN_TRIALS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoverageError {
    #[error("unknown distribution {0:?}")]
    UnknownDistribution(String),
    #[error("invalid parameters for {kind}: {reason}")]
    BadParameters { kind: &'static str, reason: String },
    #[error("at least {MIN_TRIALS} trials are required, got {0}")]
    TooFewTrials(usize),
    #[error("test-set size must be at least 1")]
    ZeroSize,
    #[error("bootstrap resample count must be at least 1")]
    ZeroResamples,
}

/// Generators for synthetic per-subject metric values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SyntheticDistribution {
    Gaussian { mean: f64, sd: f64 },
    /// Normal(mean, sd) conditioned on [lower, upper].
    TruncatedGaussian { mean: f64, sd: f64, lower: f64, upper: f64 },
    /// `floor + LogNormal`, parameterized by its overall mean and sd.
    /// Right-skewed and bounded below, like surface distances.
    ShiftedLogNormal { mean: f64, sd: f64, floor: f64 },
    /// `high` with probability `p_high`, else `low`.
    TwoPoint { low: f64, high: f64, p_high: f64 },
}

/// Named generators matching measured full-test-set moments
/// (Hippocampus n = 110, Brain Tumor n = 334, first label).
pub const PRESETS: [(&str, SyntheticDistribution); 8] = [
    ("hippocampus-3d-dice", SyntheticDistribution::Gaussian { mean: 89.714, sd: 2.797 }),
    ("hippocampus-3d-hd", SyntheticDistribution::ShiftedLogNormal { mean: 1.205, sd: 0.472, floor: 0.5 }),
    ("hippocampus-2d-dice", SyntheticDistribution::Gaussian { mean: 88.197, sd: 3.267 }),
    ("hippocampus-2d-hd", SyntheticDistribution::ShiftedLogNormal { mean: 1.311, sd: 0.806, floor: 0.5 }),
    ("brain-3d-dice", SyntheticDistribution::Gaussian { mean: 80.265, sd: 11.947 }),
    ("brain-3d-hd", SyntheticDistribution::ShiftedLogNormal { mean: 7.726, sd: 10.634, floor: 0.0 }),
    ("brain-2d-dice", SyntheticDistribution::Gaussian { mean: 77.489, sd: 13.115 }),
    ("brain-2d-hd", SyntheticDistribution::ShiftedLogNormal { mean: 8.855, sd: 11.262, floor: 0.0 }),
];

fn bad(kind: &'static str, reason: impl Into<String>) -> CoverageError {
    CoverageError::BadParameters {
        kind,
        reason: reason.into(),
    }
}

impl SyntheticDistribution {
    pub fn preset(name: &str) -> Option<Self> {
        PRESETS.iter().find(|(n, _)| *n == name).map(|(_, d)| *d)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Gaussian { .. } => "gaussian",
            Self::TruncatedGaussian { .. } => "truncated",
            Self::ShiftedLogNormal { .. } => "lognormal",
            Self::TwoPoint { .. } => "two-point",
        }
    }

    pub fn validate(&self) -> Result<(), CoverageError> {
        let kind = self.kind();
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match *self {
            Self::Gaussian { mean, sd } => {
                if !finite(&[mean, sd]) || sd < 0.0 {
                    return Err(bad(kind, "mean and sd must be finite, sd >= 0"));
                }
            }
            Self::TruncatedGaussian { mean, sd, lower, upper } => {
                if !finite(&[mean, sd, lower, upper]) || sd < 0.0 || lower >= upper {
                    return Err(bad(kind, "need finite parameters, sd >= 0 and lower < upper"));
                }
                if sd == 0.0 && !(lower..=upper).contains(&mean) {
                    return Err(bad(kind, "degenerate distribution outside its bounds"));
                }
                if sd > 0.0 && truncated_mass(mean, sd, lower, upper) <= 0.0 {
                    return Err(bad(kind, "bounds carry no probability mass"));
                }
            }
            Self::ShiftedLogNormal { mean, sd, floor } => {
                if !finite(&[mean, sd, floor]) || sd <= 0.0 || floor >= mean {
                    return Err(bad(kind, "need finite parameters, sd > 0 and floor < mean"));
                }
            }
            Self::TwoPoint { low, high, p_high } => {
                if !finite(&[low, high, p_high]) || !(0.0..=1.0).contains(&p_high) {
                    return Err(bad(kind, "need finite values and p in [0, 1]"));
                }
            }
        }
        Ok(())
    }

    /// Expected value of the generator.
    pub fn analytic_mean(&self) -> f64 {
        match *self {
            Self::Gaussian { mean, .. } | Self::ShiftedLogNormal { mean, .. } => mean,
            Self::TruncatedGaussian { mean, sd, lower, upper } => {
                if sd == 0.0 {
                    return mean;
                }
                let a = (lower - mean) / sd;
                let b = (upper - mean) / sd;
                let mass = stats::normal_cdf(b) - stats::normal_cdf(a);
                mean + sd * (stats::normal_pdf(a) - stats::normal_pdf(b)) / mass
            }
            Self::TwoPoint { low, high, p_high } => low + p_high * (high - low),
        }
    }

    /// Location and scale of the underlying log-normal.
    fn log_params(mean: f64, sd: f64, floor: f64) -> (f64, f64) {
        let m = mean - floor;
        let s2 = (1.0 + (sd / m).powi(2)).ln();
        (m.ln() - s2 / 2.0, s2.sqrt())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Gaussian { mean, sd } => Normal::new(mean, sd).expect("validated").sample(rng),
            Self::TruncatedGaussian { mean, sd, lower, upper } => {
                if sd == 0.0 {
                    return mean;
                }
                let lo = stats::normal_cdf((lower - mean) / sd);
                let hi = stats::normal_cdf((upper - mean) / sd);
                let u = lo + rng.random::<f64>() * (hi - lo);
                let x = mean + sd * stats::normal_quantile(u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON));
                x.clamp(lower, upper)
            }
            Self::ShiftedLogNormal { mean, sd, floor } => {
                let (mu, sigma) = Self::log_params(mean, sd, floor);
                floor + LogNormal::new(mu, sigma).expect("validated").sample(rng)
            }
            Self::TwoPoint { low, high, p_high } => {
                if rng.random_bool(p_high) {
                    high
                } else {
                    low
                }
            }
        }
    }
}

fn truncated_mass(mean: f64, sd: f64, lower: f64, upper: f64) -> f64 {
    stats::normal_cdf((upper - mean) / sd) - stats::normal_cdf((lower - mean) / sd)
}

impl FromStr for SyntheticDistribution {
    type Err = CoverageError;

    /// `gaussian:MEAN,SD`, `truncated:MEAN,SD[,LO,HI]` (default bounds 0,100),
    /// `lognormal:MEAN,SD,FLOOR`, `two-point:LOW,HIGH,P`, `constant:V`,
    /// or a preset name.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(d) = Self::preset(s) {
            return Ok(d);
        }
        let unknown = || CoverageError::UnknownDistribution(s.to_string());
        let (kind, args) = s.split_once(':').ok_or_else(unknown)?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| unknown())?;
        let d = match (kind, nums.as_slice()) {
            ("gaussian", &[mean, sd]) => Self::Gaussian { mean, sd },
            ("constant", &[v]) => Self::Gaussian { mean: v, sd: 0.0 },
            ("truncated", &[mean, sd]) => Self::TruncatedGaussian { mean, sd, lower: 0.0, upper: 100.0 },
            ("truncated", &[mean, sd, lower, upper]) => Self::TruncatedGaussian { mean, sd, lower, upper },
            ("lognormal", &[mean, sd, floor]) => Self::ShiftedLogNormal { mean, sd, floor },
            ("two-point", &[low, high, p_high]) => Self::TwoPoint { low, high, p_high },
            _ => return Err(unknown()),
        };
        d.validate()?;
        Ok(d)
    }
}

impl fmt::Display for SyntheticDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Gaussian { mean, sd } => write!(f, "gaussian:{mean},{sd}"),
            Self::TruncatedGaussian { mean, sd, lower, upper } => write!(f, "truncated:{mean},{sd},{lower},{upper}"),
            Self::ShiftedLogNormal { mean, sd, floor } => write!(f, "lognormal:{mean},{sd},{floor}"),
            Self::TwoPoint { low, high, p_high } => write!(f, "two-point:{low},{high},{p_high}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    pub n: usize,
    pub trials: usize,
    pub level: ConfidenceLevel,
    pub seed: u64,
    /// Bootstrap resamples per trial; `None` skips the bootstrap.
    pub bootstrap_m: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Parametric,
    Bootstrap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub method: Method,
    pub trials: usize,
    pub n: usize,
    /// Fraction of trials whose interval contains the analytic mean.
    pub empirical_coverage: f64,
    /// Binomial standard error of the coverage estimate.
    pub coverage_se: f64,
    pub mean_width: f64,
    pub median_width: f64,
    /// Median over trials of parametric width / bootstrap width.
    pub width_ratio_parametric_over_bootstrap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub distribution: SyntheticDistribution,
    pub analytic_mean: f64,
    pub config: CoverageConfig,
    pub parametric: CoverageResult,
    pub bootstrap: Option<CoverageResult>,
}

#[derive(Debug, Clone, Copy)]
struct Trial {
    param_width: f64,
    param_covers: bool,
    boot: Option<(f64, bool)>,
}

fn run_trial(dist: &SyntheticDistribution, config: &CoverageConfig, truth: f64, t: u64) -> Trial {
    let mut rng = rng::stream(config.seed, &[tag::COVERAGE_TRIAL, t]);
    let values: Vec<f64> = (0..config.n).map(|_| dist.sample(&mut rng)).collect();
    let series = MetricSeries::from_values(values).expect("generated samples are finite");
    let param = ci::parametric_ci(&series, config.level);
    let param_covers = (param.mu - truth).abs() <= param.ci.1;
    let boot = config.bootstrap_m.map(|m| {
        let b = ci::bootstrap_ci(
            &series,
            &BootstrapConfig {
                m,
                level: config.level,
                seed: rng::derive_seed(config.seed, &[tag::COVERAGE_BOOTSTRAP, t]),
                keep_means: false,
            },
        )
        .expect("m validated");
        (b.width, b.bounds.0 <= truth && truth <= b.bounds.1)
    });
    Trial {
        param_width: param.width,
        param_covers,
        boot,
    }
}

fn aggregate(method: Method, n: usize, covers: &[bool], widths: &[f64], ratio: Option<f64>) -> CoverageResult {
    let trials = covers.len();
    let c = covers.iter().filter(|&&x| x).count() as f64 / trials as f64;
    CoverageResult {
        method,
        trials,
        n,
        empirical_coverage: c,
        coverage_se: (c * (1.0 - c) / trials as f64).sqrt(),
        mean_width: stats::mean(widths),
        median_width: stats::median(widths).unwrap_or(f64::NAN),
        width_ratio_parametric_over_bootstrap: ratio,
    }
}

/// Simulates `config.trials` test sets of size `config.n` from `dist`.
pub fn run_coverage(dist: &SyntheticDistribution, config: &CoverageConfig) -> Result<CoverageReport, CoverageError> {
    dist.validate()?;
    if config.trials < MIN_TRIALS {
        return Err(CoverageError::TooFewTrials(config.trials));
    }
    if config.n == 0 {
        return Err(CoverageError::ZeroSize);
    }
    if config.bootstrap_m == Some(0) {
        return Err(CoverageError::ZeroResamples);
    }
    let truth = dist.analytic_mean();
    let trials: Vec<Trial> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(dist, config, truth, t))
        .collect();

    let ratios: Vec<f64> = trials
        .iter()
        .filter_map(|t| t.boot.filter(|b| b.0 > 0.0).map(|b| t.param_width / b.0))
        .collect();
    let ratio = stats::median(&ratios);

    let parametric = aggregate(
        Method::Parametric,
        config.n,
        &trials.iter().map(|t| t.param_covers).collect::<Vec<_>>(),
        &trials.iter().map(|t| t.param_width).collect::<Vec<_>>(),
        ratio,
    );
    let bootstrap = config.bootstrap_m.map(|_| {
        let boots: Vec<(f64, bool)> = trials.iter().map(|t| t.boot.unwrap()).collect();
        aggregate(
            Method::Bootstrap,
            config.n,
            &boots.iter().map(|b| b.1).collect::<Vec<_>>(),
            &boots.iter().map(|b| b.0).collect::<Vec<_>>(),
            ratio,
        )
    });
    Ok(CoverageReport {
        distribution: *dist,
        analytic_mean: truth,
        config: *config,
        parametric,
        bootstrap,
    })
}
