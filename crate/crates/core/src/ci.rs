//! Confidence intervals for the mean of a metric series.
//!
//! Two routes are provided: the normal approximation built from the
//! standard error of the mean, and the percentile bootstrap over resample
//! means. Intervals are reported relative to the mean, as `[a - mu, b - mu]`.

use crate::rng::{self, tag};
use crate::stats::{self, ConfidenceLevel};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Resample count used when none is given.
pub const DEFAULT_RESAMPLES: usize = 15_000;
/// Largest series `exhaustive_bootstrap` will enumerate.
pub const MAX_ENUMERATION_SIZE: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CiError {
    #[error("series is empty")]
    EmptySeries,
    #[error("value {value} at position {index} is not finite")]
    NonFiniteValue { index: usize, value: f64 },
    #[error("resample count must be at least 1")]
    ZeroResamples,
    #[error("sample standard deviation needs at least two values")]
    TooFewForSampleSd,
    #[error("exhaustive enumeration supports at most {MAX_ENUMERATION_SIZE} values, got {0}")]
    TooLargeForEnumeration(usize),
}

/// Per-subject values of one metric on one test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    name: String,
    values: Vec<f64>,
    unit: String,
}

impl MetricSeries {
    pub fn new(name: impl Into<String>, values: Vec<f64>, unit: impl Into<String>) -> Result<Self, CiError> {
        if values.is_empty() {
            return Err(CiError::EmptySeries);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(CiError::NonFiniteValue { index, value });
        }
        Ok(Self {
            name: name.into(),
            values,
            unit: unit.into(),
        })
    }

    /// Unnamed, unitless series.
    pub fn from_values(values: Vec<f64>) -> Result<Self, CiError> {
        Self::new("", values, "")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        stats::mean(&self.values)
    }

    /// Same name and unit, different values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, CiError> {
        Self::new(self.name.clone(), values, self.unit.clone())
    }
}

/// Divisor used for the standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdDivisor {
    /// Divide by n.
    #[default]
    Population,
    /// Divide by n - 1.
    Sample,
}

/// Normal-approximation summary of a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiReport {
    pub n: usize,
    pub level: ConfidenceLevel,
    pub divisor: SdDivisor,
    pub mu: f64,
    pub sigma: f64,
    pub sem: f64,
    /// Critical value, the normal quantile at (1 + level) / 2.
    pub z: f64,
    /// `[-z * sem, z * sem]`.
    pub ci: (f64, f64),
    pub width: f64,
    /// `width / mu`; `None` when mu is zero.
    pub nu: Option<f64>,
    /// z rounded to two decimals (1.96 at 95%).
    pub z_rounded: f64,
    /// The interval recomputed with `z_rounded`.
    pub ci_rounded: (f64, f64),
    pub nu_rounded: Option<f64>,
}

impl CiReport {
    /// Builds the report from already-known moments.
    pub fn from_moments(mu: f64, sigma: f64, n: usize, level: ConfidenceLevel, divisor: SdDivisor) -> Self {
        let sem = sigma / (n as f64).sqrt();
        let z = level.z();
        let z_rounded = level.z_rounded();
        let half = z * sem;
        let half_rounded = z_rounded * sem;
        let ratio = |w: f64| (mu != 0.0).then(|| w / mu);
        Self {
            n,
            level,
            divisor,
            mu,
            sigma,
            sem,
            z,
            ci: (-half, half),
            width: 2.0 * half,
            nu: ratio(2.0 * half),
            z_rounded,
            ci_rounded: (-half_rounded, half_rounded),
            nu_rounded: ratio(2.0 * half_rounded),
        }
    }
}

pub fn parametric_ci(series: &MetricSeries, level: ConfidenceLevel) -> CiReport {
    parametric_ci_with(series, level, SdDivisor::Population).expect("population divisor accepts any n >= 1")
}

pub fn parametric_ci_with(
    series: &MetricSeries,
    level: ConfidenceLevel,
    divisor: SdDivisor,
) -> Result<CiReport, CiError> {
    let values = series.values();
    let n = values.len();
    let mu = stats::mean(values);
    let sigma = match divisor {
        SdDivisor::Population => stats::pop_std(values, mu),
        SdDivisor::Sample if n < 2 => return Err(CiError::TooFewForSampleSd),
        SdDivisor::Sample => stats::std_dev(values, mu, (n - 1) as f64),
    };
    Ok(CiReport::from_moments(mu, sigma, n, level, divisor))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub m: usize,
    pub level: ConfidenceLevel,
    pub seed: u64,
    /// Keep the resample means in the report.
    pub keep_means: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            m: DEFAULT_RESAMPLES,
            level: ConfidenceLevel::NINETY_FIVE,
            seed: 0,
            keep_means: false,
        }
    }
}

/// Percentile-bootstrap summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    /// Number of resamples (n^n for the exhaustive variant).
    pub m: u64,
    pub n: usize,
    pub level: ConfidenceLevel,
    pub seed: Option<u64>,
    pub mu_star: f64,
    pub sem_star: f64,
    /// Percentile bounds a*, b* of the resample means.
    pub bounds: (f64, f64),
    /// `(a* - mu*, b* - mu*)`.
    pub ci_star: (f64, f64),
    pub width: f64,
    /// `(b* - a*) / mu*`; `None` when mu* is zero.
    pub nu_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resample_means: Option<Vec<f64>>,
}

impl BootstrapReport {
    fn assemble(n: usize, m: u64, level: ConfidenceLevel, seed: Option<u64>, mu_star: f64, sem_star: f64, bounds: (f64, f64)) -> Self {
        let width = bounds.1 - bounds.0;
        Self {
            m,
            n,
            level,
            seed,
            mu_star,
            sem_star,
            bounds,
            ci_star: (bounds.0 - mu_star, bounds.1 - mu_star),
            width,
            nu_star: (mu_star != 0.0).then(|| width / mu_star),
            resample_means: None,
        }
    }
}

/// Mean of resample `index`, drawn from its own stream under `seed`.
fn resample_mean(values: &[f64], centered: &[f64], seed: u64, index: u64) -> f64 {
    let n = values.len();
    let mut rng = rng::stream(seed, &[tag::BOOTSTRAP_RESAMPLE, index]);
    let mut sum = 0.0;
    for _ in 0..n {
        sum += centered[rng.random_range(0..n as u32) as usize];
    }
    values[0] + sum / n as f64
}

/// Means of `m` resamples of size n drawn with replacement, in resample order.
pub fn resample_means(series: &MetricSeries, m: usize, seed: u64) -> Vec<f64> {
    let values = series.values();
    let origin = values[0];
    let centered: Vec<f64> = values.iter().map(|v| v - origin).collect();
    (0..m)
        .into_par_iter()
        .with_min_len(256)
        .map(|i| resample_mean(values, &centered, seed, i as u64))
        .collect()
}

/// Summarizes resample means that are already in canonical order.
pub fn summarize_resample_means(means: &[f64], n: usize, level: ConfidenceLevel, seed: Option<u64>) -> BootstrapReport {
    let mu_star = stats::mean(means);
    let sem_star = stats::pop_std(means, mu_star);
    let mut sorted = means.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = level.tails();
    let bounds = (stats::percentile_sorted(&sorted, lo), stats::percentile_sorted(&sorted, hi));
    BootstrapReport::assemble(n, means.len() as u64, level, seed, mu_star, sem_star, bounds)
}

/// Percentile bootstrap CI of the mean.
///
/// Resample `i` draws from stream `(seed, i)`, so the report is identical
/// for any thread count.
pub fn bootstrap_ci(series: &MetricSeries, config: &BootstrapConfig) -> Result<BootstrapReport, CiError> {
    if config.m == 0 {
        return Err(CiError::ZeroResamples);
    }
    let means = resample_means(series, config.m, config.seed);
    let mut report = summarize_resample_means(&means, series.len(), config.level, Some(config.seed));
    if config.keep_means {
        report.resample_means = Some(means);
    }
    Ok(report)
}

/// The exact bootstrap distribution of the resample mean: every distinct
/// resample (as a multiset of indices) with the number of the n^n ordered
/// resamples that produce it. Atoms are sorted by mean.
pub fn bootstrap_distribution(series: &MetricSeries) -> Result<Vec<(f64, u64)>, CiError> {
    let values = series.values();
    let n = values.len();
    if n > MAX_ENUMERATION_SIZE {
        return Err(CiError::TooLargeForEnumeration(n));
    }
    let origin = values[0];
    let factorial = |k: usize| (1..=k as u64).product::<u64>();
    let n_fact = factorial(n);

    let mut atoms = Vec::new();
    let mut counts = vec![0usize; n];
    fn visit(
        pos: usize,
        remaining: usize,
        counts: &mut Vec<usize>,
        emit: &mut dyn FnMut(&[usize]),
    ) {
        if pos + 1 == counts.len() {
            counts[pos] = remaining;
            emit(counts);
            return;
        }
        for c in (0..=remaining).rev() {
            counts[pos] = c;
            visit(pos + 1, remaining - c, counts, emit);
        }
    }
    visit(0, n, &mut counts, &mut |c: &[usize]| {
        let offset: f64 = c.iter().zip(values).map(|(&k, v)| k as f64 * (v - origin)).sum();
        let weight = n_fact / c.iter().map(|&k| factorial(k)).product::<u64>();
        atoms.push((origin + offset / n as f64, weight));
    });
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(atoms)
}

/// Percentile of a weighted atom list, as if each atom were repeated
/// `count` times and the linear-interpolation rule applied.
pub fn weighted_percentile(atoms: &[(f64, u64)], p: f64) -> f64 {
    let total: u64 = atoms.iter().map(|a| a.1).sum();
    assert!(total > 0, "percentile of an empty distribution");
    let pos = p * (total - 1) as f64;
    let lo = pos.floor() as u64;
    let frac = pos - lo as f64;
    let at = |rank: u64| {
        let mut seen = 0;
        for &(v, c) in atoms {
            seen += c;
            if rank < seen {
                return v;
            }
        }
        atoms.last().unwrap().0
    };
    let a = at(lo);
    if frac == 0.0 {
        a
    } else {
        a + frac * (at(lo + 1) - a)
    }
}

/// Inverse CDF of a weighted atom list: the smallest atom whose cumulative
/// probability reaches `p`. This is the large-M limit of the Monte Carlo
/// percentile, which the interpolated n^n percentile only approaches as n grows.
pub fn distribution_quantile(atoms: &[(f64, u64)], p: f64) -> f64 {
    let total: u64 = atoms.iter().map(|a| a.1).sum();
    let mut seen = 0;
    for &(v, c) in atoms {
        seen += c;
        if seen as f64 >= p * total as f64 {
            return v;
        }
    }
    atoms.last().expect("non-empty distribution").0
}

/// Exact bootstrap summary over all n^n equally likely resamples.
pub fn exhaustive_bootstrap(series: &MetricSeries, level: ConfidenceLevel) -> Result<BootstrapReport, CiError> {
    let atoms = bootstrap_distribution(series)?;
    let total: u64 = atoms.iter().map(|a| a.1).sum();
    let mu_star = atoms.iter().map(|&(v, c)| v * c as f64).sum::<f64>() / total as f64;
    let var = atoms
        .iter()
        .map(|&(v, c)| c as f64 * (v - mu_star) * (v - mu_star))
        .sum::<f64>()
        / total as f64;
    let (lo, hi) = level.tails();
    let bounds = (weighted_percentile(&atoms, lo), weighted_percentile(&atoms, hi));
    Ok(BootstrapReport::assemble(series.len(), total, level, None, mu_star, var.sqrt(), bounds))
}
