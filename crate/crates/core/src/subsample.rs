//! Repeated subsample sweeps: how interval estimates behave as the test set
//! shrinks.
//!
//! For each size k and drawing j a subsample S(k, j) is taken from the full
//! series, summarized parametrically and by bootstrap, and the per-drawing
//! quantities are averaged over j.

use crate::ci::{self, BootstrapConfig, CiError, MetricSeries};
use crate::rng::{self, tag};
use crate::stats::{self, ConfidenceLevel};
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_REPEATS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("subsample size {k} exceeds population size {n}")]
    SizeExceedsPopulation { k: usize, n: usize },
    #[error("subsample size must be at least 1")]
    ZeroSize,
    #[error("sizes must be non-empty and strictly ascending")]
    BadSizes,
    #[error("repeats must be at least 1")]
    ZeroRepeats,
    #[error(transparent)]
    Ci(#[from] CiError),
}

/// Draws k values uniformly without replacement, kept in series order.
pub fn draw_subsample<R: Rng + ?Sized>(series: &MetricSeries, k: usize, rng: &mut R) -> Result<MetricSeries, SweepError> {
    let n = series.len();
    if k == 0 {
        return Err(SweepError::ZeroSize);
    }
    if k > n {
        return Err(SweepError::SizeExceedsPopulation { k, n });
    }
    let mut picked = index::sample(rng, n, k).into_vec();
    picked.sort_unstable();
    let values = picked.into_iter().map(|i| series.values()[i]).collect();
    Ok(series.with_values(values)?)
}

/// Draws k values uniformly with replacement, sorted by source position.
pub fn draw_with_replacement<R: Rng + ?Sized>(
    series: &MetricSeries,
    k: usize,
    rng: &mut R,
) -> Result<MetricSeries, SweepError> {
    if k == 0 {
        return Err(SweepError::ZeroSize);
    }
    let n = series.len();
    let mut picked: Vec<usize> = (0..k).map(|_| rng.random_range(0..n as u32) as usize).collect();
    picked.sort_unstable();
    let values = picked.into_iter().map(|i| series.values()[i]).collect();
    Ok(series.with_values(values)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub sizes: Vec<usize>,
    pub repeats: usize,
    /// Bootstrap resamples per subsample.
    pub m: usize,
    pub level: ConfidenceLevel,
    pub seed: u64,
    /// Draw subsamples with replacement instead of without.
    pub with_replacement: bool,
}

impl SweepConfig {
    /// Sizes {10, 20, 30, 50, 100, 200, ...} below n, then n itself.
    pub fn default_sizes(n: usize) -> Vec<usize> {
        let mut sizes: Vec<usize> = [10, 20, 30, 50]
            .into_iter()
            .chain((1..).map(|i| 100 * i).take_while(|&k| k < n))
            .filter(|&k| k < n)
            .collect();
        sizes.push(n);
        sizes
    }

    pub fn for_population(n: usize, seed: u64) -> Self {
        Self {
            sizes: Self::default_sizes(n),
            repeats: DEFAULT_REPEATS,
            m: ci::DEFAULT_RESAMPLES,
            level: ConfidenceLevel::NINETY_FIVE,
            seed,
            with_replacement: false,
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), SweepError> {
        if self.sizes.is_empty() || self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SweepError::BadSizes);
        }
        for &k in &self.sizes {
            if k == 0 {
                return Err(SweepError::ZeroSize);
            }
            if k > n && !self.with_replacement {
                return Err(SweepError::SizeExceedsPopulation { k, n });
            }
        }
        if self.repeats == 0 {
            return Err(SweepError::ZeroRepeats);
        }
        if self.m == 0 {
            return Err(CiError::ZeroResamples.into());
        }
        Ok(())
    }
}

/// Estimates for one drawing S(k, j).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawRecord {
    pub k: usize,
    pub j: usize,
    pub mu: f64,
    pub sigma: f64,
    pub sem: f64,
    pub nu: Option<f64>,
    pub mu_star: f64,
    pub sem_star: f64,
    pub a_star: f64,
    pub b_star: f64,
}

/// Averages over the drawings of one size k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub mu: f64,
    pub sigma: f64,
    pub sem: f64,
    /// `[-z * sem, z * sem]` from the averaged SEM.
    pub ci: (f64, f64),
    /// Average of the per-drawing normalized widths.
    pub nu: Option<f64>,
    pub mu_star: f64,
    pub sem_star: f64,
    /// Averaged percentile bounds a*, b*.
    pub bounds_star: (f64, f64),
    /// `(a* - mu*, b* - mu*)` from the averages.
    pub ci_star: (f64, f64),
    /// `(b* - a*) / mu*` from the averages.
    pub nu_star: Option<f64>,
    /// Standard deviation of SEM(k, j) over the drawings.
    pub sem_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleSweepResult {
    pub config: SweepConfig,
    pub n: usize,
    pub rows: Vec<SweepRow>,
    /// Per-drawing records ordered by (k, j).
    pub draws: Vec<DrawRecord>,
}

fn run_cell(series: &MetricSeries, config: &SweepConfig, k: usize, j: usize) -> Result<DrawRecord, SweepError> {
    let mut draw_rng = rng::stream(config.seed, &[tag::SUBSAMPLE_DRAW, k as u64, j as u64]);
    let sub = if config.with_replacement {
        draw_with_replacement(series, k, &mut draw_rng)?
    } else {
        draw_subsample(series, k, &mut draw_rng)?
    };
    let param = ci::parametric_ci(&sub, config.level);
    let boot = ci::bootstrap_ci(
        &sub,
        &BootstrapConfig {
            m: config.m,
            level: config.level,
            seed: rng::derive_seed(config.seed, &[tag::SUBSAMPLE_BOOTSTRAP, k as u64, j as u64]),
            keep_means: false,
        },
    )?;
    Ok(DrawRecord {
        k,
        j,
        mu: param.mu,
        sigma: param.sigma,
        sem: param.sem,
        nu: param.nu,
        mu_star: boot.mu_star,
        sem_star: boot.sem_star,
        a_star: boot.bounds.0,
        b_star: boot.bounds.1,
    })
}

fn summarize(k: usize, draws: &[DrawRecord], z: f64) -> SweepRow {
    let avg = |f: fn(&DrawRecord) -> f64| stats::mean(&draws.iter().map(f).collect::<Vec<_>>());
    let sems: Vec<f64> = draws.iter().map(|d| d.sem).collect();
    let sem = stats::mean(&sems);
    let nus: Option<Vec<f64>> = draws.iter().map(|d| d.nu).collect();
    let mu_star = avg(|d| d.mu_star);
    let a = avg(|d| d.a_star);
    let b = avg(|d| d.b_star);
    SweepRow {
        k,
        mu: avg(|d| d.mu),
        sigma: avg(|d| d.sigma),
        sem,
        ci: (-z * sem, z * sem),
        nu: nus.map(|v| stats::mean(&v)),
        mu_star,
        sem_star: avg(|d| d.sem_star),
        bounds_star: (a, b),
        ci_star: (a - mu_star, b - mu_star),
        nu_star: (mu_star != 0.0).then(|| (b - a) / mu_star),
        sem_spread: stats::pop_std(&sems, sem),
    }
}

/// Runs the full sweep. Cells are computed in parallel and reduced in
/// (k, j) order.
pub fn run_sweep(series: &MetricSeries, config: &SweepConfig) -> Result<SubsampleSweepResult, SweepError> {
    config.validate(series.len())?;
    let cells: Vec<(usize, usize)> = config
        .sizes
        .iter()
        .flat_map(|&k| (0..config.repeats).map(move |j| (k, j)))
        .collect();
    let draws = cells
        .into_par_iter()
        .map(|(k, j)| run_cell(series, config, k, j))
        .collect::<Result<Vec<_>, _>>()?;
    let z = config.level.z();
    let rows = draws
        .chunks(config.repeats)
        .map(|chunk| summarize(chunk[0].k, chunk, z))
        .collect();
    Ok(SubsampleSweepResult {
        config: config.clone(),
        n: series.len(),
        rows,
        draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn abc() -> MetricSeries {
        MetricSeries::from_values(vec![1.0, 2.0, 3.0]).unwrap()
    }

    #[test]
    fn full_draw_is_the_series() {
        let s = MetricSeries::from_values(vec![4.0, 1.0, 9.0, 2.5]).unwrap();
        let mut rng = rng::stream(1, &[]);
        let d = draw_subsample(&s, 4, &mut rng).unwrap();
        assert_eq!(d.values(), s.values());
        let one = draw_subsample(&s, 1, &mut rng).unwrap();
        assert!(s.values().contains(&one.values()[0]));
        assert_eq!(
            draw_subsample(&s, 5, &mut rng),
            Err(SweepError::SizeExceedsPopulation { k: 5, n: 4 })
        );
        assert_eq!(draw_subsample(&s, 0, &mut rng), Err(SweepError::ZeroSize));
    }

    #[test]
    fn pair_frequencies_are_uniform() {
        let s = abc();
        let mut counts: HashMap<Vec<u64>, usize> = HashMap::new();
        let trials = 10_000;
        for t in 0..trials {
            let mut rng = rng::stream(5, &[t]);
            let d = draw_subsample(&s, 2, &mut rng).unwrap();
            let key = d.values().iter().map(|v| v.to_bits()).collect();
            *counts.entry(key).or_default() += 1;
        }
        assert_eq!(counts.len(), 3);
        for (_, c) in counts {
            let f = c as f64 / trials as f64;
            assert!((f - 1.0 / 3.0).abs() < 0.02, "frequency {f}");
        }
    }

    #[test]
    fn default_sizes() {
        assert_eq!(SweepConfig::default_sizes(110), vec![10, 20, 30, 50, 100, 110]);
        assert_eq!(SweepConfig::default_sizes(334), vec![10, 20, 30, 50, 100, 200, 300, 334]);
        assert_eq!(SweepConfig::default_sizes(25), vec![10, 20, 25]);
    }

    #[test]
    fn config_validation() {
        let mut c = SweepConfig::for_population(10, 0);
        c.sizes = vec![5, 3];
        assert_eq!(c.validate(10), Err(SweepError::BadSizes));
        c.sizes = vec![3, 11];
        assert_eq!(c.validate(10), Err(SweepError::SizeExceedsPopulation { k: 11, n: 10 }));
        c.sizes = vec![3];
        c.repeats = 0;
        assert_eq!(c.validate(10), Err(SweepError::ZeroRepeats));
    }

    #[test]
    fn constant_series_has_zero_width() {
        let s = MetricSeries::from_values(vec![7.5; 30]).unwrap();
        let cfg = SweepConfig {
            sizes: vec![5, 30],
            repeats: 4,
            m: 200,
            level: ConfidenceLevel::NINETY_FIVE,
            seed: 3,
            with_replacement: false,
        };
        let r = run_sweep(&s, &cfg).unwrap();
        for row in &r.rows {
            assert_eq!(row.sem, 0.0);
            assert_eq!(row.ci, (-0.0, 0.0));
            assert_eq!(row.ci_star, (0.0, 0.0));
        }
    }

    #[test]
    fn full_size_matches_full_set() {
        let values: Vec<f64> = (0..40).map(|i| 50.0 + ((i * 37) % 17) as f64 * 1.3).collect();
        let s = MetricSeries::from_values(values).unwrap();
        let full = ci::parametric_ci(&s, ConfidenceLevel::NINETY_FIVE);
        let cfg = SweepConfig {
            sizes: vec![10, 40],
            repeats: 5,
            m: 100,
            level: ConfidenceLevel::NINETY_FIVE,
            seed: 11,
            with_replacement: false,
        };
        let r = run_sweep(&s, &cfg).unwrap();
        for d in r.draws.iter().filter(|d| d.k == 40) {
            assert_eq!((d.mu, d.sigma, d.sem), (full.mu, full.sigma, full.sem));
        }
        let last = r.rows.last().unwrap();
        assert_eq!((last.mu, last.sigma, last.sem), (full.mu, full.sigma, full.sem));
        assert_eq!(r.draws.len(), 10);
        assert!(r.rows.iter().all(|row| row.bounds_star.0 <= row.bounds_star.1));
    }
}
