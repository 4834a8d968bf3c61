//! Gaussian lookup tables of SEM and CI, and test-set size planning.

use crate::stats::ConfidenceLevel;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The factor used by the printed lookup table.
pub const TABLE_Z: f64 = 1.96;

/// Spreads in the default table, including measured values from real
/// Dice and HD95 evaluations (0.47, 0.81, 2.79, 3.26, 10.63, 11.26, 13.12).
pub const DEFAULT_SIGMAS: [f64; 13] = [
    0.47, 0.81, 1.0, 2.79, 3.26, 5.0, 10.63, 11.26, 12.0, 13.12, 20.0, 30.0, 50.0,
];
pub const DEFAULT_SIZES: [usize; 13] = [10, 20, 30, 50, 100, 200, 300, 500, 1000, 1500, 2000, 2500, 3000];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositiveInput { name: &'static str, value: f64 },
    #[error("table sizes must be at least 1")]
    ZeroSize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    pub sigmas: Vec<f64>,
    pub sizes: Vec<usize>,
}

impl Default for TableSpec {
    fn default() -> Self {
        Self {
            sigmas: DEFAULT_SIGMAS.to_vec(),
            sizes: DEFAULT_SIZES.to_vec(),
        }
    }
}

impl TableSpec {
    pub fn validate(&self) -> Result<(), PlanError> {
        for &s in &self.sigmas {
            positive("sigma", s)?;
        }
        if self.sizes.contains(&0) {
            return Err(PlanError::ZeroSize);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub k: usize,
    pub sem: f64,
    /// Half-width `1.96 * sem`, from the unrounded SEM.
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub sigma: f64,
    pub cells: Vec<TableCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianTable {
    pub z: f64,
    pub sizes: Vec<usize>,
    pub rows: Vec<TableRow>,
}

/// SEM = sigma / sqrt(k) and CI = [-1.96 SEM, 1.96 SEM] for every (sigma, k).
pub fn gaussian_table(spec: &TableSpec) -> Result<GaussianTable, PlanError> {
    spec.validate()?;
    let rows = spec
        .sigmas
        .iter()
        .map(|&sigma| TableRow {
            sigma,
            cells: spec
                .sizes
                .iter()
                .map(|&k| {
                    let sem = sigma / (k as f64).sqrt();
                    TableCell {
                        k,
                        sem,
                        half_width: TABLE_Z * sem,
                    }
                })
                .collect(),
        })
        .collect();
    Ok(GaussianTable {
        z: TABLE_Z,
        sizes: spec.sizes.clone(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub sigma: f64,
    pub target_width: f64,
    pub level: ConfidenceLevel,
    pub z: f64,
    /// Smallest n whose full CI width 2 z sigma / sqrt(n) is within target.
    pub n_min: u64,
    pub achieved_width: f64,
}

fn positive(name: &'static str, value: f64) -> Result<f64, PlanError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(PlanError::NonPositiveInput { name, value })
    }
}

/// Full CI width for a test set of size n.
pub fn ci_width(sigma: f64, n: u64, z: f64) -> f64 {
    2.0 * z * sigma / (n as f64).sqrt()
}

/// Minimal test-set size for a CI no wider than `target_width`.
pub fn plan_sample_size(sigma: f64, target_width: f64, level: ConfidenceLevel) -> Result<PlanResult, PlanError> {
    positive("sigma", sigma)?;
    positive("target width", target_width)?;
    let z = level.z();
    let ratio = 2.0 * z * sigma / target_width;
    let mut n = (ratio * ratio).ceil().max(1.0) as u64;
    // Settle the boundary against rounding in the closed form.
    while ci_width(sigma, n, z) > target_width {
        n += 1;
    }
    while n > 1 && ci_width(sigma, n - 1, z) <= target_width {
        n -= 1;
    }
    Ok(PlanResult {
        sigma,
        target_width,
        level,
        z,
        n_min: n,
        achieved_width: ci_width(sigma, n, z),
    })
}

/// Two-decimal rendering used by the table outputs.
pub fn fmt2(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

impl GaussianTable {
    /// Markdown with two lines (SEM, CI) per sigma and one column per size.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("| σ ↓ | k → |");
        for k in &self.sizes {
            out.push_str(&format!(" {k} |"));
        }
        out.push('\n');
        out.push_str("|---|---|");
        for _ in &self.sizes {
            out.push_str("---|");
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("| {} | SEM |", row.sigma));
            for c in &row.cells {
                out.push_str(&format!(" {} |", fmt2(c.sem)));
            }
            out.push('\n');
            out.push_str("| | CI |");
            for c in &row.cells {
                out.push_str(&format!(" [{}, {}] |", fmt2(-c.half_width), fmt2(c.half_width)));
            }
            out.push('\n');
        }
        out
    }
}
