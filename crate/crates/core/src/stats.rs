//! Small numeric helpers shared by the statistical modules.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::fmt;

/// Confidence level strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ConfidenceLevel(f64);

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("confidence level must lie strictly between 0 and 1, got {0}")]
pub struct InvalidLevel(pub f64);

impl ConfidenceLevel {
    pub const NINETY_FIVE: ConfidenceLevel = ConfidenceLevel(0.95);

    pub fn new(level: f64) -> Result<Self, InvalidLevel> {
        if level > 0.0 && level < 1.0 {
            Ok(Self(level))
        } else {
            Err(InvalidLevel(level))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Two-sided standard-normal critical value, the quantile at (1 + level) / 2.
    pub fn z(self) -> f64 {
        normal_quantile(0.5 + self.0 / 2.0)
    }

    /// The critical value rounded to two decimals, e.g. 1.96 at the 95% level.
    pub fn z_rounded(self) -> f64 {
        (self.z() * 100.0).round() / 100.0
    }

    /// Lower and upper tail probabilities of a central interval.
    pub fn tails(self) -> (f64, f64) {
        ((1.0 - self.0) / 2.0, (1.0 + self.0) / 2.0)
    }
}

impl Default for ConfidenceLevel {
    fn default() -> Self {
        Self::NINETY_FIVE
    }
}

impl TryFrom<f64> for ConfidenceLevel {
    type Error = InvalidLevel;
    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<ConfidenceLevel> for f64 {
    fn from(level: ConfidenceLevel) -> f64 {
        level.0
    }
}

impl fmt::Display for ConfidenceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Standard-normal quantile function.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Arithmetic mean, accumulated relative to the first element.
///
/// A constant slice therefore yields its value exactly, and a slice in a
/// fixed order always yields the same bits.
pub fn mean(values: &[f64]) -> f64 {
    let Some(&origin) = values.first() else {
        return f64::NAN;
    };
    let offset: f64 = values.iter().map(|v| v - origin).sum();
    origin + offset / values.len() as f64
}

/// Standard deviation around `mean` with the given divisor.
pub fn std_dev(values: &[f64], mean: f64, divisor: f64) -> f64 {
    let ss: f64 = values
        .iter()
        .map(|v| {
            let d = v - mean;
            d * d
        })
        .sum();
    (ss / divisor).sqrt()
}

/// Population standard deviation (divisor n).
pub fn pop_std(values: &[f64], mean: f64) -> f64 {
    std_dev(values, mean, values.len() as f64)
}

/// Percentile of an ascending slice by linear interpolation between order
/// statistics at fractional index `p * (len - 1)`.
///
/// Panics if `sorted` is empty or `p` is outside [0, 1].
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    assert!((0.0..=1.0).contains(&p), "percentile rank {p} outside [0, 1]");
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi || frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Sorts a copy of `values` and returns its percentile.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, p)
}

/// Median of a slice; `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| percentile(values, 0.5))
}

/// Rounds to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_at_95_percent() {
        let z = ConfidenceLevel::NINETY_FIVE.z();
        assert!((z - 1.959_963_984_540_054).abs() < 1e-9, "z = {z}");
        assert_eq!(ConfidenceLevel::NINETY_FIVE.z_rounded(), 1.96);
    }

    #[test]
    fn level_bounds() {
        assert!(ConfidenceLevel::new(0.0).is_err());
        assert!(ConfidenceLevel::new(1.0).is_err());
        assert!(ConfidenceLevel::new(f64::NAN).is_err());
        assert!(ConfidenceLevel::new(0.5).is_ok());
    }

    #[test]
    fn percentile_rule() {
        let v = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        assert_eq!(percentile_sorted(&v, 0.95), 1.0);
        assert_eq!(percentile_sorted(&v, 0.5), 0.5);
        assert_eq!(percentile_sorted(&[1.0, 2.0, 3.0, 4.0], 0.25), 1.75);
        assert_eq!(percentile_sorted(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn constant_mean_is_exact() {
        let v = vec![89.7; 110];
        assert_eq!(mean(&v), 89.7);
        assert_eq!(pop_std(&v, mean(&v)), 0.0);
    }

    #[test]
    fn significant_digits() {
        assert_eq!(round_sig(0.471_404_520_791, 6), 0.471405);
        assert_eq!(round_sig(89.714, 6), 89.714);
        assert_eq!(round_sig(-1234567.0, 3), -1230000.0);
    }
}
