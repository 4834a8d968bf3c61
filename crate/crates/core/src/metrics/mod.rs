//! Per-subject overlap and surface-distance metrics on binary masks.

pub mod edt;

use crate::stats::percentile_sorted;
use crate::volume::{extract_binary_mask, LabelVolume};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative spacing difference above which two grids are incompatible.
pub const SPACING_TOLERANCE: f64 = 1e-4;

/// Below this many candidate point pairs the all-pairs search is used.
const BRUTE_FORCE_PAIRS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("grid shapes differ: {0:?} vs {1:?}")]
    ShapeMismatch([usize; 3], [usize; 3]),
    #[error("voxel spacings differ: {0:?} vs {1:?}")]
    SpacingMismatch([f64; 3], [f64; 3]),
    #[error("mask is not binary (found label {0})")]
    NotBinary(u32),
}

/// 95th-percentile Hausdorff distance, undefined when exactly one mask is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Hd95 {
    Defined(f64),
    Undefined,
}

impl Hd95 {
    pub fn value(self) -> Option<f64> {
        match self {
            Hd95::Defined(v) => Some(v),
            Hd95::Undefined => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MetricFlags {
    pub both_empty: bool,
    pub gt_empty: bool,
    pub pred_empty: bool,
}

impl MetricFlags {
    /// Semicolon-separated flag names, empty when no flag is set.
    pub fn render(&self) -> String {
        let mut names = Vec::new();
        if self.both_empty {
            names.push("both_empty");
        } else if self.gt_empty {
            names.push("gt_empty");
        } else if self.pred_empty {
            names.push("pred_empty");
        }
        names.join(";")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectMetrics {
    pub subject_id: String,
    pub label: u32,
    /// Percentage in [0, 100].
    pub dice: f64,
    pub hd95: Hd95,
    /// Exact (100th percentile) Hausdorff distance, for debugging.
    pub hausdorff: Option<f64>,
    pub flags: MetricFlags,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiceResult {
    pub value: f64,
    pub both_empty: bool,
}

/// How nearest-surface queries are answered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceMethod {
    /// Brute force for tiny point sets, distance transform otherwise.
    #[default]
    Auto,
    DistanceTransform,
    BruteForce,
}

/// Directed nearest-surface distances in both directions, in mm.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceDistances {
    pub gt_to_pred: Vec<f64>,
    pub pred_to_gt: Vec<f64>,
}

impl SurfaceDistances {
    /// max over both directions of the `p`-percentile; `None` when either side is empty.
    pub fn symmetric_percentile(&self, p: f64) -> Option<f64> {
        if self.gt_to_pred.is_empty() || self.pred_to_gt.is_empty() {
            return None;
        }
        let directed = |d: &[f64]| {
            let mut s = d.to_vec();
            s.sort_by(f64::total_cmp);
            percentile_sorted(&s, p)
        };
        Some(directed(&self.gt_to_pred).max(directed(&self.pred_to_gt)))
    }
}

fn check_compatible(a: &LabelVolume, b: &LabelVolume) -> Result<(), MetricError> {
    if a.dims() != b.dims() {
        return Err(MetricError::ShapeMismatch(a.dims(), b.dims()));
    }
    let (sa, sb) = (a.spacing(), b.spacing());
    for (x, y) in sa.iter().zip(&sb) {
        if (x - y).abs() > SPACING_TOLERANCE * x.abs().max(y.abs()) {
            return Err(MetricError::SpacingMismatch(sa, sb));
        }
    }
    Ok(())
}

fn check_binary(mask: &LabelVolume) -> Result<(), MetricError> {
    match mask.labels().iter().find(|&&l| l > 1) {
        Some(&l) => Err(MetricError::NotBinary(l)),
        None => Ok(()),
    }
}

/// Dice overlap as a percentage. Two empty masks score 100 and are flagged.
pub fn dice(gt: &LabelVolume, pred: &LabelVolume) -> Result<DiceResult, MetricError> {
    check_compatible(gt, pred)?;
    check_binary(gt)?;
    check_binary(pred)?;
    let (mut a, mut b, mut both) = (0usize, 0usize, 0usize);
    for (&g, &p) in gt.labels().iter().zip(pred.labels()) {
        a += g as usize;
        b += p as usize;
        both += (g & p) as usize;
    }
    if a + b == 0 {
        return Ok(DiceResult {
            value: 100.0,
            both_empty: true,
        });
    }
    Ok(DiceResult {
        value: 100.0 * (2 * both) as f64 / (a + b) as f64,
        both_empty: false,
    })
}

/// Foreground voxels with a 6-neighbor that is background or off-grid,
/// as linear indices in ascending order.
pub fn surface_voxels(mask: &LabelVolume) -> Vec<usize> {
    let [nx, ny, nz] = mask.dims();
    let labels = mask.labels();
    let mut out = Vec::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let i = mask.index(x, y, z);
                if labels[i] == 0 {
                    continue;
                }
                let border = x == 0
                    || y == 0
                    || z == 0
                    || x + 1 == nx
                    || y + 1 == ny
                    || z + 1 == nz
                    || labels[i - 1] == 0
                    || labels[i + 1] == 0
                    || labels[i - nx] == 0
                    || labels[i + nx] == 0
                    || labels[i - nx * ny] == 0
                    || labels[i + nx * ny] == 0;
                if border {
                    out.push(i);
                }
            }
        }
    }
    out
}

fn brute_force_distances(from: &[[usize; 3]], to: &[[usize; 3]], spacing: [f64; 3]) -> Vec<f64> {
    from.iter()
        .map(|a| {
            to.iter()
                .map(|b| {
                    let dx = (a[0] as f64 - b[0] as f64) * spacing[0];
                    let dy = (a[1] as f64 - b[1] as f64) * spacing[1];
                    let dz = (a[2] as f64 - b[2] as f64) * spacing[2];
                    dx * dx + dy * dy + dz * dz
                })
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect()
}

/// Nearest distances from `from` points to `to` points via a distance
/// transform over the bounding box of both point sets.
fn edt_distances(from: &[[usize; 3]], to: &[[usize; 3]], spacing: [f64; 3]) -> Vec<f64> {
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    for p in from.iter().chain(to) {
        for axis in 0..3 {
            lo[axis] = lo[axis].min(p[axis]);
            hi[axis] = hi[axis].max(p[axis]);
        }
    }
    let dims = [hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1];
    let local = |p: &[usize; 3]| (p[0] - lo[0]) + dims[0] * ((p[1] - lo[1]) + dims[1] * (p[2] - lo[2]));
    let mut features = vec![false; dims.iter().product()];
    for p in to {
        features[local(p)] = true;
    }
    let dist = edt::squared_edt(&features, dims, spacing);
    from.iter().map(|p| dist[local(p)].sqrt()).collect()
}

/// Directed surface-to-surface distances between two masks.
pub fn surface_distances(
    gt: &LabelVolume,
    pred: &LabelVolume,
    method: DistanceMethod,
) -> Result<SurfaceDistances, MetricError> {
    check_compatible(gt, pred)?;
    check_binary(gt)?;
    check_binary(pred)?;
    let spacing = gt.spacing();
    let a: Vec<[usize; 3]> = surface_voxels(gt).into_iter().map(|i| gt.coords(i)).collect();
    let b: Vec<[usize; 3]> = surface_voxels(pred).into_iter().map(|i| pred.coords(i)).collect();
    if a.is_empty() || b.is_empty() {
        return Ok(SurfaceDistances {
            gt_to_pred: Vec::new(),
            pred_to_gt: Vec::new(),
        });
    }
    let brute = match method {
        DistanceMethod::BruteForce => true,
        DistanceMethod::DistanceTransform => false,
        DistanceMethod::Auto => a.len().saturating_mul(b.len()) <= BRUTE_FORCE_PAIRS,
    };
    let directed = if brute { brute_force_distances } else { edt_distances };
    Ok(SurfaceDistances {
        gt_to_pred: directed(&a, &b, spacing),
        pred_to_gt: directed(&b, &a, spacing),
    })
}

fn hd_from(gt: &LabelVolume, pred: &LabelVolume, d: &SurfaceDistances, p: f64) -> Hd95 {
    match (gt.foreground_count() == 0, pred.foreground_count() == 0) {
        (true, true) => Hd95::Defined(0.0),
        (false, false) => Hd95::Defined(d.symmetric_percentile(p).expect("non-empty masks have surfaces")),
        _ => Hd95::Undefined,
    }
}

/// 95th-percentile symmetric Hausdorff distance in mm.
pub fn hd95(gt: &LabelVolume, pred: &LabelVolume) -> Result<Hd95, MetricError> {
    hd95_with(gt, pred, DistanceMethod::Auto)
}

pub fn hd95_with(gt: &LabelVolume, pred: &LabelVolume, method: DistanceMethod) -> Result<Hd95, MetricError> {
    let d = surface_distances(gt, pred, method)?;
    Ok(hd_from(gt, pred, &d, 0.95))
}

/// Dice and HD95 for one label of a ground-truth/prediction label-volume pair.
pub fn evaluate_subject(
    subject_id: &str,
    gt: &LabelVolume,
    pred: &LabelVolume,
    label: u32,
) -> Result<SubjectMetrics, MetricError> {
    check_compatible(gt, pred)?;
    let gt = extract_binary_mask(gt, label);
    let pred = extract_binary_mask(pred, label);
    let dice = dice(&gt, &pred)?;
    let distances = surface_distances(&gt, &pred, DistanceMethod::Auto)?;
    let gt_empty = gt.foreground_count() == 0;
    let pred_empty = pred.foreground_count() == 0;
    let hd95 = hd_from(&gt, &pred, &distances, 0.95);
    let hausdorff = match hd_from(&gt, &pred, &distances, 1.0) {
        Hd95::Defined(v) => Some(v),
        Hd95::Undefined => None,
    };
    if hd95 == Hd95::Undefined {
        log::warn!("subject {subject_id} label {label}: one mask is empty, hd95 undefined");
    }
    Ok(SubjectMetrics {
        subject_id: subject_id.to_string(),
        label,
        dice: dice.value,
        hd95,
        hausdorff,
        flags: MetricFlags {
            both_empty: dice.both_empty,
            gt_empty,
            pred_empty,
        },
    })
}
