//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use segstat_core::LabelVolume;

/// Foreground voxels with a background or off-grid 6-neighbor, by direct
/// neighbor lookup.
pub fn oracle_surface(v: &LabelVolume) -> Vec<[usize; 3]> {
    let [nx, ny, nz] = v.dims();
    let mut out = Vec::new();
    for z in 0..nz as i64 {
        for y in 0..ny as i64 {
            for x in 0..nx as i64 {
                if v.get(x as usize, y as usize, z as usize) == 0 {
                    continue;
                }
                let offsets = [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)];
                let exposed = offsets.iter().any(|&(dx, dy, dz)| {
                    let (a, b, c) = (x + dx, y + dy, z + dz);
                    a < 0
                        || b < 0
                        || c < 0
                        || a >= nx as i64
                        || b >= ny as i64
                        || c >= nz as i64
                        || v.get(a as usize, b as usize, c as usize) == 0
                });
                if exposed {
                    out.push([x as usize, y as usize, z as usize]);
                }
            }
        }
    }
    out
}

pub fn oracle_percentile(mut d: Vec<f64>, p: f64) -> f64 {
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = p * (d.len() - 1) as f64;
    let i = pos.floor() as usize;
    let f = pos - i as f64;
    if f == 0.0 {
        d[i]
    } else {
        d[i] + f * (d[i + 1] - d[i])
    }
}

fn directed(a: &[[usize; 3]], b: &[[usize; 3]], s: [f64; 3]) -> Vec<f64> {
    a.iter()
        .map(|p| {
            let mut best = f64::INFINITY;
            for q in b {
                let dx = (p[0] as f64 - q[0] as f64) * s[0];
                let dy = (p[1] as f64 - q[1] as f64) * s[1];
                let dz = (p[2] as f64 - q[2] as f64) * s[2];
                best = best.min(dx * dx + dy * dy + dz * dz);
            }
            best.sqrt()
        })
        .collect()
}

/// Symmetric percentile Hausdorff by all-pairs search; `None` when exactly
/// one mask is empty.
pub fn oracle_hd(gt: &LabelVolume, pred: &LabelVolume, p: f64) -> Option<f64> {
    let a = oracle_surface(gt);
    let b = oracle_surface(pred);
    match (a.is_empty(), b.is_empty()) {
        (true, true) => Some(0.0),
        (false, false) => {
            let s = gt.spacing();
            Some(oracle_percentile(directed(&a, &b, s), p).max(oracle_percentile(directed(&b, &a, s), p)))
        }
        _ => None,
    }
}

pub fn oracle_dice(gt: &LabelVolume, pred: &LabelVolume) -> f64 {
    let mut a = 0;
    let mut b = 0;
    let mut both = 0;
    for i in 0..gt.len() {
        let g = gt.labels()[i] == 1;
        let q = pred.labels()[i] == 1;
        a += g as usize;
        b += q as usize;
        both += (g && q) as usize;
    }
    if a + b == 0 {
        100.0
    } else {
        100.0 * (2 * both) as f64 / (a + b) as f64
    }
}

/// Random binary mask with blob-like structure.
pub fn random_mask<R: Rng>(rng: &mut R, dims: [usize; 3], spacing: [f64; 3]) -> LabelVolume {
    let mut v = LabelVolume::zeros(dims, spacing).unwrap();
    let density = rng.random_range(0.0..0.6);
    let center = [
        rng.random_range(0.0..dims[0] as f64),
        rng.random_range(0.0..dims[1] as f64),
        rng.random_range(0.0..dims[2] as f64),
    ];
    let radius = rng.random_range(0.5..4.0);
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let d = ((x as f64 - center[0]).powi(2) + (y as f64 - center[1]).powi(2) + (z as f64 - center[2]).powi(2)).sqrt();
                if d < radius || rng.random_bool(density * 0.2) {
                    v.set(x, y, z, 1);
                }
            }
        }
    }
    v
}
