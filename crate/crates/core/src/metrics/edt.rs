//! Exact Euclidean distance transform on anisotropic grids.
//!
//! Separable lower-envelope-of-parabolas transform (Felzenszwalb and
//! Huttenlocher), applied along x, then y, then z. Values are squared
//! physical distances to the nearest feature voxel center.

/// Squared distance from every voxel to the nearest `true` voxel of
/// `features`, on a grid of `dims` with voxel `spacing`. Voxels are x-fastest.
///
/// Returns all `f64::INFINITY` when there are no features.
pub fn squared_edt(features: &[bool], dims: [usize; 3], spacing: [f64; 3]) -> Vec<f64> {
    let [nx, ny, nz] = dims;
    assert_eq!(features.len(), nx * ny * nz);
    let mut dist: Vec<f64> = features
        .iter()
        .map(|&f| if f { 0.0 } else { f64::INFINITY })
        .collect();

    let longest = nx.max(ny).max(nz);
    let mut line = vec![0.0; longest];
    let mut out = vec![0.0; longest];
    let mut scratch = Envelope::with_capacity(longest);

    let strides = [1, nx, nx * ny];
    for axis in 0..3 {
        let n = dims[axis];
        if n == 1 {
            continue;
        }
        let stride = strides[axis];
        let (other_a, other_b) = match axis {
            0 => ((ny, nx), (nz, nx * ny)),
            1 => ((nx, 1), (nz, nx * ny)),
            _ => ((nx, 1), (ny, nx)),
        };
        for b in 0..other_b.0 {
            for a in 0..other_a.0 {
                let base = a * other_a.1 + b * other_b.1;
                for i in 0..n {
                    line[i] = dist[base + i * stride];
                }
                scratch.transform(&line[..n], spacing[axis], &mut out[..n]);
                for i in 0..n {
                    dist[base + i * stride] = out[i];
                }
            }
        }
    }
    dist
}

struct Envelope {
    vertices: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self {
            vertices: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n + 1),
        }
    }

    /// out[q] = min_p f[p] + ((q - p) * step)^2 over finite f[p].
    fn transform(&mut self, f: &[f64], step: f64, out: &mut [f64]) {
        self.vertices.clear();
        self.bounds.clear();
        let h2 = step * step;
        let intersect = |p: usize, q: usize| -> f64 {
            let (pf, qf) = (p as f64, q as f64);
            ((f[q] + h2 * qf * qf) - (f[p] + h2 * pf * pf)) / (2.0 * h2 * (qf - pf))
        };

        for (q, fq) in f.iter().enumerate() {
            if !fq.is_finite() {
                continue;
            }
            if self.vertices.is_empty() {
                self.vertices.push(q);
                self.bounds.push(f64::NEG_INFINITY);
                continue;
            }
            loop {
                let p = *self.vertices.last().unwrap();
                let s = intersect(p, q);
                if s <= *self.bounds.last().unwrap() {
                    self.vertices.pop();
                    self.bounds.pop();
                    if self.vertices.is_empty() {
                        self.vertices.push(q);
                        self.bounds.push(f64::NEG_INFINITY);
                        break;
                    }
                } else {
                    self.vertices.push(q);
                    self.bounds.push(s);
                    break;
                }
            }
        }

        if self.vertices.is_empty() {
            out.fill(f64::INFINITY);
            return;
        }
        self.bounds.push(f64::INFINITY);
        let mut k = 0;
        for (q, o) in out.iter_mut().enumerate() {
            while self.bounds[k + 1] < q as f64 {
                k += 1;
            }
            let p = self.vertices[k];
            let d = (q as f64 - p as f64) * step;
            *o = f[p] + d * d;
        }
    }
}
