//! Dense 3D label grids with physical voxel spacing.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VolumeError {
    #[error("every dimension must be at least 1, got {0:?}")]
    ZeroDimension([usize; 3]),
    #[error("spacing components must be positive and finite, got {0:?}")]
    BadSpacing([f64; 3]),
    #[error("expected {expected} labels for the grid, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
}

/// A label grid stored x-fastest: index = x + nx * (y + ny * z).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVolume {
    dims: [usize; 3],
    spacing: [f64; 3],
    labels: Vec<u32>,
}

impl LabelVolume {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], labels: Vec<u32>) -> Result<Self, VolumeError> {
        if dims.contains(&0) {
            return Err(VolumeError::ZeroDimension(dims));
        }
        if spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(VolumeError::BadSpacing(spacing));
        }
        let expected = dims[0] * dims[1] * dims[2];
        if labels.len() != expected {
            return Err(VolumeError::LengthMismatch {
                expected,
                actual: labels.len(),
            });
        }
        Ok(Self {
            dims,
            spacing,
            labels,
        })
    }

    /// An all-background grid.
    pub fn zeros(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self, VolumeError> {
        let len = dims.iter().product();
        Self::new(dims, spacing, vec![0; len])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let x = index % self.dims[0];
        let rest = index / self.dims[0];
        [x, rest % self.dims[1], rest / self.dims[1]]
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> u32 {
        self.labels[self.index(x, y, z)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, label: u32) {
        let i = self.index(x, y, z);
        self.labels[i] = label;
    }

    /// Number of voxels carrying a nonzero label.
    pub fn foreground_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l != 0).count()
    }

    /// Same labels on a grid with different spacing.
    pub fn with_spacing(&self, spacing: [f64; 3]) -> Result<Self, VolumeError> {
        Self::new(self.dims, spacing, self.labels.clone())
    }
}

/// Binary mask of the voxels equal to `label`: 1 there, 0 elsewhere.
///
/// An absent label gives an all-zero mask.
pub fn extract_binary_mask(volume: &LabelVolume, label: u32) -> LabelVolume {
    debug_assert!(label >= 1, "label 0 is background");
    LabelVolume {
        dims: volume.dims,
        spacing: volume.spacing,
        labels: volume.labels.iter().map(|&l| u32::from(l == label)).collect(),
    }
}
