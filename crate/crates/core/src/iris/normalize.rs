//! Rubber-sheet unwrapping of the iris annulus onto a fixed polar grid.

use std::f64::consts::TAU;

use super::{EyeGeometry, IrisError};
use crate::imaging::GrayImage;

pub const DEFAULT_RADIAL_RES: usize = 32;
pub const DEFAULT_ANGULAR_RES: usize = 256;

/// Unwrapped iris: `rows` radial samples (pupil side first) by `cols`
/// angular samples, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedIris {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl NormalizedIris {
    /// Panics if either buffer length differs from `rows * cols`, or a value
    /// falls outside `[0, 1]`.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>, valid: Vec<bool>) -> Self {
        assert_eq!(values.len(), rows * cols, "values length");
        assert_eq!(valid.len(), rows * cols, "valid length");
        assert!(
            values.iter().all(|v| (0.0..=1.0).contains(v)),
            "normalized values must lie in [0, 1]"
        );
        Self {
            rows,
            cols,
            values,
            valid,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> (f64, bool)) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        let mut valid = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let (v, ok) = f(i, j);
                values.push(v);
                valid.push(ok);
            }
        }
        Self::new(rows, cols, values, valid)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    #[inline]
    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.valid[row * self.cols + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Circular shift along the angular axis: column `j` moves to `j + k`.
    pub fn shift_columns(&self, k: isize) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| {
            let src = (j as isize - k).rem_euclid(self.cols as isize) as usize;
            (self.value(i, src), self.is_valid(i, src))
        })
    }
}

/// Position of grid sample `(row, col)` in image coordinates.
pub fn sample_point(geom: &EyeGeometry, rows: usize, cols: usize, row: usize, col: usize) -> (f64, f64) {
    let theta = TAU * col as f64 / cols as f64;
    let t = (row as f64 + 0.5) / rows as f64;
    let (px, py) = geom.pupil.point_at(theta);
    let (ix, iy) = geom.iris.point_at(theta);
    (px + t * (ix - px), py + t * (iy - py))
}

/// Samples the annulus between the pupil and iris circles. Each boundary is
/// taken on its own circle, so non-concentric geometry is handled. Samples
/// outside the image or on the occluded side of an eyelid are marked invalid.
pub fn normalize(img: &GrayImage, geom: &EyeGeometry, rows: usize, cols: usize) -> Result<NormalizedIris, IrisError> {
    geom.validate()?;
    if rows == 0 || cols == 0 {
        return Err(IrisError::GeometryInvalid(format!("empty polar grid {rows}x{cols}")));
    }
    Ok(NormalizedIris::from_fn(rows, cols, |i, j| {
        let (x, y) = sample_point(geom, rows, cols, i, j);
        if !img.contains(x, y) {
            return (0.0, false);
        }
        let v = img.bilinear_clamped(x, y) / 255.0;
        (v, !geom.occluded(x, y))
    }))
}
