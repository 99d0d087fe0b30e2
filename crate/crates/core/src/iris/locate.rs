//! Circular boundary search with the integro-differential operator.
//!
//! For every candidate center on an integer grid the mean luminance along
//! circles of consecutive integer radii is computed, differenced across
//! radius, Gaussian-smoothed, and the absolute peak is kept.

use std::f64::consts::TAU;

use super::{Circle, IrisError};
use crate::imaging::{smooth_1d, GaussianKernel1D, GrayImage};

/// Contour samples per full circle.
pub const CONTOUR_SAMPLES: usize = 128;

/// Half-open angular interval `[start, start + width)`, radians, image
/// coordinates (angle 0 points to +x, pi/2 points down).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcSector {
    pub start: f64,
    pub width: f64,
}

impl ArcSector {
    pub const FULL: ArcSector = ArcSector {
        start: 0.0,
        width: TAU,
    };

    pub fn new(start: f64, width: f64) -> Self {
        Self { start, width }
    }

    pub fn contains(&self, angle: f64) -> bool {
        const EPS: f64 = 1e-9;
        let mut d = (angle - self.start).rem_euclid(TAU);
        // snap rounding noise at the sector start
        if TAU - d < EPS {
            d = 0.0;
        }
        d < self.width - EPS
    }

    /// Left and right quadrants: everything except +-45 degrees about vertical.
    pub fn lateral() -> Vec<ArcSector> {
        use std::f64::consts::FRAC_PI_4;
        vec![
            ArcSector::new(-FRAC_PI_4, 2.0 * FRAC_PI_4),
            ArcSector::new(3.0 * FRAC_PI_4, 2.0 * FRAC_PI_4),
        ]
    }
}

/// Inclusive integer grid of candidate centers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBox {
    pub x_min: i64,
    pub x_max: i64,
    pub y_min: i64,
    pub y_max: i64,
}

impl SearchBox {
    pub fn around(cx: i64, cy: i64, half: i64) -> Self {
        Self {
            x_min: cx - half,
            x_max: cx + half,
            y_min: cy - half,
            y_max: cy + half,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.x_min > self.x_max || self.y_min > self.y_max
    }

    /// Intersection with another box.
    pub fn clip(&self, other: &SearchBox) -> SearchBox {
        SearchBox {
            x_min: self.x_min.max(other.x_min),
            x_max: self.x_max.min(other.x_max),
            y_min: self.y_min.max(other.y_min),
            y_max: self.y_max.min(other.y_max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircleSearch {
    pub centers: SearchBox,
    pub r_min: u32,
    pub r_max: u32,
    /// Radial smoothing of the derivative, px.
    pub sigma: f64,
    pub sectors: Vec<ArcSector>,
    /// Weakest accepted peak, luminance per px.
    pub min_response: f64,
}

/// Unit vectors of the contour samples that fall in `sectors`.
pub fn contour_directions(sectors: &[ArcSector]) -> Vec<(f64, f64)> {
    (0..CONTOUR_SAMPLES)
        .map(|m| TAU * m as f64 / CONTOUR_SAMPLES as f64)
        .filter(|&phi| sectors.iter().any(|s| s.contains(phi)))
        .map(|phi| (phi.cos(), phi.sin()))
        .collect()
}

fn contour_mean(img: &GrayImage, cx: f64, cy: f64, r: f64, dirs: &[(f64, f64)]) -> f64 {
    let sum: f64 = dirs
        .iter()
        .map(|&(c, s)| img.bilinear_clamped(cx + r * c, cy + r * s))
        .sum();
    sum / dirs.len() as f64
}

/// Smoothed radial derivative for radii `r_min..=r_max` about one center.
fn radial_response(
    img: &GrayImage,
    cx: f64,
    cy: f64,
    r_min: u32,
    r_max: u32,
    dirs: &[(f64, f64)],
    kernel: &GaussianKernel1D,
) -> Vec<f64> {
    let means: Vec<f64> = (r_min - 1..=r_max)
        .map(|r| contour_mean(img, cx, cy, r as f64, dirs))
        .collect();
    let diffs: Vec<f64> = means.windows(2).map(|w| w[1] - w[0]).collect();
    smooth_1d(&diffs, kernel)
}

/// Exhaustive maximization of the smoothed radial derivative over the search
/// grid. Ties go to the smallest `(r, cy, cx)`.
pub fn locate_circle(img: &GrayImage, search: &CircleSearch) -> Result<(Circle, f64), IrisError> {
    if search.centers.is_empty() {
        return Err(IrisError::EmptySearchSpace("center box is empty".into()));
    }
    if search.r_min < 1 || search.r_min > search.r_max {
        return Err(IrisError::EmptySearchSpace(format!(
            "radius range {}..={} is empty",
            search.r_min, search.r_max
        )));
    }
    let dirs = contour_directions(&search.sectors);
    if dirs.is_empty() {
        return Err(IrisError::EmptySearchSpace("no contour samples in arc sectors".into()));
    }
    let kernel = GaussianKernel1D::new(search.sigma);

    let mut best: Option<((u32, i64, i64), f64)> = None;
    for cy in search.centers.y_min..=search.centers.y_max {
        for cx in search.centers.x_min..=search.centers.x_max {
            let resp = radial_response(img, cx as f64, cy as f64, search.r_min, search.r_max, &dirs, &kernel);
            for (k, v) in resp.iter().enumerate() {
                let v = v.abs();
                let key = (search.r_min + k as u32, cy, cx);
                let better = match best {
                    None => true,
                    Some((bk, bv)) => v > bv || (v == bv && key < bk),
                };
                if better {
                    best = Some((key, v));
                }
            }
        }
    }
    let ((r, cy, cx), response) = best.expect("non-empty search space");
    if response < search.min_response {
        return Err(IrisError::NoCircleFound {
            response,
            min_response: search.min_response,
        });
    }
    Ok((Circle::new(cx as f64, cy as f64, r as f64), response))
}
