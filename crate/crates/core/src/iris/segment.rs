//! Eye segmentation: pupil, iris and eyelid boundaries.

use super::{locate_circle, ArcSector, Circle, CircleSearch, EyeGeometry, IrisError, Line, SearchBox};
use crate::imaging::{smooth_1d, GaussianKernel1D, GrayImage};

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentConfig {
    pub pupil_radius: (u32, u32),
    pub iris_radius: (u32, u32),
    /// Iris center search half-width around the pupil center, px.
    pub iris_center_tolerance: u32,
    /// Clearance between the pupil boundary and the smallest iris candidate,
    /// on top of the center tolerance, px.
    pub iris_min_gap: u32,
    /// Radial smoothing sigma, px.
    pub sigma: f64,
    /// Weakest accepted circle response, luminance per px.
    pub min_response: f64,
    /// Weakest accepted eyelid response, luminance per px.
    pub eyelid_min_response: f64,
    /// Downsampling factor of the coarse full-image pupil pass.
    pub coarse_factor: usize,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            pupil_radius: (15, 60),
            iris_radius: (40, 140),
            iris_center_tolerance: 10,
            iris_min_gap: 6,
            sigma: 1.0,
            min_response: 1.0,
            eyelid_min_response: 5.0,
            coarse_factor: 4,
        }
    }
}

/// Locates the pupil (full circle), then the iris (lateral sectors only,
/// center near the pupil), then the upper and lower eyelids.
///
/// The pupil is found over the whole image in two passes: an exhaustive
/// search on a box-downsampled copy, then an exhaustive refinement at full
/// resolution around the coarse hit.
pub fn segment_eye(img: &GrayImage, cfg: &SegmentConfig) -> Result<EyeGeometry, IrisError> {
    let pupil = locate_pupil(img, cfg).map_err(|e| IrisError::PupilNotFound(Box::new(e)))?;
    let iris = locate_iris(img, &pupil, cfg).map_err(|e| IrisError::IrisNotFound(Box::new(e)))?;
    let mut geom = EyeGeometry::new(pupil, iris);
    geom.validate()?;
    geom.upper_lid = find_eyelid(img, &pupil, &iris, true, cfg);
    geom.lower_lid = find_eyelid(img, &pupil, &iris, false, cfg);
    Ok(geom)
}

fn locate_pupil(img: &GrayImage, cfg: &SegmentConfig) -> Result<Circle, IrisError> {
    let (r_lo, r_hi) = cfg.pupil_radius;
    let f = cfg.coarse_factor.max(1);
    let coarse = img.downsample(f);
    let cr_min = (r_lo as usize / f).max(1) as u32;
    let cr_max = (r_hi as usize).div_ceil(f) as u32;
    let margin = cr_min as i64;
    let coarse_search = CircleSearch {
        centers: SearchBox {
            x_min: margin,
            x_max: coarse.width() as i64 - 1 - margin,
            y_min: margin,
            y_max: coarse.height() as i64 - 1 - margin,
        },
        r_min: cr_min,
        r_max: cr_max,
        sigma: cfg.sigma,
        sectors: vec![ArcSector::FULL],
        min_response: cfg.min_response,
    };
    let (c, _) = locate_circle(&coarse, &coarse_search)?;
    if f == 1 {
        return Ok(c);
    }

    // coarse pixel k covers full-resolution pixels k*f .. k*f + f - 1
    let half_px = (f as f64 - 1.0) / 2.0;
    let cx = (c.cx * f as f64 + half_px).round() as i64;
    let cy = (c.cy * f as f64 + half_px).round() as i64;
    let r = c.r * f as f64;
    let spread = 2.0 * f as f64;
    let fine = CircleSearch {
        centers: SearchBox::around(cx, cy, f as i64 + 1).clip(&SearchBox {
            x_min: 0,
            x_max: img.width() as i64 - 1,
            y_min: 0,
            y_max: img.height() as i64 - 1,
        }),
        r_min: ((r - spread).floor() as u32).max(r_lo).max(1),
        r_max: ((r + spread).ceil() as u32).min(r_hi),
        sigma: cfg.sigma,
        sectors: vec![ArcSector::FULL],
        min_response: cfg.min_response,
    };
    locate_circle(img, &fine).map(|(c, _)| c)
}

fn locate_iris(img: &GrayImage, pupil: &Circle, cfg: &SegmentConfig) -> Result<Circle, IrisError> {
    let tol = cfg.iris_center_tolerance as i64;
    // keep every candidate contour off the pupil edge
    let r_min = cfg
        .iris_radius
        .0
        .max(pupil.r.ceil() as u32 + cfg.iris_center_tolerance + cfg.iris_min_gap);
    let search = CircleSearch {
        centers: SearchBox::around(pupil.cx.round() as i64, pupil.cy.round() as i64, tol),
        r_min,
        r_max: cfg.iris_radius.1,
        sigma: cfg.sigma,
        sectors: ArcSector::lateral(),
        min_response: cfg.min_response,
    };
    locate_circle(img, &search).map(|(c, _)| c)
}

/// Searches horizontal lines between the iris edge and the pupil for the
/// strongest smoothed vertical derivative of the mean luminance along a chord
/// of pupil width. `upper` selects the region above the pupil.
pub fn find_eyelid(img: &GrayImage, pupil: &Circle, iris: &Circle, upper: bool, cfg: &SegmentConfig) -> Option<Line> {
    let (y_first, y_last) = if upper {
        (
            (iris.cy - 0.9 * iris.r).ceil() as i64,
            (pupil.cy - pupil.r).floor() as i64 - 2,
        )
    } else {
        (
            (pupil.cy + pupil.r).ceil() as i64 + 2,
            (iris.cy + 0.9 * iris.r).floor() as i64,
        )
    };
    let y_first = y_first.max(1);
    let y_last = y_last.min(img.height() as i64 - 1);
    if y_last - y_first < 2 {
        return None;
    }

    let chord_mean = |y: i64| -> f64 {
        let dy = y as f64 - iris.cy;
        let iris_half = (iris.r * iris.r - dy * dy).max(0.0).sqrt() - 2.0;
        let half = pupil.r.min(iris_half).max(1.0);
        let x0 = (pupil.cx - half).ceil() as i64;
        let x1 = (pupil.cx + half).floor() as i64;
        let n = (x1 - x0 + 1).max(1);
        (x0..=x0 + n - 1)
            .map(|x| img.bilinear_clamped(x as f64, y as f64))
            .sum::<f64>()
            / n as f64
    };
    let means: Vec<f64> = (y_first - 1..=y_last).map(chord_mean).collect();
    let diffs: Vec<f64> = means.windows(2).map(|w| w[1] - w[0]).collect();
    let smoothed = smooth_1d(&diffs, &GaussianKernel1D::new(cfg.sigma));
    let (k, resp) = smoothed
        .iter()
        .map(|v| v.abs())
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, v)| if v > best.1 { (k, v) } else { best });
    // edge between rows y - 1 and y
    (resp >= cfg.eyelid_min_response).then(|| Line::horizontal((y_first + k as i64) as f64 - 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_eye, EyeIdentity, Perturbation};

    fn close(a: &Circle, b: &Circle, tol: f64) -> bool {
        (a.cx - b.cx).abs() <= tol && (a.cy - b.cy).abs() <= tol && (a.r - b.r).abs() <= tol
    }

    #[test]
    fn recovers_synthetic_circles() {
        let id = EyeIdentity::with_geometry(4, 200, 200, Circle::new(100.0, 100.0, 30.0), Circle::new(100.0, 100.0, 80.0));
        let g = segment_eye(&synth_eye(&id, &Perturbation::default()), &SegmentConfig::default()).unwrap();
        assert!(close(&g.pupil, &id.pupil, 2.0), "{g:?}");
        assert!(close(&g.iris, &id.iris, 2.0), "{g:?}");
        assert!(g.upper_lid.is_none() && g.lower_lid.is_none(), "{g:?}");
    }

    #[test]
    fn finds_upper_eyelid_band() {
        let id = EyeIdentity::with_geometry(9, 240, 240, Circle::new(120.0, 120.0, 30.0), Circle::new(120.0, 120.0, 80.0))
            .with_eyelid(80.0);
        let g = segment_eye(&synth_eye(&id, &Perturbation::default()), &SegmentConfig::default()).unwrap();
        let lid = g.upper_lid.expect("upper lid");
        assert!((lid.y_at(120.0) - 80.0).abs() <= 3.0, "{lid:?}");
        assert!(close(&g.pupil, &id.pupil, 2.0), "{g:?}");
    }

    #[test]
    fn uniform_image_has_no_pupil() {
        let err = segment_eye(&GrayImage::filled(160, 160, 128), &SegmentConfig::default()).unwrap_err();
        assert!(matches!(err, IrisError::PupilNotFound(_)), "{err}");
    }

    #[test]
    fn output_always_valid_on_seeded_eyes() {
        for seed in 0..6 {
            let id = EyeIdentity::from_seed(seed, 160);
            let p = Perturbation { noise: 10.0, capture_seed: seed, ..Default::default() };
            if let Ok(g) = segment_eye(&synth_eye(&id, &p), &SegmentConfig::default()) {
                g.validate().unwrap();
            }
        }
    }
}
