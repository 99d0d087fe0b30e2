//! Iris pipeline: boundary localization, rubber-sheet unwrapping and Gabor
//! phase encoding.

mod code;
mod gabor;
mod locate;
mod normalize;
mod segment;

use std::fmt::{self, Write as _};

use thiserror::Error;

pub use code::IrisCode;
pub use gabor::{encode, gabor_response, GaborKernel, GaborParams, GaborResponse, MIN_COVERAGE, MIN_MAGNITUDE};
pub use locate::{contour_directions, locate_circle, ArcSector, CircleSearch, SearchBox, CONTOUR_SAMPLES};
pub use normalize::{normalize, sample_point, NormalizedIris, DEFAULT_ANGULAR_RES, DEFAULT_RADIAL_RES};
pub use segment::{find_eyelid, segment_eye, SegmentConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IrisError {
    #[error("empty search space: {0}")]
    EmptySearchSpace(String),
    #[error("no circle found (best response {response:.3} < {min_response:.3})")]
    NoCircleFound { response: f64, min_response: f64 },
    #[error("pupil not found: {0}")]
    PupilNotFound(Box<IrisError>),
    #[error("iris not found: {0}")]
    IrisNotFound(Box<IrisError>),
    #[error("invalid eye geometry: {0}")]
    GeometryInvalid(String),
    #[error("normalized iris has shape {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl Circle {
    pub fn new(cx: f64, cy: f64, r: f64) -> Self {
        Self { cx, cy, r }
    }

    pub fn center_distance(&self, other: &Circle) -> f64 {
        (self.cx - other.cx).hypot(self.cy - other.cy)
    }

    /// Point on the circle at angle `theta` (image coordinates, y down).
    #[inline]
    pub fn point_at(&self, theta: f64) -> (f64, f64) {
        (self.cx + self.r * theta.cos(), self.cy + self.r * theta.sin())
    }
}

/// Eyelid boundary `y = a * x + b` in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub a: f64,
    pub b: f64,
}

impl Line {
    pub fn horizontal(y: f64) -> Self {
        Self { a: 0.0, b: y }
    }

    #[inline]
    pub fn y_at(&self, x: f64) -> f64 {
        self.a * x + self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyeGeometry {
    pub pupil: Circle,
    pub iris: Circle,
    /// Samples above this line are occluded.
    pub upper_lid: Option<Line>,
    /// Samples below this line are occluded.
    pub lower_lid: Option<Line>,
}

impl EyeGeometry {
    pub fn new(pupil: Circle, iris: Circle) -> Self {
        Self {
            pupil,
            iris,
            upper_lid: None,
            lower_lid: None,
        }
    }

    pub fn validate(&self) -> Result<(), IrisError> {
        let ok = |v: f64| v.is_finite();
        if ![self.pupil.cx, self.pupil.cy, self.pupil.r, self.iris.cx, self.iris.cy, self.iris.r]
            .into_iter()
            .all(ok)
        {
            return Err(IrisError::GeometryInvalid("non-finite parameter".into()));
        }
        if self.pupil.r <= 0.0 {
            return Err(IrisError::GeometryInvalid(format!(
                "pupil radius {} must be positive",
                self.pupil.r
            )));
        }
        if self.pupil.r >= self.iris.r {
            return Err(IrisError::GeometryInvalid(format!(
                "pupil radius {:.3} >= iris radius {:.3}",
                self.pupil.r, self.iris.r
            )));
        }
        let d = self.pupil.center_distance(&self.iris);
        if d >= self.iris.r {
            return Err(IrisError::GeometryInvalid(format!(
                "pupil center {d:.3} px from iris center, outside iris radius {:.3}",
                self.iris.r
            )));
        }
        Ok(())
    }

    /// True if `(x, y)` lies on the occluded side of either eyelid line.
    pub fn occluded(&self, x: f64, y: f64) -> bool {
        self.upper_lid.is_some_and(|l| y < l.y_at(x)) || self.lower_lid.is_some_and(|l| y > l.y_at(x))
    }

    /// Debug dump, one element per line with 3 decimals.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "pupil {:.3} {:.3} {:.3}", self.pupil.cx, self.pupil.cy, self.pupil.r);
        let _ = writeln!(s, "iris {:.3} {:.3} {:.3}", self.iris.cx, self.iris.cy, self.iris.r);
        if let Some(l) = self.upper_lid {
            let _ = writeln!(s, "upper_lid {:.3} {:.3}", l.a, l.b);
        }
        if let Some(l) = self.lower_lid {
            let _ = writeln!(s, "lower_lid {:.3} {:.3}", l.a, l.b);
        }
        s
    }
}

impl fmt::Display for EyeGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}
