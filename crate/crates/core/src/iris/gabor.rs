//! 2-D complex Gabor filtering of the unwrapped iris and 2-bit phase
//! quantization.
//!
//! The filter is
//!
//! ```text
//! G(x, y) = exp(-pi [ (x-x0)^2 / sigma^2 + (y-y0)^2 / beta^2 ])
//!         * exp(-2 pi i [ u0 (x-x0) + v0 (y-y0) ])
//! ```
//!
//! with `x` along the radial (row) axis and `y` along the angular (column)
//! axis. The mean tap weight is subtracted so that constant regions give a
//! zero response.

use super::{normalize::DEFAULT_ANGULAR_RES, normalize::DEFAULT_RADIAL_RES, IrisCode, IrisError, NormalizedIris};
use crate::bits::BitArray;

/// Windows whose envelope-weighted valid fraction falls below this are masked.
pub const MIN_COVERAGE: f64 = 0.5;
/// Responses weaker than this are masked.
pub const MIN_MAGNITUDE: f64 = 1e-6;

const ROW_STEP: usize = 4;
const ROW_OFFSET: usize = 2;
const COL_STEP: usize = 2;
const COL_OFFSET: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaborParams {
    /// Radial width, rows.
    pub sigma: f64,
    /// Angular length, columns.
    pub beta: f64,
    /// Radial modulation, cycles per row.
    pub u0: f64,
    /// Angular modulation, cycles per column.
    pub v0: f64,
}

impl Default for GaborParams {
    fn default() -> Self {
        Self {
            sigma: 3.0,
            beta: 6.0,
            u0: 0.0,
            v0: 1.0 / 12.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaborResponse {
    pub re: f64,
    pub im: f64,
    /// Envelope-weighted fraction of valid samples under the window.
    pub coverage: f64,
}

impl GaborResponse {
    pub fn magnitude(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

struct Tap {
    dr: isize,
    dc: isize,
    re: f64,
    im: f64,
    envelope: f64,
}

/// Precomputed DC-corrected filter taps for one parameter set.
pub struct GaborKernel {
    taps: Vec<Tap>,
    envelope_sum: f64,
}

impl GaborKernel {
    /// Panics unless `sigma` and `beta` are positive.
    pub fn new(params: &GaborParams) -> Self {
        assert!(
            params.sigma > 0.0 && params.beta > 0.0,
            "gabor widths must be positive"
        );
        let hr = (3.0 * params.sigma).ceil() as isize;
        let hc = (3.0 * params.beta).ceil() as isize;
        let mut taps = Vec::with_capacity(((2 * hr + 1) * (2 * hc + 1)) as usize);
        for dr in -hr..=hr {
            for dc in -hc..=hc {
                let (x, y) = (dr as f64, dc as f64);
                let envelope = (-std::f64::consts::PI
                    * (x * x / (params.sigma * params.sigma) + y * y / (params.beta * params.beta)))
                    .exp();
                let phase = -2.0 * std::f64::consts::PI * (params.u0 * x + params.v0 * y);
                taps.push(Tap {
                    dr,
                    dc,
                    re: envelope * phase.cos(),
                    im: envelope * phase.sin(),
                    envelope,
                });
            }
        }
        let n = taps.len() as f64;
        let mean_re = taps.iter().map(|t| t.re).sum::<f64>() / n;
        let mean_im = taps.iter().map(|t| t.im).sum::<f64>() / n;
        for t in &mut taps {
            t.re -= mean_re;
            t.im -= mean_im;
        }
        let envelope_sum = taps.iter().map(|t| t.envelope).sum();
        Self { taps, envelope_sum }
    }

    /// Response centered at `(row, col)`; rows clamp, columns wrap.
    pub fn response(&self, norm: &NormalizedIris, row: usize, col: usize) -> GaborResponse {
        let rows = norm.rows() as isize;
        let cols = norm.cols() as isize;
        let (mut re, mut im, mut covered) = (0.0, 0.0, 0.0);
        for t in &self.taps {
            let r = (row as isize + t.dr).clamp(0, rows - 1) as usize;
            let c = (col as isize + t.dc).rem_euclid(cols) as usize;
            if norm.is_valid(r, c) {
                let v = norm.value(r, c);
                re += t.re * v;
                im += t.im * v;
                covered += t.envelope;
            }
        }
        GaborResponse {
            re,
            im,
            coverage: covered / self.envelope_sum,
        }
    }
}

pub fn gabor_response(norm: &NormalizedIris, center: (usize, usize), params: &GaborParams) -> GaborResponse {
    GaborKernel::new(params).response(norm, center.0, center.1)
}

/// Encodes a 32x256 unwrapped iris into an 8x128 two-bit phase code sampled
/// at rows 2, 6, .., 30 and columns 1, 3, .., 255.
pub fn encode(norm: &NormalizedIris, params: &GaborParams) -> Result<IrisCode, IrisError> {
    if norm.rows() != DEFAULT_RADIAL_RES || norm.cols() != DEFAULT_ANGULAR_RES {
        return Err(IrisError::ShapeMismatch {
            rows: norm.rows(),
            cols: norm.cols(),
            expected_rows: DEFAULT_RADIAL_RES,
            expected_cols: DEFAULT_ANGULAR_RES,
        });
    }
    let kernel = GaborKernel::new(params);
    let rows = norm.rows() / ROW_STEP;
    let cols = norm.cols() / COL_STEP;
    let n = rows * cols * IrisCode::BITS_PER_CELL;
    let mut bits = BitArray::zeros(n);
    let mut mask = BitArray::zeros(n);
    for cr in 0..rows {
        for cc in 0..cols {
            let resp = kernel.response(norm, cr * ROW_STEP + ROW_OFFSET, cc * COL_STEP + COL_OFFSET);
            let k = (cr * cols + cc) * IrisCode::BITS_PER_CELL;
            bits.set(k, resp.re >= 0.0);
            bits.set(k + 1, resp.im >= 0.0);
            let usable = resp.coverage >= MIN_COVERAGE && resp.magnitude() >= MIN_MAGNITUDE;
            mask.set(k, usable);
            mask.set(k + 1, usable);
        }
    }
    Ok(IrisCode::new(rows, cols, bits, mask).expect("code dimensions are consistent"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn texture(seed: u64) -> NormalizedIris {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let comps: Vec<(f64, f64, f64)> = (0..12)
            .map(|_| (rng.gen_range(4..40) as f64, rng.gen_range(-2.0..2.0), rng.gen_range(0.0..TAU)))
            .collect();
        NormalizedIris::from_fn(32, 256, |i, j| {
            let v: f64 = comps
                .iter()
                .map(|(k, c, p)| (TAU * k * j as f64 / 256.0 + TAU * c * i as f64 / 32.0 + p).cos())
                .sum::<f64>()
                / 24.0;
            (0.5 + v.clamp(-0.5, 0.5), true)
        })
    }

    #[test]
    fn constant_input_has_no_response() {
        let flat = NormalizedIris::from_fn(32, 256, |_, _| (0.6, true));
        let r = gabor_response(&flat, (10, 40), &GaborParams::default());
        assert!(r.magnitude() < 1e-9, "{r:?}");
        assert_eq!(r.coverage, 1.0);
    }

    #[test]
    fn response_is_linear() {
        let a = texture(3);
        let half = NormalizedIris::from_fn(32, 256, |i, j| (a.value(i, j) * 0.5, true));
        let p = GaborParams::default();
        let ra = gabor_response(&a, (14, 100), &p);
        let rh = gabor_response(&half, (14, 100), &p);
        assert!((rh.re - 0.5 * ra.re).abs() < 1e-12);
        assert!((rh.im - 0.5 * ra.im).abs() < 1e-12);
    }

    #[test]
    fn tuned_frequency_beats_third_harmonic() {
        let p = GaborParams::default();
        let wave = |f: f64| NormalizedIris::from_fn(32, 256, |_, j| (0.5 + 0.4 * (TAU * f * j as f64).cos(), true));
        // 256 / 12 is not an integer; pick the nearest whole number of cycles
        let f = (256.0 * p.v0).round() / 256.0;
        let at_v0 = gabor_response(&wave(f), (16, 128), &p).magnitude();
        let at_3v0 = gabor_response(&wave(3.0 * f), (16, 128), &p).magnitude();
        assert!(at_v0 > at_3v0, "{at_v0} vs {at_3v0}");
    }

    #[test]
    fn invalid_samples_count_against_coverage() {
        let n = NormalizedIris::from_fn(32, 256, |_, j| (0.5, j < 128));
        let r = gabor_response(&n, (16, 0), &GaborParams::default());
        // the center column sits on the valid side
        assert!(r.coverage > 0.5 && r.coverage < 0.6, "{}", r.coverage);
        let inside = gabor_response(&n, (16, 64), &GaborParams::default());
        assert_eq!(inside.coverage, 1.0);
        let outside = gabor_response(&n, (16, 192), &GaborParams::default());
        assert_eq!(outside.coverage, 0.0);
        assert_eq!(outside.magnitude(), 0.0);
    }

    #[test]
    fn encode_is_deterministic() {
        let n = texture(11);
        let a = encode(&n, &GaborParams::default()).unwrap();
        let b = encode(&n, &GaborParams::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2048);
        assert_eq!(a.valid_bits(), 2048);
    }

    #[test]
    fn constant_input_masks_everything() {
        let flat = NormalizedIris::from_fn(32, 256, |_, _| (0.3, true));
        assert_eq!(encode(&flat, &GaborParams::default()).unwrap().valid_bits(), 0);
    }

    #[test]
    fn two_column_shift_is_one_code_column() {
        let n = texture(5);
        let p = GaborParams::default();
        let base = encode(&n, &p).unwrap();
        let shifted = encode(&n.shift_columns(2), &p).unwrap();
        assert_eq!(shifted, base.shift_columns(1));
    }

    #[test]
    fn wrong_shape_rejected() {
        let n = NormalizedIris::from_fn(16, 256, |_, _| (0.5, true));
        assert!(matches!(encode(&n, &GaborParams::default()), Err(IrisError::ShapeMismatch { .. })));
    }
}
