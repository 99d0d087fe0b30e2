//! Grayscale raster, PGM I/O, bilinear sampling and 1-D Gaussian smoothing.
//!
//! Everything here is shared by the iris and fingerprint pipelines. Borders are
//! handled by clamping to the nearest edge pixel.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImagingError {
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("truncated pixel data: expected {expected} samples, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("unsupported maxval {0} (must be <= 255)")]
    UnsupportedMaxval(u32),
    #[error("sample value {value} exceeds maxval {maxval}")]
    SampleOutOfRange { value: u32, maxval: u32 },
    #[error("coordinate ({x}, {y}) outside a {width}x{height} image")]
    OutOfBounds {
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },
    #[error("invalid image dimensions {width}x{height} for {len} pixels")]
    InvalidDimensions {
        width: usize,
        height: usize,
        len: usize,
    },
}

/// 8-bit luminance raster, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(ImagingError::InvalidDimensions {
                width,
                height,
                len: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Image filled with a single value.
    ///
    /// Panics if either dimension is zero.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be non-zero");
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be non-zero");
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    /// Pixel lookup with clamp-to-edge for out-of-range integer coordinates.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x <= (self.width - 1) as f64 && y <= (self.height - 1) as f64
    }

    /// Bilinear interpolation; errors if `(x, y)` is outside the pixel grid.
    pub fn bilinear_sample(&self, x: f64, y: f64) -> Result<f64, ImagingError> {
        if !self.contains(x, y) {
            return Err(ImagingError::OutOfBounds {
                x,
                y,
                width: self.width,
                height: self.height,
            });
        }
        Ok(self.bilinear_clamped(x, y))
    }

    /// Bilinear interpolation with coordinates clamped onto the image first.
    /// NaN coordinates map to the origin.
    #[inline]
    pub fn bilinear_clamped(&self, x: f64, y: f64) -> f64 {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        let x = if x.is_nan() { 0.0 } else { x.clamp(0.0, max_x) };
        let y = if y.is_nan() { 0.0 } else { y.clamp(0.0, max_y) };
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let p00 = self.get(x0, y0) as f64;
        let p10 = self.get(x1, y0) as f64;
        let p01 = self.get(x0, y1) as f64;
        let p11 = self.get(x1, y1) as f64;
        let top = p00 + (p10 - p00) * fx;
        let bottom = p01 + (p11 - p01) * fx;
        top + (bottom - top) * fy
    }

    /// Box-filter downsampling by an integer factor. Partial blocks at the
    /// right/bottom edges are averaged over the pixels they contain.
    pub fn downsample(&self, factor: usize) -> GrayImage {
        assert!(factor >= 1, "downsample factor must be >= 1");
        if factor == 1 {
            return self.clone();
        }
        let w = self.width.div_ceil(factor);
        let h = self.height.div_ceil(factor);
        GrayImage::from_fn(w, h, |bx, by| {
            let x_end = ((bx + 1) * factor).min(self.width);
            let y_end = ((by + 1) * factor).min(self.height);
            let mut sum = 0u32;
            let mut n = 0u32;
            for y in by * factor..y_end {
                for x in bx * factor..x_end {
                    sum += self.get(x, y) as u32;
                    n += 1;
                }
            }
            ((sum + n / 2) / n) as u8
        })
    }
}

// --- PGM -------------------------------------------------------------------

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && !self.bytes[self.pos].is_ascii_whitespace()
            && self.bytes[self.pos] != b'#'
        {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<u32, ImagingError> {
        let tok = self
            .token()
            .ok_or_else(|| ImagingError::MalformedHeader(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| {
                ImagingError::MalformedHeader(format!(
                    "bad {what}: {:?}",
                    String::from_utf8_lossy(tok)
                ))
            })
    }
}

/// Parses a P2 (ASCII) or P5 (binary) PGM with maxval <= 255.
///
/// Sample values are taken verbatim; they are not rescaled to 0..255 when
/// maxval is smaller.
pub fn load_pgm(bytes: &[u8]) -> Result<GrayImage, ImagingError> {
    let mut rd = HeaderReader { bytes, pos: 0 };
    let binary = match rd.token() {
        Some(b"P5") => true,
        Some(b"P2") => false,
        Some(other) => {
            return Err(ImagingError::MalformedHeader(format!(
                "bad magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
        None => return Err(ImagingError::MalformedHeader("empty input".into())),
    };
    let width = rd.number("width")? as usize;
    let height = rd.number("height")? as usize;
    if width == 0 || height == 0 {
        return Err(ImagingError::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    let maxval = rd.number("maxval")?;
    if maxval == 0 {
        return Err(ImagingError::MalformedHeader("maxval must be positive".into()));
    }
    if maxval > 255 {
        return Err(ImagingError::UnsupportedMaxval(maxval));
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| ImagingError::MalformedHeader("dimensions overflow".into()))?;

    let pixels = if binary {
        // exactly one whitespace byte separates maxval from the raster
        if rd.pos >= bytes.len() || !bytes[rd.pos].is_ascii_whitespace() {
            return Err(ImagingError::TruncatedData { expected, found: 0 });
        } else {
            let data = &bytes[rd.pos + 1..];
            if data.len() < expected {
                return Err(ImagingError::TruncatedData {
                    expected,
                    found: data.len(),
                });
            }
            let raster = &data[..expected];
            if let Some(&v) = raster.iter().find(|&&v| v as u32 > maxval) {
                return Err(ImagingError::SampleOutOfRange {
                    value: v as u32,
                    maxval,
                });
            }
            raster.to_vec()
        }
    } else {
        let mut px = Vec::with_capacity(expected);
        while px.len() < expected {
            let Some(tok) = rd.token() else {
                return Err(ImagingError::TruncatedData {
                    expected,
                    found: px.len(),
                });
            };
            let v: u32 = std::str::from_utf8(tok)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| {
                    ImagingError::MalformedHeader(format!(
                        "bad sample {:?}",
                        String::from_utf8_lossy(tok)
                    ))
                })?;
            if v > maxval {
                return Err(ImagingError::SampleOutOfRange { value: v, maxval });
            }
            px.push(v as u8);
        }
        px
    };
    GrayImage::new(width, height, pixels)
}

/// Serializes to PGM with maxval 255; `binary` selects P5 over P2.
pub fn save_pgm(img: &GrayImage, binary: bool) -> Vec<u8> {
    let header = format!(
        "{}\n{} {}\n255\n",
        if binary { "P5" } else { "P2" },
        img.width,
        img.height
    );
    let mut out = header.into_bytes();
    if binary {
        out.extend_from_slice(&img.pixels);
    } else {
        for row in img.pixels.chunks(img.width) {
            let line = row
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            out.extend_from_slice(line.as_bytes());
            out.push(b'\n');
        }
    }
    out
}

// --- Gaussian smoothing ----------------------------------------------------

/// Normalized, truncated 1-D Gaussian with radius `ceil(3 * sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel1D {
    sigma: f64,
    weights: Vec<f64>,
}

impl GaussianKernel1D {
    /// Panics unless `sigma` is finite and positive.
    pub fn new(sigma: f64) -> Self {
        assert!(
            sigma.is_finite() && sigma > 0.0,
            "gaussian sigma must be positive, got {sigma}"
        );
        let radius = (3.0 * sigma).ceil() as isize;
        let mut weights: Vec<f64> = (-radius..=radius)
            .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
            .collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Self { sigma, weights }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn radius(&self) -> usize {
        self.weights.len() / 2
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Convolves `signal` with `kernel`, clamping indices at both ends.
pub fn smooth_1d(signal: &[f64], kernel: &GaussianKernel1D) -> Vec<f64> {
    let n = signal.len() as isize;
    let r = kernel.radius() as isize;
    (0..n)
        .map(|i| {
            kernel
                .weights
                .iter()
                .enumerate()
                .map(|(k, w)| {
                    let j = (i + k as isize - r).clamp(0, n - 1);
                    w * signal[j as usize]
                })
                .sum()
        })
        .collect()
}
