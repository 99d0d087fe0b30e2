//! Seeded synthetic eye and fingerprint images with known ground truth.
//!
//! Eyes are rendered analytically: a dark pupil disk, a textured iris annulus
//! (a sum of seeded sinusoids in polar coordinates), a soft limbus and a light
//! sclera, optionally with a dark eyelid band. Fingerprints are a cosine
//! ridge pattern whose phase is a smooth curved carrier plus one +-1 spiral
//! term per minutia.
//!
//! The same identity with the default [`Perturbation`] always renders the
//! same bytes.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imaging::GrayImage;
use crate::iris::{Circle, EyeGeometry};

const PUPIL_LEVEL: f64 = 15.0;
const IRIS_LEVEL: f64 = 110.0;
const SCLERA_LEVEL: f64 = 170.0;
const EYELID_LEVEL: f64 = 45.0;
const LIMBUS_WIDTH: f64 = 4.0;
const TEXTURE_STD: f64 = 20.0;
const TEXTURE_COMPONENTS: usize = 48;

const FINGER_SIZE: usize = 256;
const RIDGE_PERIOD: f64 = 6.0;
const RIDGE_CONTRAST: f64 = 90.0;

/// Capture-to-capture variation. Rotation is about the image center for
/// fingers and about the iris center for eyes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Perturbation {
    /// Radians.
    pub rotation: f64,
    pub dx: f64,
    pub dy: f64,
    /// Uniform noise amplitude, grey levels (0..=255).
    pub noise: f64,
    /// Seeds the noise realization.
    pub capture_seed: u64,
}

impl Perturbation {
    /// Small random capture variation: rotation up to `max_rotation`,
    /// translation up to `max_shift` px, noise amplitude `noise`.
    pub fn random(rng: &mut impl Rng, max_rotation: f64, max_shift: f64, noise: f64) -> Self {
        Self {
            rotation: if max_rotation > 0.0 { rng.gen_range(-max_rotation..=max_rotation) } else { 0.0 },
            dx: if max_shift > 0.0 { rng.gen_range(-max_shift..=max_shift) } else { 0.0 },
            dy: if max_shift > 0.0 { rng.gen_range(-max_shift..=max_shift) } else { 0.0 },
            noise,
            capture_seed: rng.gen(),
        }
    }
}

fn add_noise(img: &mut [f64], amplitude: f64, identity_seed: u64, capture_seed: u64) {
    if amplitude <= 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(identity_seed ^ capture_seed.rotate_left(17) ^ 0x9e37_79b9_7f4a_7c15);
    for v in img {
        *v += rng.gen_range(-amplitude..=amplitude);
    }
}

fn quantize(width: usize, height: usize, values: &[f64]) -> GrayImage {
    GrayImage::new(width, height, values.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect())
        .expect("buffer sized to image")
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TextureWave {
    angular: f64,
    radial: f64,
    phase: f64,
    amplitude: f64,
}

/// Ground-truth description of a synthetic eye.
#[derive(Debug, Clone, PartialEq)]
pub struct EyeIdentity {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub pupil: Circle,
    pub iris: Circle,
    /// Rows above this y (before translation) are covered by a dark eyelid band.
    pub eyelid_edge: Option<f64>,
    texture: Vec<TextureWave>,
}

impl EyeIdentity {
    /// Random geometry scaled to a `size x size` image, plus texture.
    pub fn from_seed(seed: u64, size: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = size as f64;
        let cx = s / 2.0 + rng.gen_range(-0.04..=0.04) * s;
        let cy = s / 2.0 + rng.gen_range(-0.04..=0.04) * s;
        let pr = rng.gen_range((0.11 * s).max(17.0)..=(0.15 * s).max(19.0));
        let ir = rng.gen_range((0.34 * s).max(pr + 22.0)..=(0.40 * s).max(pr + 24.0));
        let pupil = Circle::new(cx + rng.gen_range(-1.5..=1.5), cy + rng.gen_range(-1.5..=1.5), pr);
        let iris = Circle::new(cx, cy, ir);
        Self::with_geometry_rng(seed, size, size, pupil, iris, &mut rng)
    }

    /// Explicit geometry; texture still drawn from `seed`.
    pub fn with_geometry(seed: u64, width: usize, height: usize, pupil: Circle, iris: Circle) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5151_7e47);
        Self::with_geometry_rng(seed, width, height, pupil, iris, &mut rng)
    }

    fn with_geometry_rng(seed: u64, width: usize, height: usize, pupil: Circle, iris: Circle, rng: &mut ChaCha8Rng) -> Self {
        let amplitude = TEXTURE_STD * (2.0 / TEXTURE_COMPONENTS as f64).sqrt();
        let texture = (0..TEXTURE_COMPONENTS)
            .map(|_| TextureWave {
                angular: rng.gen_range(6..=40) as f64 * if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
                radial: rng.gen_range(-3.0..=3.0),
                phase: rng.gen_range(0.0..TAU),
                amplitude,
            })
            .collect();
        Self {
            seed,
            width,
            height,
            pupil,
            iris,
            eyelid_edge: None,
            texture,
        }
    }

    pub fn with_eyelid(mut self, edge_y: f64) -> Self {
        self.eyelid_edge = Some(edge_y);
        self
    }

    /// Geometry as it appears in an image rendered with `p`.
    pub fn truth(&self, p: &Perturbation) -> EyeGeometry {
        let (s, c) = p.rotation.sin_cos();
        let (ox, oy) = (self.pupil.cx - self.iris.cx, self.pupil.cy - self.iris.cy);
        let pupil = Circle::new(
            self.iris.cx + c * ox - s * oy + p.dx,
            self.iris.cy + s * ox + c * oy + p.dy,
            self.pupil.r,
        );
        let iris = Circle::new(self.iris.cx + p.dx, self.iris.cy + p.dy, self.iris.r);
        EyeGeometry::new(pupil, iris)
    }

    fn texture_at(&self, rho: f64, theta: f64) -> f64 {
        self.texture
            .iter()
            .map(|w| w.amplitude * (w.angular * theta + TAU * w.radial * rho + w.phase).cos())
            .sum()
    }

    fn luminance(&self, u: f64, v: f64) -> f64 {
        let dp = (u - self.pupil.cx).hypot(v - self.pupil.cy);
        let di = (u - self.iris.cx).hypot(v - self.iris.cy);
        let rho = ((di - self.pupil.r) / (self.iris.r - self.pupil.r)).clamp(0.0, 1.0);
        let theta = (v - self.iris.cy).atan2(u - self.iris.cx);
        let iris = IRIS_LEVEL + self.texture_at(rho, theta);
        let limbus = ((di - (self.iris.r - LIMBUS_WIDTH / 2.0)) / LIMBUS_WIDTH).clamp(0.0, 1.0);
        let outer = iris + (SCLERA_LEVEL - iris) * limbus;
        let pupil_edge = (dp - self.pupil.r + 0.5).clamp(0.0, 1.0);
        PUPIL_LEVEL + (outer - PUPIL_LEVEL) * pupil_edge
    }
}

pub fn synth_eye(id: &EyeIdentity, p: &Perturbation) -> GrayImage {
    let (s, c) = p.rotation.sin_cos();
    let mut values = Vec::with_capacity(id.width * id.height);
    for y in 0..id.height {
        for x in 0..id.width {
            let (tx, ty) = (x as f64 - p.dx, y as f64 - p.dy);
            if id.eyelid_edge.is_some_and(|e| ty < e) {
                values.push(EYELID_LEVEL);
                continue;
            }
            // inverse rotation about the iris center
            let (rx, ry) = (tx - id.iris.cx, ty - id.iris.cy);
            let u = id.iris.cx + c * rx + s * ry;
            let v = id.iris.cy - s * rx + c * ry;
            values.push(id.luminance(u, v));
        }
    }
    add_noise(&mut values, p.noise, id.seed, p.capture_seed);
    quantize(id.width, id.height, &values)
}

/// One spiral phase singularity of the ridge pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeVortex {
    pub x: f64,
    pub y: f64,
    /// +1 or -1.
    pub charge: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FingerIdentity {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    /// Center of the circular carrier ridges (well outside the image).
    pub flow_origin: (f64, f64),
    pub period: f64,
    pub vortices: Vec<RidgeVortex>,
}

impl FingerIdentity {
    /// `count` minutiae, at least 28 px apart and 24 px from the border, on a
    /// 256x256 field.
    pub fn from_seed(seed: u64, count: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xf1f1_2c2c);
        let size = FINGER_SIZE as f64;
        let dir = rng.gen_range(0.0..TAU);
        let dist = rng.gen_range(1.5..3.0) * size;
        let flow_origin = (size / 2.0 + dist * dir.cos(), size / 2.0 + dist * dir.sin());
        let mut vortices: Vec<RidgeVortex> = Vec::with_capacity(count);
        let mut attempts = 0;
        while vortices.len() < count && attempts < 10_000 {
            attempts += 1;
            let (x, y) = (rng.gen_range(24.0..size - 24.0), rng.gen_range(24.0..size - 24.0));
            if vortices.iter().any(|v| (v.x - x).hypot(v.y - y) < 28.0) {
                continue;
            }
            let charge = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            vortices.push(RidgeVortex { x, y, charge });
        }
        Self {
            seed,
            width: FINGER_SIZE,
            height: FINGER_SIZE,
            flow_origin,
            period: RIDGE_PERIOD,
            vortices,
        }
    }

    fn phase(&self, u: f64, v: f64) -> f64 {
        let carrier = TAU * (u - self.flow_origin.0).hypot(v - self.flow_origin.1) / self.period;
        carrier
            + self
                .vortices
                .iter()
                .map(|m| m.charge * (v - m.y).atan2(u - m.x))
                .sum::<f64>()
    }

    /// Minutia positions as they appear in an image rendered with `p`.
    pub fn truth(&self, p: &Perturbation) -> Vec<(f64, f64)> {
        let (cx, cy) = (self.width as f64 / 2.0, self.height as f64 / 2.0);
        let (s, c) = p.rotation.sin_cos();
        self.vortices
            .iter()
            .map(|m| {
                let (x, y) = (m.x - cx, m.y - cy);
                (cx + c * x - s * y + p.dx, cy + s * x + c * y + p.dy)
            })
            .collect()
    }
}

/// Dark ridges on a light background.
pub fn synth_finger(id: &FingerIdentity, p: &Perturbation) -> GrayImage {
    let (cx, cy) = (id.width as f64 / 2.0, id.height as f64 / 2.0);
    let (s, c) = p.rotation.sin_cos();
    let mut values = Vec::with_capacity(id.width * id.height);
    for y in 0..id.height {
        for x in 0..id.width {
            let (rx, ry) = (x as f64 - p.dx - cx, y as f64 - p.dy - cy);
            let u = cx + c * rx + s * ry;
            let v = cy - s * rx + c * ry;
            values.push(128.0 - RIDGE_CONTRAST * id.phase(u, v).cos());
        }
    }
    add_noise(&mut values, p.noise, id.seed, p.capture_seed);
    quantize(id.width, id.height, &values)
}
