//! Minutiae fingerprint pipeline: local-mean binarization, Zhang-Suen
//! thinning, crossing-number minutiae and a rigid-transform voting matcher.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;

use crate::imaging::GrayImage;

/// Default fingerprint authorization threshold on MS.
pub const DEFAULT_MSSA_FINGER: f64 = 0.4;

const TRACE_MAX: usize = 10;
const TRACE_MIN: usize = 5;
const ROTATION_BINS: usize = 32;

/// 0/1 raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut img = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                img.data[y * width + x] = f(x, y);
            }
        }
        img
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    /// Out-of-range coordinates read as background.
    #[inline]
    pub fn at(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height && self.get(x as usize, y as usize)
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|v| **v).count()
    }

    /// Neighbors P2..P9: N, NE, E, SE, S, SW, W, NW.
    fn ring(&self, x: usize, y: usize) -> [bool; 8] {
        let (x, y) = (x as isize, y as isize);
        RING.map(|(dx, dy)| self.at(x + dx, y + dy))
    }
}

/// Clockwise 8-neighborhood starting north (y grows downwards).
const RING: [(isize, isize); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];

/// Ridge (1) where a pixel is darker than its block mean minus 2.
pub fn binarize(img: &GrayImage, block: usize) -> BinaryImage {
    let block = block.max(1);
    let (w, h) = (img.width(), img.height());
    let mut out = BinaryImage::new(w, h);
    for by in (0..h).step_by(block) {
        for bx in (0..w).step_by(block) {
            let (x1, y1) = ((bx + block).min(w), (by + block).min(h));
            let mut sum = 0u64;
            for y in by..y1 {
                for x in bx..x1 {
                    sum += img.get(x, y) as u64;
                }
            }
            let mean = sum as f64 / ((x1 - bx) * (y1 - by)) as f64;
            for y in by..y1 {
                for x in bx..x1 {
                    out.set(x, y, (img.get(x, y) as f64) < mean - 2.0);
                }
            }
        }
    }
    out
}

/// Zhang-Suen thinning, iterated to a fixed point.
pub fn thin(input: &BinaryImage) -> BinaryImage {
    let mut img = input.clone();
    let mut doomed = Vec::new();
    loop {
        let mut changed = false;
        for step in 0..2 {
            doomed.clear();
            for y in 0..img.height {
                for x in 0..img.width {
                    if !img.get(x, y) {
                        continue;
                    }
                    let p = img.ring(x, y);
                    let b = p.iter().filter(|v| **v).count();
                    if !(2..=6).contains(&b) {
                        continue;
                    }
                    let a = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
                    if a != 1 {
                        continue;
                    }
                    let (p2, p4, p6, p8) = (p[0], p[2], p[4], p[6]);
                    let keep = if step == 0 {
                        (p2 && p4 && p6) || (p4 && p6 && p8)
                    } else {
                        (p2 && p4 && p8) || (p2 && p6 && p8)
                    };
                    if !keep {
                        doomed.push((x, y));
                    }
                }
            }
            for &(x, y) in &doomed {
                img.set(x, y, false);
            }
            changed |= !doomed.is_empty();
        }
        if !changed {
            return img;
        }
    }
}

/// Half the number of 0/1 transitions around the 8-neighborhood.
pub fn crossing_number(skel: &BinaryImage, x: usize, y: usize) -> usize {
    let p = skel.ring(x, y);
    (0..8).filter(|&i| p[i] != p[(i + 1) % 8]).count() / 2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MinutiaKind {
    Ending,
    Bifurcation,
}

impl MinutiaKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MinutiaKind::Ending => "ending",
            MinutiaKind::Bifurcation => "bifurcation",
        }
    }
}

/// Ridge ending or bifurcation. The angle is stored quantized to 1/65536 of
/// a turn so templates survive persistence bit-exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minutia {
    pub x: u16,
    pub y: u16,
    angle_units: u16,
    pub kind: MinutiaKind,
}

impl Minutia {
    pub fn new(x: u16, y: u16, angle: f64, kind: MinutiaKind) -> Self {
        let units = (angle.rem_euclid(TAU) / TAU * 65536.0).round() as u32 % 65536;
        Self::from_units(x, y, units as u16, kind)
    }

    pub fn from_units(x: u16, y: u16, angle_units: u16, kind: MinutiaKind) -> Self {
        Self {
            x,
            y,
            angle_units,
            kind,
        }
    }

    /// Radians in `[0, 2 pi)`.
    pub fn angle(&self) -> f64 {
        self.angle_units as f64 * TAU / 65536.0
    }

    pub fn angle_units(&self) -> u16 {
        self.angle_units
    }

    fn sort_key(&self) -> (u16, u16, u16, MinutiaKind) {
        (self.y, self.x, self.angle_units, self.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FingerTemplate {
    pub minutiae: Vec<Minutia>,
    /// Source image size, when known; not persisted.
    pub source_size: Option<(u16, u16)>,
}

impl FingerTemplate {
    pub fn new(minutiae: Vec<Minutia>) -> Self {
        Self {
            minutiae,
            source_size: None,
        }
    }

    pub fn len(&self) -> usize {
        self.minutiae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minutiae.is_empty()
    }

    /// One minutia per line: `kind x y angle`, angle in radians to 4 decimals.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for m in &self.minutiae {
            let _ = writeln!(s, "{} {} {} {:.4}", m.kind.as_str(), m.x, m.y, m.angle());
        }
        s
    }
}

/// Walks along the skeleton from `start`, entering through `first`, for up
/// to `TRACE_MAX` steps or until a junction/ending. Returns the last pixel
/// reached and the number of steps taken.
fn trace(skel: &BinaryImage, start: (usize, usize), first: (usize, usize), blocked: &[(usize, usize)]) -> ((usize, usize), usize) {
    let mut visited: Vec<(usize, usize)> = blocked.to_vec();
    visited.push(start);
    let mut cur = first;
    let mut steps = 1;
    while steps < TRACE_MAX {
        visited.push(cur);
        if crossing_number(skel, cur.0, cur.1) != 2 {
            break;
        }
        // prefer edge-adjacent neighbors over diagonal ones
        let next = [0usize, 2, 4, 6, 1, 3, 5, 7].iter().find_map(|&k| {
            let (dx, dy) = RING[k];
            let (nx, ny) = (cur.0 as isize + dx, cur.1 as isize + dy);
            (skel.at(nx, ny) && !visited.contains(&(nx as usize, ny as usize))).then_some((nx as usize, ny as usize))
        });
        match next {
            Some(n) => {
                cur = n;
                steps += 1;
            }
            None => break,
        }
    }
    (cur, steps)
}

/// Outward direction from the traced point toward `p`.
fn direction(p: (usize, usize), q: (usize, usize)) -> f64 {
    (p.1 as f64 - q.1 as f64).atan2(p.0 as f64 - q.0 as f64)
}

type Pixel = (usize, usize);

/// Rotation and translation `(theta, dx, dy)`.
type Transform = (f64, f64, f64);

/// Groups of consecutive ridge neighbors around `(x, y)`; one representative
/// per group, edge-adjacent preferred.
fn branches(skel: &BinaryImage, x: usize, y: usize) -> Vec<(Pixel, Vec<Pixel>)> {
    let p = skel.ring(x, y);
    let Some(start) = (0..8).find(|&i| !p[i]) else {
        return Vec::new();
    };
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for off in 1..=8 {
        let i = (start + off) % 8;
        if p[i] {
            if p[(i + 7) % 8] && !groups.is_empty() {
                groups.last_mut().unwrap().push(i);
            } else {
                groups.push(vec![i]);
            }
        }
    }
    let pos = |k: usize| ((x as isize + RING[k].0) as usize, (y as isize + RING[k].1) as usize);
    groups
        .into_iter()
        .map(|g| {
            let rep = *g.iter().find(|&&k| k % 2 == 0).unwrap_or(&g[0]);
            (pos(rep), g.into_iter().map(pos).collect())
        })
        .collect()
}

fn ending_angle(skel: &BinaryImage, x: usize, y: usize) -> Option<f64> {
    let b = branches(skel, x, y);
    let (first, _) = b.first()?;
    let (end, steps) = trace(skel, (x, y), *first, &[]);
    (steps >= TRACE_MIN).then(|| direction((x, y), end))
}

fn bifurcation_angle(skel: &BinaryImage, x: usize, y: usize) -> Option<f64> {
    let b = branches(skel, x, y);
    if b.len() != 3 {
        return None;
    }
    let all: Vec<(usize, usize)> = b.iter().flat_map(|(_, g)| g.iter().copied()).collect();
    let mut dirs = Vec::with_capacity(3);
    for (first, group) in &b {
        let blocked: Vec<_> = all.iter().filter(|p| !group.contains(p)).copied().collect();
        let (end, steps) = trace(skel, (x, y), *first, &blocked);
        if steps < TRACE_MIN {
            return None;
        }
        // branch direction points away from the junction
        dirs.push(direction(end, (x, y)));
    }
    // the two closest branches are the fork; the minutia points where it opens
    let gap = |a: f64, b: f64| {
        let d = (a - b).rem_euclid(TAU);
        d.min(TAU - d)
    };
    let (i, j) = [(0, 1), (0, 2), (1, 2)]
        .into_iter()
        .min_by(|&(a, b), &(c, d)| gap(dirs[a], dirs[b]).total_cmp(&gap(dirs[c], dirs[d])))
        .unwrap();
    let (sx, sy) = (dirs[i].cos() + dirs[j].cos(), dirs[i].sin() + dirs[j].sin());
    Some(sy.atan2(sx))
}

/// Crossing-number minutiae of a thinned ridge map. Points within
/// `border_margin` of the image edge, and points whose ridge cannot be traced
/// for at least 5 px, are dropped.
pub fn extract_minutiae(skel: &BinaryImage, border_margin: usize) -> FingerTemplate {
    let mut minutiae = Vec::new();
    let (w, h) = (skel.width(), skel.height());
    if w <= 2 * border_margin || h <= 2 * border_margin {
        return FingerTemplate::default();
    }
    for y in border_margin..h - border_margin {
        for x in border_margin..w - border_margin {
            if !skel.get(x, y) {
                continue;
            }
            let found = match crossing_number(skel, x, y) {
                1 => ending_angle(skel, x, y).map(|a| (a, MinutiaKind::Ending)),
                3 => bifurcation_angle(skel, x, y).map(|a| (a, MinutiaKind::Bifurcation)),
                _ => None,
            };
            if let Some((angle, kind)) = found {
                minutiae.push(Minutia::new(x as u16, y as u16, angle, kind));
            }
        }
    }
    FingerTemplate {
        minutiae,
        source_size: Some((w as u16, h as u16)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingerMatchParams {
    /// Position tolerance and translation bin size, px.
    pub tol_pos: f64,
    /// Angle tolerance, radians.
    pub tol_angle: f64,
}

impl Default for FingerMatchParams {
    fn default() -> Self {
        Self {
            tol_pos: 10.0,
            tol_angle: 0.35,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Rigid {
    theta: f64,
    tx: f64,
    ty: f64,
    cx: f64,
    cy: f64,
}

impl Rigid {
    fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let (dx, dy) = (x - self.cx, y - self.cy);
        (self.cx + c * dx - s * dy + self.tx, self.cy + s * dx + c * dy + self.ty)
    }
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Pairing score `2 * pairs / (|a| + |b|)` after aligning `a` onto `b` with
/// the most-voted rigid transform. Symmetric: the templates are put in a
/// canonical order first.
pub fn match_fingers(a: &FingerTemplate, b: &FingerTemplate, params: &FingerMatchParams) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let key = |t: &FingerTemplate| t.minutiae.iter().map(|m| m.sort_key()).collect::<Vec<_>>();
    let (a, b) = if key(a) <= key(b) { (a, b) } else { (b, a) };

    let n = a.len() as f64;
    let cx = a.minutiae.iter().map(|m| m.x as f64).sum::<f64>() / n;
    let cy = a.minutiae.iter().map(|m| m.y as f64).sum::<f64>() / n;
    let bin_width = TAU / ROTATION_BINS as f64;

    // (rotation bin, dx bin, dy bin) -> (theta, dx, dy) of every vote
    let mut votes: BTreeMap<(i64, i64, i64), Vec<Transform>> = BTreeMap::new();
    for ma in &a.minutiae {
        for mb in b.minutiae.iter().filter(|mb| mb.kind == ma.kind) {
            let theta = (mb.angle() - ma.angle()).rem_euclid(TAU);
            let r = Rigid { theta, tx: 0.0, ty: 0.0, cx, cy };
            let (rx, ry) = r.apply(ma.x as f64, ma.y as f64);
            let (tx, ty) = (mb.x as f64 - rx, mb.y as f64 - ry);
            let bin = (
                ((theta / bin_width).floor() as i64).rem_euclid(ROTATION_BINS as i64),
                (tx / params.tol_pos).floor() as i64,
                (ty / params.tol_pos).floor() as i64,
            );
            votes.entry(bin).or_default().push((theta, tx, ty));
        }
    }
    // BTreeMap order makes the smallest bin win ties
    let Some(top) = votes.values().fold(None::<&Vec<_>>, |best, v| match best {
        Some(b) if b.len() >= v.len() => Some(b),
        _ => Some(v),
    }) else {
        return 0.0;
    };
    let k = top.len() as f64;
    let (ss, cs) = top.iter().fold((0.0, 0.0), |(s, c), v| (s + v.0.sin(), c + v.0.cos()));
    let transform = Rigid {
        theta: ss.atan2(cs),
        tx: top.iter().map(|v| v.1).sum::<f64>() / k,
        ty: top.iter().map(|v| v.2).sum::<f64>() / k,
        cx,
        cy,
    };

    let moved: Vec<(f64, f64, f64)> = a
        .minutiae
        .iter()
        .map(|m| {
            let (x, y) = transform.apply(m.x as f64, m.y as f64);
            (x, y, m.angle() + transform.theta)
        })
        .collect();
    let mut candidates = Vec::new();
    for (i, (ma, &(x, y, ang))) in a.minutiae.iter().zip(&moved).enumerate() {
        for (j, mb) in b.minutiae.iter().enumerate() {
            if mb.kind != ma.kind {
                continue;
            }
            let d = (x - mb.x as f64).hypot(y - mb.y as f64);
            if d <= params.tol_pos && angle_gap(ang, mb.angle()) <= params.tol_angle {
                candidates.push((d, i, j));
            }
        }
    }
    candidates.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut pairs = 0usize;
    for (_, i, j) in candidates {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            pairs += 1;
        }
    }
    2.0 * pairs as f64 / (a.len() + b.len()) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn draw(w: usize, h: usize, pixels: &[(usize, usize)]) -> BinaryImage {
        let mut b = BinaryImage::new(w, h);
        for &(x, y) in pixels {
            b.set(x, y, true);
        }
        b
    }

    #[test]
    fn binarize_uniform_is_empty() {
        assert_eq!(binarize(&GrayImage::filled(40, 30, 99), 16).count(), 0);
    }

    #[test]
    fn binarize_stripes() {
        let img = GrayImage::from_fn(32, 32, |x, _| if x % 2 == 0 { 0 } else { 255 });
        let b = binarize(&img, 16);
        for y in 0..32 {
            for x in 0..32 {
                assert_eq!(b.get(x, y), x % 2 == 0);
            }
        }
    }

    #[test]
    fn thin_fixed_points() {
        let empty = BinaryImage::new(20, 20);
        assert_eq!(thin(&empty), empty);
        let line = draw(30, 9, &(5..25).map(|x| (x, 4)).collect::<Vec<_>>());
        assert_eq!(thin(&line), line);
        let diag = draw(20, 20, &(3..17).map(|i| (i, i)).collect::<Vec<_>>());
        assert_eq!(thin(&diag), diag);
    }

    #[test]
    fn thin_bar_to_single_line() {
        let bar = BinaryImage::from_fn(30, 9, |x, y| (5..25).contains(&x) && (3..6).contains(&y));
        let t = thin(&bar);
        let cols: Vec<usize> = (0..30).filter(|&x| (0..9).any(|y| t.get(x, y))).collect();
        assert!(cols.len() >= 16, "skeleton too short: {cols:?}");
        for &x in &cols {
            assert_eq!((0..9).filter(|&y| t.get(x, y)).count(), 1, "column {x}");
        }
        // contiguous columns, 8-connected
        assert_eq!(cols.last().unwrap() - cols[0] + 1, cols.len());
        for w in cols.windows(2) {
            let ya = (0..9).find(|&y| t.get(w[0], y)).unwrap() as isize;
            let yb = (0..9).find(|&y| t.get(w[1], y)).unwrap() as isize;
            assert!((ya - yb).abs() <= 1);
        }
    }

    #[test]
    fn crossing_numbers() {
        let line = draw(9, 9, &[(2, 4), (3, 4), (4, 4), (5, 4), (6, 4)]);
        assert_eq!(crossing_number(&line, 2, 4), 1);
        assert_eq!(crossing_number(&line, 4, 4), 2);
        let tee = draw(9, 9, &[(2, 4), (3, 4), (4, 4), (5, 4), (6, 4), (4, 5), (4, 6)]);
        assert_eq!(crossing_number(&tee, 4, 4), 3);
    }

    #[test]
    fn empty_skeleton_no_minutiae() {
        assert!(extract_minutiae(&BinaryImage::new(50, 50), 8).is_empty());
    }

    #[test]
    fn straight_ridge_has_two_endings() {
        let ridge = draw(80, 40, &(20..60).map(|x| (x, 20)).collect::<Vec<_>>());
        let t = extract_minutiae(&ridge, 8);
        assert_eq!(t.len(), 2);
        assert!(t.minutiae.iter().all(|m| m.kind == MinutiaKind::Ending));
        let mut angles: Vec<f64> = t.minutiae.iter().map(|m| m.angle()).collect();
        angles.sort_by(f64::total_cmp);
        assert!(angle_gap(angles[0], 0.0) < 0.2, "{angles:?}");
        assert!(angle_gap(angles[1], PI) < 0.2, "{angles:?}");
    }

    #[test]
    fn y_junction() {
        // stem going down, two arms going up-left and up-right
        let (jx, jy) = (40usize, 40usize);
        let mut px = vec![(jx, jy)];
        for i in 1..=20 {
            px.push((jx, jy + i));
            px.push((jx - i, jy - i));
            px.push((jx + i, jy - i));
        }
        let t = extract_minutiae(&draw(80, 80, &px), 8);
        let endings = t.minutiae.iter().filter(|m| m.kind == MinutiaKind::Ending).count();
        let bifs: Vec<_> = t.minutiae.iter().filter(|m| m.kind == MinutiaKind::Bifurcation).collect();
        assert_eq!((endings, bifs.len()), (3, 1), "{}", t.dump());
        assert_eq!((bifs[0].x as usize, bifs[0].y as usize), (jx, jy));
        // opens upwards (negative y)
        assert!(angle_gap(bifs[0].angle(), 1.5 * PI) < 0.2);
    }

    #[test]
    fn border_suppression() {
        let ridge = draw(40, 40, &(2..30).map(|x| (x, 20)).collect::<Vec<_>>());
        let t = extract_minutiae(&ridge, 8);
        assert_eq!(t.len(), 1);
        assert_eq!(t.minutiae[0].x, 29);
    }

    #[test]
    fn dump_format() {
        let t = FingerTemplate::new(vec![Minutia::new(3, 4, 1.0, MinutiaKind::Bifurcation)]);
        assert_eq!(t.dump(), "bifurcation 3 4 1.0000\n");
    }

    fn random_template(rng: &mut impl Rng, n: usize, field: u16) -> FingerTemplate {
        let mut ms: Vec<Minutia> = Vec::new();
        while ms.len() < n {
            let (x, y) = (rng.gen_range(0..field), rng.gen_range(0..field));
            if ms.iter().any(|m| m.x == x && m.y == y) {
                continue;
            }
            let kind = if rng.gen_bool(0.5) { MinutiaKind::Ending } else { MinutiaKind::Bifurcation };
            ms.push(Minutia::new(x, y, rng.gen_range(0.0..TAU), kind));
        }
        FingerTemplate::new(ms)
    }

    fn transformed(t: &FingerTemplate, theta: f64, dx: f64, dy: f64, cx: f64, cy: f64) -> FingerTemplate {
        FingerTemplate::new(
            t.minutiae
                .iter()
                .map(|m| {
                    let (s, c) = theta.sin_cos();
                    let (x, y) = (m.x as f64 - cx, m.y as f64 - cy);
                    let nx = cx + c * x - s * y + dx;
                    let ny = cy + s * x + c * y + dy;
                    Minutia::new(nx.round() as u16, ny.round() as u16, m.angle() + theta, m.kind)
                })
                .collect(),
        )
    }

    #[test]
    fn identical_templates_score_one() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let t = random_template(&mut rng, 12, 300);
        assert_eq!(match_fingers(&t, &t, &FingerMatchParams::default()), 1.0);
    }

    #[test]
    fn rigid_motion_scores_one() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
        let mut t = random_template(&mut rng, 12, 200);
        for m in &mut t.minutiae {
            m.x += 50;
            m.y += 50;
        }
        let moved = transformed(&t, 0.3, 7.0, -4.0, 150.0, 150.0);
        assert_eq!(match_fingers(&t, &moved, &FingerMatchParams::default()), 1.0);
    }

    #[test]
    fn empty_templates_score_zero() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let t = random_template(&mut rng, 5, 100);
        let p = FingerMatchParams::default();
        assert_eq!(match_fingers(&t, &FingerTemplate::default(), &p), 0.0);
        assert_eq!(match_fingers(&FingerTemplate::default(), &t, &p), 0.0);
    }

    #[test]
    fn random_impostors_score_low() {
        let p = FingerMatchParams::default();
        let low = (0..100u64)
            .filter(|&seed| {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1000 + seed);
                let a = random_template(&mut rng, 10, 300);
                let b = random_template(&mut rng, 10, 300);
                match_fingers(&a, &b, &p) <= 0.4
            })
            .count();
        assert!(low >= 95, "{low}/100");
    }

    proptest! {
        #[test]
        fn thin_is_idempotent(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let blob = BinaryImage::from_fn(24, 24, |_, _| rng.gen_bool(0.55));
            let once = thin(&blob);
            prop_assert_eq!(thin(&once), once);
        }

        #[test]
        fn score_symmetric(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = random_template(&mut rng, 15, 120);
            let mut b = transformed(&a, rng.gen_range(-0.3..0.3), 5.0, 3.0, 60.0, 60.0);
            b.minutiae.truncate(10);
            b.minutiae.extend(random_template(&mut rng, 6, 120).minutiae);
            let p = FingerMatchParams::default();
            prop_assert!((match_fingers(&a, &b, &p) - match_fingers(&b, &a, &p)).abs() <= 1e-9);
        }

        #[test]
        fn self_score_is_one(seed in any::<u64>(), n in 1usize..40) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = random_template(&mut rng, n, 300);
            prop_assert_eq!(match_fingers(&a, &a, &FingerMatchParams::default()), 1.0);
        }

        #[test]
        fn junction_free_skeleton_has_only_endings(seed in any::<u64>()) {
            // a handful of disjoint horizontal and vertical segments
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut img = BinaryImage::new(100, 100);
            for k in 0..5 {
                let y = 12 + k * 18;
                let x0 = rng.gen_range(10..40);
                let len = rng.gen_range(8..50);
                for x in x0..x0 + len { img.set(x, y, true); }
            }
            let t = extract_minutiae(&thin(&img), 8);
            prop_assert!(t.minutiae.iter().all(|m| m.kind == MinutiaKind::Ending));
        }
    }
}
