use std::f64::consts::TAU;

use biogate::iris::{encode, normalize, segment_eye, Circle, GaborParams, NormalizedIris, SegmentConfig};
use biogate::matching::match_iris;
use biogate::synth::{synth_eye, EyeIdentity, Perturbation};
use biogate::GrayImage;
use proptest::prelude::*;

#[test]
fn rotating_the_texture_shifts_the_code() {
    let tex = |i: usize, j: f64| {
        0.5 + 0.2 * (TAU * 21.0 * j / 256.0 + 0.3 * i as f64).cos() + 0.15 * (TAU * 9.0 * j / 256.0 - 0.7).sin()
    };
    let base = NormalizedIris::from_fn(32, 256, |i, j| (tex(i, j as f64), true));
    let code = encode(&base, &GaborParams::default()).unwrap();
    for k in [2usize, 4, 8] {
        let rotated = NormalizedIris::from_fn(32, 256, |i, j| (tex(i, j as f64 - k as f64), true));
        let rc = encode(&rotated, &GaborParams::default()).unwrap();
        assert_eq!(rc, code.shift_columns(k as isize / 2), "k = {k}");
    }
}

#[test]
fn rotating_the_eye_image_shifts_the_code() {
    let id = EyeIdentity::with_geometry(21, 220, 220, Circle::new(110.0, 110.0, 28.0), Circle::new(110.0, 110.0, 82.0));
    let truth = id.truth(&Perturbation::default());
    let code_of = |rotation: f64| {
        let img = synth_eye(&id, &Perturbation { rotation, ..Default::default() });
        encode(&normalize(&img, &truth, 32, 256).unwrap(), &GaborParams::default()).unwrap()
    };
    let base = code_of(0.0);
    for k in [2i64, 4, 8] {
        let m = match_iris(&base, &code_of(TAU * k as f64 / 256.0), 8).unwrap();
        assert_eq!(m.best_shift, k as isize / 2, "k = {k}");
        assert!(m.hd < 0.1, "k = {k}: hd {}", m.hd);
    }
}

#[test]
fn seeded_eyes_segment_within_two_pixels() {
    for seed in 0..8u64 {
        let size = 120 + 40 * (seed as usize % 4);
        let id = EyeIdentity::from_seed(seed, size);
        let p = Perturbation { noise: 5.0, capture_seed: seed, ..Default::default() };
        let got = segment_eye(&synth_eye(&id, &p), &SegmentConfig::default()).unwrap();
        let want = id.truth(&p);
        for (g, w) in [(got.pupil, want.pupil), (got.iris, want.iris)] {
            assert!(
                (g.cx - w.cx).abs() <= 2.0 && (g.cy - w.cy).abs() <= 2.0 && (g.r - w.r).abs() <= 2.0,
                "seed {seed}: {g:?} vs {w:?}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn segmentation_never_returns_invalid_geometry(seed in any::<u64>(), blobs in 0usize..6) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let discs: Vec<(f64, f64, f64, u8)> = (0..blobs)
            .map(|_| (rng.gen_range(0.0..140.0), rng.gen_range(0.0..140.0), rng.gen_range(5.0..60.0), rng.gen()))
            .collect();
        let img = GrayImage::from_fn(140, 140, |x, y| {
            let mut v = rng.gen_range(100..140u8);
            for &(cx, cy, r, level) in &discs {
                if (x as f64 - cx).hypot(y as f64 - cy) < r {
                    v = level;
                }
            }
            v
        });
        if let Ok(g) = segment_eye(&img, &SegmentConfig::default()) {
            prop_assert!(g.validate().is_ok(), "{g:?}");
        }
    }
}
