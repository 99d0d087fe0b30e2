//! Masked Hamming distance between iris codes, shift compensation, and the
//! threshold rule shared by both modalities.

use thiserror::Error;

use crate::bits::{masked_xor_count, BitArray};
use crate::iris::IrisCode;

/// Default iris authorization threshold on MS (hd <= 0.32).
pub const DEFAULT_MSSA_IRIS: f64 = 0.68;
/// Default shift search range, code columns.
pub const DEFAULT_MAX_SHIFT: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchError {
    #[error("code lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("code geometries differ: {0}x{1} vs {2}x{3}")]
    GeometryMismatch(usize, usize, usize, usize),
    #[error("no jointly valid bits to compare")]
    NoComparableBits,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchResult {
    /// Shift applied to the first code, code columns.
    pub best_shift: isize,
    pub hd: f64,
    /// MS = 1 - hd.
    pub score: f64,
    pub compared_bits: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Pass,
    Fail,
}

/// Fraction of jointly unmasked bits that differ.
pub fn masked_hamming(
    x: &BitArray,
    x_mask: &BitArray,
    y: &BitArray,
    y_mask: &BitArray,
) -> Result<(f64, usize), MatchError> {
    if x.len() != y.len() || x.len() != x_mask.len() || y.len() != y_mask.len() {
        return Err(MatchError::LengthMismatch(x.len(), y.len()));
    }
    let (diff, compared) = masked_xor_count(x, x_mask, y, y_mask);
    if compared == 0 {
        return Err(MatchError::NoComparableBits);
    }
    Ok((diff as f64 / compared as f64, compared))
}

pub fn hamming_norm(x: &IrisCode, y: &IrisCode) -> Result<(f64, usize), MatchError> {
    masked_hamming(x.bits(), x.mask(), y.bits(), y.mask())
}

/// Shifts in search order: 0, -1, +1, -2, +2, ...
fn shift_order(max_shift: usize) -> impl Iterator<Item = isize> {
    std::iter::once(0).chain((1..=max_shift as isize).flat_map(|s| [-s, s]))
}

/// Minimum masked distance over circular column shifts of `a` in
/// `[-max_shift, max_shift]`. Ties go to the smallest `|s|`, negative first.
pub fn match_iris(a: &IrisCode, b: &IrisCode, max_shift: usize) -> Result<MatchResult, MatchError> {
    if a.len() != b.len() {
        return Err(MatchError::LengthMismatch(a.len(), b.len()));
    }
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(MatchError::GeometryMismatch(a.rows(), a.cols(), b.rows(), b.cols()));
    }
    let mut best: Option<MatchResult> = None;
    for s in shift_order(max_shift) {
        let shifted = a.shift_columns(s);
        match hamming_norm(&shifted, b) {
            Ok((hd, compared_bits)) => {
                if best.is_none_or(|b| hd < b.hd) {
                    best = Some(MatchResult {
                        best_shift: s,
                        hd,
                        score: 1.0 - hd,
                        compared_bits,
                    });
                }
            }
            Err(MatchError::NoComparableBits) => {}
            Err(e) => return Err(e),
        }
    }
    best.ok_or(MatchError::NoComparableBits)
}

/// Pass iff `ms >= mssa`.
pub fn decide(ms: f64, mssa: f64) -> Decision {
    if ms >= mssa {
        Decision::Pass
    } else {
        Decision::Fail
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random_code(rng: &mut impl Rng, rows: usize, cols: usize, full_mask: bool) -> IrisCode {
        let n = rows * cols * 2;
        let bits = BitArray::from_bools((0..n).map(|_| rng.gen()));
        let mask = if full_mask {
            BitArray::ones(n)
        } else {
            BitArray::from_bools((0..n).map(|_| rng.gen_bool(0.8)))
        };
        IrisCode::new(rows, cols, bits, mask).unwrap()
    }

    /// Unpacked reference loop.
    fn oracle(x: &IrisCode, y: &IrisCode) -> Option<(f64, usize)> {
        let (mut diff, mut n) = (0usize, 0usize);
        for j in 0..x.len() {
            if x.mask().get(j) && y.mask().get(j) {
                n += 1;
                if x.bits().get(j) != y.bits().get(j) {
                    diff += 1;
                }
            }
        }
        (n > 0).then(|| (diff as f64 / n as f64, n))
    }

    #[test]
    fn identity_and_complement() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x = random_code(&mut rng, 8, 128, true);
        assert_eq!(hamming_norm(&x, &x).unwrap(), (0.0, 2048));
        let not_x = IrisCode::new(8, 128, x.bits().not(), x.mask().clone()).unwrap();
        assert_eq!(hamming_norm(&x, &not_x).unwrap(), (1.0, 2048));
    }

    #[test]
    fn hand_example() {
        let x = BitArray::parse("10110").unwrap();
        let y = BitArray::parse("10011").unwrap();
        let m = BitArray::ones(5);
        let (hd, n) = masked_hamming(&x, &m, &y, &m).unwrap();
        assert_eq!(n, 5);
        assert_eq!(hd, 0.4);
    }

    #[test]
    fn errors() {
        let a = BitArray::ones(8);
        let b = BitArray::ones(9);
        assert!(matches!(masked_hamming(&a, &a, &b, &b), Err(MatchError::LengthMismatch(8, 9))));
        let z = BitArray::zeros(8);
        assert_eq!(masked_hamming(&a, &z, &a, &a), Err(MatchError::NoComparableBits));
        let empty = IrisCode::new(8, 128, BitArray::zeros(2048), BitArray::zeros(2048)).unwrap();
        assert_eq!(match_iris(&empty, &empty, 8), Err(MatchError::NoComparableBits));
    }

    #[test]
    fn shifted_copy_found() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let a = random_code(&mut rng, 8, 128, true);
        let b = a.shift_columns(3);
        let m = match_iris(&a, &b, 8).unwrap();
        assert_eq!((m.hd, m.best_shift, m.score), (0.0, 3, 1.0));
        let m = match_iris(&a, &a.shift_columns(-5), 8).unwrap();
        assert_eq!(m.best_shift, -5);
        assert_eq!(match_iris(&a, &a, 8).unwrap().best_shift, 0);
    }

    #[test]
    fn tie_prefers_negative_shift() {
        // a code that is invariant under a shift of 2 columns has equal
        // distance at s = -1 and s = +1
        let cols = 16;
        let bits = BitArray::from_bools((0..cols * 2).map(|k| (k / 2) % 2 == 0));
        let a = IrisCode::new(1, cols, bits.clone(), BitArray::ones(cols * 2)).unwrap();
        let b = a.shift_columns(1);
        let m = match_iris(&a, &b, 3).unwrap();
        assert_eq!((m.hd, m.best_shift), (0.0, -1));
    }

    #[test]
    fn random_pairs_near_half() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..100 {
            let a = random_code(&mut rng, 8, 128, true);
            let b = random_code(&mut rng, 8, 128, true);
            let m = match_iris(&a, &b, DEFAULT_MAX_SHIFT).unwrap();
            assert!((0.45..=0.55).contains(&m.hd), "hd {}", m.hd);
        }
    }

    #[test]
    fn decision_boundaries() {
        assert_eq!(decide(0.68, 0.68), Decision::Pass);
        assert_eq!(decide(0.0, 0.0), Decision::Pass);
        assert_eq!(decide(0.679999, 0.68), Decision::Fail);
    }

    proptest! {
        #[test]
        fn packed_matches_unpacked(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x = random_code(&mut rng, 1, 32, false);
            let y = random_code(&mut rng, 1, 32, false);
            let got = hamming_norm(&x, &y).ok();
            prop_assert_eq!(got, oracle(&x, &y));
        }

        #[test]
        fn symmetric_and_bounded(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x = random_code(&mut rng, 8, 128, false);
            let y = random_code(&mut rng, 8, 128, false);
            let (h1, n1) = hamming_norm(&x, &y).unwrap();
            let (h2, n2) = hamming_norm(&y, &x).unwrap();
            prop_assert_eq!(h1, h2);
            prop_assert_eq!(n1, n2);
            prop_assert!((0.0..=1.0).contains(&h1));
            prop_assert!(n1 <= 2048);
        }

        #[test]
        fn shift_search_never_worse(seed in any::<u64>(), s in -20isize..20) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = random_code(&mut rng, 8, 128, false);
            let b = random_code(&mut rng, 8, 128, false);
            prop_assert_eq!(a.shift_columns(s).shift_columns(-s), a.clone());
            let m = match_iris(&a, &b, 8).unwrap();
            prop_assert!(m.hd <= hamming_norm(&a, &b).unwrap().0);
            prop_assert!(m.best_shift.unsigned_abs() <= 8);
            prop_assert_eq!(m.score, 1.0 - m.hd);
        }
    }
}
