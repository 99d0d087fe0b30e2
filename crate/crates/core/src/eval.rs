//! False accept / false reject rates over a threshold sweep.
//!
//! A pair is accepted at threshold `t` when its matching score is `>= t`, the
//! same rule the authentication stages use.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("invalid sweep {0:?}: expected start:stop:step with step > 0 and start <= stop")]
    BadSweep(String),
    #[error("no {0} scores")]
    NoScores(&'static str),
}

/// Thresholds `start + i * step` for every `i` that stays at or below `stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Sweep {
    pub fn thresholds(&self) -> Vec<f64> {
        // tolerate accumulated rounding at the stop value
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for Sweep {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EvalError::BadSweep(s.to_string());
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let [start, stop, step] = parts[..] else { return Err(bad()) };
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || start > stop {
            return Err(bad());
        }
        Ok(Sweep { start, stop, step })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub threshold: f64,
    /// Fraction of impostor scores accepted.
    pub far: f64,
    /// Fraction of genuine scores rejected.
    pub frr: f64,
}

pub fn far(impostor: &[f64], threshold: f64) -> f64 {
    impostor.iter().filter(|&&s| s >= threshold).count() as f64 / impostor.len() as f64
}

pub fn frr(genuine: &[f64], threshold: f64) -> f64 {
    genuine.iter().filter(|&&s| s < threshold).count() as f64 / genuine.len() as f64
}

pub fn sweep(genuine: &[f64], impostor: &[f64], thresholds: &[f64]) -> Result<Vec<RatePoint>, EvalError> {
    if genuine.is_empty() {
        return Err(EvalError::NoScores("genuine"));
    }
    if impostor.is_empty() {
        return Err(EvalError::NoScores("impostor"));
    }
    Ok(thresholds
        .iter()
        .map(|&t| RatePoint {
            threshold: t,
            far: far(impostor, t),
            frr: frr(genuine, t),
        })
        .collect())
}

/// `threshold,far,frr` with a header line.
pub fn to_csv(points: &[RatePoint]) -> String {
    let mut s = String::from("threshold,far,frr\n");
    for p in points {
        let _ = writeln!(s, "{:.4},{:.6},{:.6}", p.threshold, p.far, p.frr);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_sweeps() {
        let s: Sweep = "0:1:0.02".parse().unwrap();
        let t = s.thresholds();
        assert_eq!(t.len(), 51);
        assert!((t[50] - 1.0).abs() < 1e-12);
        assert_eq!("0.5:0.5:0.1".parse::<Sweep>().unwrap().thresholds(), [0.5]);
        for bad in ["", "0:1", "0:1:0", "1:0:0.1", "a:b:c", "0:1:-1", "0:1:0.1:2"] {
            assert!(bad.parse::<Sweep>().is_err(), "{bad}");
        }
    }

    #[test]
    fn rates_by_hand() {
        let genuine = [0.9, 0.8, 0.7, 0.5];
        let impostor = [0.2, 0.4, 0.6];
        let pts = sweep(&genuine, &impostor, &[0.0, 0.5, 0.65, 1.0]).unwrap();
        let got: Vec<_> = pts.iter().map(|p| (p.far, p.frr)).collect();
        assert_eq!(got, [(1.0, 0.0), (1.0 / 3.0, 0.0), (0.0, 0.25), (0.0, 1.0)]);
        assert_eq!(
            to_csv(&pts[..2]),
            "threshold,far,frr\n0.0000,1.000000,0.000000\n0.5000,0.333333,0.000000\n"
        );
    }

    #[test]
    fn empty_sets_rejected() {
        assert_eq!(sweep(&[], &[0.1], &[0.5]), Err(EvalError::NoScores("genuine")));
        assert_eq!(sweep(&[0.1], &[], &[0.5]), Err(EvalError::NoScores("impostor")));
    }

    proptest! {
        #[test]
        fn columns_are_monotone(
            genuine in prop::collection::vec(0.0f64..=1.0, 1..40),
            impostor in prop::collection::vec(0.0f64..=1.0, 1..40),
        ) {
            let t = Sweep { start: 0.0, stop: 1.0, step: 0.05 }.thresholds();
            let pts = sweep(&genuine, &impostor, &t).unwrap();
            for w in pts.windows(2) {
                prop_assert!(w[1].far <= w[0].far);
                prop_assert!(w[1].frr >= w[0].frr);
            }
        }

        #[test]
        fn matches_sorted_rank_oracle(
            mut scores in prop::collection::vec(0.0f64..=1.0, 1..40),
            t in 0.0f64..=1.0,
        ) {
            scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let below = scores.partition_point(|&s| s < t);
            let n = scores.len() as f64;
            prop_assert_eq!(frr(&scores, t), below as f64 / n);
            prop_assert_eq!(far(&scores, t), (scores.len() - below) as f64 / n);
        }
    }
}
