//! Interval census of the transformed Prüfer phase in the `s` variable.
//!
//! `J_n = {s : Theta(s) in [-3pi/4, -pi/4] + n pi}` and
//! `K_n = {s : Theta(s) in [-pi/4, pi/4] + n pi}`. Where `|L~/Q~| <= 1/2`
//! the phase obeys `Theta' in [1/2, 3/2]`, so every interval has length in
//! `[pi/3, pi]`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::STrajectory;

/// Guard on `|L~/Q~|`.
pub const GUARD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntervalKind {
    J,
    K,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensusInterval {
    pub n: usize,
    pub kind: IntervalKind,
    pub s_start: f64,
    pub s_end: f64,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Census {
    /// `s` at the first entry into a `J` interval; `J_1` starts here.
    pub s_offset: f64,
    pub intervals: Vec<CensusInterval>,
    pub min_dtheta_ds: f64,
    pub max_dtheta_ds: f64,
    /// Intervals with length outside `[pi/3, pi]` beyond `length_tol`.
    pub violations: Vec<CensusInterval>,
    /// `s` values where `Theta'` leaves `[1/2, 3/2]` beyond rounding.
    pub slope_violations: Vec<f64>,
    pub length_tol: f64,
}

impl Census {
    pub fn count(&self, kind: IntervalKind) -> usize {
        self.intervals.iter().filter(|i| i.kind == kind).count()
    }

    /// Writes columns `n kind s_start s_end length` with a `#` header.
    pub fn write_table<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# n kind s_start s_end length")?;
        for i in &self.intervals {
            let kind = match i.kind {
                IntervalKind::J => 0,
                IntervalKind::K => 1,
            };
            writeln!(out, "{} {} {} {} {}", i.n, kind, i.s_start, i.s_end, i.length)?;
        }
        Ok(())
    }
}

/// Cubic Hermite crossing of `level` on `[s0, s1]`.
fn hermite_crossing(s0: f64, s1: f64, y0: f64, y1: f64, d0: f64, d1: f64, level: f64) -> f64 {
    let h = s1 - s0;
    let eval = |t: f64| {
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1
            - level
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if eval(lo) > 0.0 || eval(hi) < 0.0 {
        // Monotone data with an overshooting interpolant: fall back to linear.
        return s0 + h * (level - y0) / (y1 - y0);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if eval(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    s0 + h * 0.5 * (lo + hi)
}

/// Census of a phase trajectory in `s`. Refused with the first violating
/// radius when `|L~/Q~| > 1/2` anywhere on the range.
pub fn theta_census(traj: &STrajectory) -> Result<Census> {
    if let Some(i) = traj.l_over_q.iter().position(|x| x.abs() > GUARD) {
        return Err(Error::CensusGuard {
            r: traj.r[i],
            ratio: traj.l_over_q[i].abs(),
        });
    }
    let n = traj.s.len();
    let (mut dmin, mut dmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut slope_violations = Vec::new();
    for (s, d) in traj.s.iter().zip(&traj.dtheta_ds) {
        dmin = dmin.min(*d);
        dmax = dmax.max(*d);
        if *d < 0.5 - 1e-12 || *d > 1.5 + 1e-12 {
            slope_violations.push(*s);
        }
    }
    // Level crossings -3pi/4 + j pi/2; J starts on even j relative to -3pi/4.
    let base = -3.0 * FRAC_PI_4;
    let theta0 = traj.theta[0];
    let mut j = ((theta0 - base) / FRAC_PI_2).floor() as i64 + 1;
    let mut crossings: Vec<(i64, f64)> = Vec::new();
    for i in 0..n.saturating_sub(1) {
        loop {
            let level = base + j as f64 * FRAC_PI_2;
            if traj.theta[i + 1] < level {
                break;
            }
            let s = hermite_crossing(
                traj.s[i],
                traj.s[i + 1],
                traj.theta[i],
                traj.theta[i + 1],
                traj.dtheta_ds[i],
                traj.dtheta_ds[i + 1],
                level,
            );
            crossings.push((j, s));
            j += 1;
        }
    }
    // J entries are crossings with j even (levels -3pi/4 + n pi).
    let first_j = crossings.iter().position(|(j, _)| j.rem_euclid(2) == 0);
    let mut intervals = Vec::new();
    let s_offset = first_j.map_or(f64::NAN, |i| crossings[i].1);
    if let Some(start) = first_j {
        for (idx, pair) in crossings[start..].windows(2).enumerate() {
            let kind = if idx % 2 == 0 { IntervalKind::J } else { IntervalKind::K };
            intervals.push(CensusInterval {
                n: idx / 2 + 1,
                kind,
                s_start: pair[0].1,
                s_end: pair[1].1,
                length: pair[1].1 - pair[0].1,
            });
        }
    }
    let resolution = traj.s.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let length_tol = 1e-9 * (1.0 + resolution);
    let violations = intervals
        .iter()
        .filter(|i| i.length < PI / 3.0 - length_tol || i.length > PI + length_tol)
        .copied()
        .collect();
    Ok(Census {
        s_offset,
        intervals,
        min_dtheta_ds: dmin,
        max_dtheta_ds: dmax,
        violations,
        slope_violations,
        length_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::ConstantChannel;
    use crate::solver::{integrate_pruefer, s_reparam, SolveConfig};

    #[test]
    fn uniform_rotation_has_quarter_turns() {
        let ch = ConstantChannel::new(1.0, 0.0, 0.0);
        let t = integrate_pruefer(&ch, 1.0, 0.1, &SolveConfig::range(1.0, 40.0)).unwrap();
        let c = theta_census(&s_reparam(&ch, &t).unwrap()).unwrap();
        assert!(c.intervals.len() >= 20);
        for i in &c.intervals {
            assert!((i.length - FRAC_PI_2).abs() < 1e-10, "{i:?}");
        }
        assert!((c.s_offset - (FRAC_PI_4 - 0.1)).abs() < 1e-10);
        assert_eq!(c.intervals[0].kind, IntervalKind::J);
    }

    #[test]
    fn extremal_envelope_stays_in_bounds() {
        let ch = ConstantChannel::new(1.0, 0.0, 0.5);
        let t = integrate_pruefer(&ch, 1.0, 0.0, &SolveConfig::range(1.0, 200.0).with_stride(0.01)).unwrap();
        let c = theta_census(&s_reparam(&ch, &t).unwrap()).unwrap();
        assert!(c.violations.is_empty(), "{:?}", c.violations);
        assert!(c.slope_violations.is_empty());
        let (lo, hi) = c
            .intervals
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), i| (a.min(i.length), b.max(i.length)));
        assert!(lo >= PI / 3.0 - 1e-9 && hi <= PI + 1e-9);
    }

    #[test]
    fn guard_refuses() {
        let ch = ConstantChannel::new(1.0, 0.0, 0.6);
        let t = integrate_pruefer(&ch, 1.0, 0.0, &SolveConfig::range(1.0, 3.0)).unwrap();
        assert!(matches!(theta_census(&s_reparam(&ch, &t).unwrap()), Err(Error::CensusGuard { .. })));
    }
}
