//! Discrete eigenvalues for `m == q` and `lambda > 0` by Prüfer shooting.
//!
//! The matching functional is `F(lambda) = theta_L(r_m) - theta_R(r_m)`,
//! where `theta_L` continues the solution recessive at the origin and
//! `theta_R` continues the solution recessive at infinity backwards.
//! Eigenvalues are the solutions of `F(lambda) = j pi`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ratio::recessive_angle;
use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::solver::{self, SolveConfig, FROBENIUS_FACTOR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenOptions {
    pub solve: SolveConfig,
    /// Overrides the turning-point matching radius.
    pub r_match: Option<f64>,
    /// Overrides the far radius.
    pub r_far: Option<f64>,
    /// Smallest energy examined; the bracket is clipped from below.
    pub lambda_floor: f64,
    /// Required `int kappa` between matching and far radius.
    pub decay_exponent: f64,
    /// Absolute bisection tolerance in `lambda`.
    pub tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            solve: SolveConfig::default(),
            r_match: None,
            r_far: None,
            lambda_floor: 1e-2,
            decay_exponent: 30.0,
            tol: 1e-11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub lambda: f64,
    /// Branch `j` of `F(lambda) = j pi`.
    pub branch: i64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    pub k: i32,
    pub bracket: (f64, f64),
    pub lambda_lo: f64,
    pub r_small: f64,
    pub r_match: f64,
    pub r_far: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    pub eigenvalues: Vec<Eigenvalue>,
}

impl EigenReport {
    pub fn values(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| e.lambda).collect()
    }
}

/// Matching functional with its radii fixed for a whole bracket.
pub struct Shooter<'a> {
    model: &'a CoefficientModel,
    k: i32,
    r_small: f64,
    r_match: f64,
    r_far: f64,
    cfg: SolveConfig,
}

impl<'a> Shooter<'a> {
    /// Chooses the radii for energies in `[lo, hi]`.
    pub fn new(model: &'a CoefficientModel, k: i32, lo: f64, hi: f64, opts: &EigenOptions) -> Result<Self> {
        if k == 0 {
            return Err(Error::ZeroAngularNumber);
        }
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::Precondition(format!(
                "eigenvalue bracket must lie in (0, inf), got ({lo}, {hi}]"
            )));
        }
        let r_small = frobenius_radius(model, k, lo, hi)?;
        let r_match = match opts.r_match {
            Some(r) => r,
            None => turning_point(model, hi, r_small),
        };
        if !(r_match > r_small) {
            return Err(Error::InvalidConfig(format!("matching radius {r_match} below {r_small}")));
        }
        let r_far = match opts.r_far {
            Some(r) => r,
            None => far_radius(model, lo, r_match, opts.decay_exponent)?,
        };
        if !(r_far > r_match) {
            return Err(Error::InvalidConfig(format!("far radius {r_far} below matching radius {r_match}")));
        }
        Ok(Shooter {
            model,
            k,
            r_small,
            r_match,
            r_far,
            cfg: opts.solve,
        })
    }

    pub fn radii(&self) -> (f64, f64, f64) {
        (self.r_small, self.r_match, self.r_far)
    }

    /// `F(lambda)`.
    pub fn mismatch(&self, lambda: f64) -> Result<f64> {
        let ch = self.model.channel(self.k, lambda)?;
        let u = solver::frobenius_init(&ch, self.k, self.r_small, FROBENIUS_FACTOR)?;
        let left = solver::phase_at(&ch, u[1].atan2(u[0]), self.r_small, self.r_match, &self.cfg)?;
        let far = recessive_angle(self.model, self.k, lambda, self.r_far)?;
        let right = solver::phase_at(&ch, far, self.r_far, self.r_match, &self.cfg)?;
        Ok(left - right)
    }
}

fn frobenius_radius(model: &CoefficientModel, k: i32, lo: f64, hi: f64) -> Result<f64> {
    let mut r = 1e-2;
    for _ in 0..60 {
        let mut ok = true;
        for lambda in [lo, hi] {
            let ch = model.channel(k, lambda)?;
            if let Err(Error::FrobeniusRadius { suggested, .. }) = solver::frobenius_init(&ch, k, r, FROBENIUS_FACTOR) {
                r = suggested.min(0.5 * r);
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(r);
        }
    }
    Err(Error::FrobeniusRadius { r0: r, suggested: r })
}

/// Radius where `2 q(r) = lambda`, or `1` when `q` never crosses.
fn turning_point(model: &CoefficientModel, lambda: f64, r_small: f64) -> f64 {
    let g = |r: f64| 2.0 * model.q.value(r) - lambda;
    let mut hi = 1.0f64.max(2.0 * r_small);
    if g(r_small) >= 0.0 {
        return hi;
    }
    while g(hi) < 0.0 && hi < 1e6 {
        hi *= 2.0;
    }
    if g(hi) < 0.0 {
        return 1.0f64.max(2.0 * r_small);
    }
    let mut lo = r_small;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn far_radius(model: &CoefficientModel, lambda: f64, r_match: f64, exponent: f64) -> Result<f64> {
    let kappa = |r: f64| (lambda * (2.0 * model.q.value(r) - lambda)).max(0.0).sqrt();
    let mut acc = 0.0;
    let mut r = r_match;
    let h = 0.25;
    while acc < exponent {
        acc += gauss_legendre(kappa, r, r + h);
        r += h;
        if r > 1e5 {
            return Err(Error::Precondition(format!(
                "no recessive decay of e^-{exponent} before r = 1e5 at lambda = {lambda}"
            )));
        }
    }
    Ok(r)
}

/// Eigenvalues in `(lo, hi]` (clipped below at `lambda_floor`).
pub fn eigen_shoot(model: &CoefficientModel, k: i32, bracket: (f64, f64), opts: &EigenOptions) -> Result<EigenReport> {
    let (a, b) = bracket;
    if !(a >= 0.0 && a < b) {
        return Err(Error::Precondition(format!(
            "eigenvalue bracket must lie in (0, inf), got ({a}, {b}]"
        )));
    }
    model.check_mass_equals_potential(&[0.5, 1.0, 2.0, 5.0, 10.0])?;
    let lo = a.max(opts.lambda_floor);
    if lo >= b {
        return Ok(EigenReport {
            k,
            bracket,
            lambda_lo: lo,
            r_small: f64::NAN,
            r_match: f64::NAN,
            r_far: f64::NAN,
            f_lo: f64::NAN,
            f_hi: f64::NAN,
            eigenvalues: Vec::new(),
        });
    }
    let shooter = Shooter::new(model, k, lo, b, opts)?;
    let f_lo = shooter.mismatch(lo)?;
    let f_hi = shooter.mismatch(b)?;
    // F decreases; branches j with F(b) <= j pi < F(lo).
    let j_max = (f_lo / PI).ceil() as i64 - 1;
    let j_min = (f_hi / PI).ceil() as i64;
    let mut eigenvalues = Vec::new();
    for j in (j_min..=j_max).rev() {
        let target = j as f64 * PI;
        let (mut x0, mut x1) = (lo, b);
        while x1 - x0 > opts.tol {
            let mid = 0.5 * (x0 + x1);
            if shooter.mismatch(mid)? > target {
                x0 = mid;
            } else {
                x1 = mid;
            }
        }
        let lambda = 0.5 * (x0 + x1);
        eigenvalues.push(Eigenvalue {
            lambda,
            branch: j,
            residual: shooter.mismatch(lambda)? - target,
        });
    }
    let (r_small, r_match, r_far) = shooter.radii();
    Ok(EigenReport {
        k,
        bracket,
        lambda_lo: lo,
        r_small,
        r_match,
        r_far,
        f_lo,
        f_hi,
        eigenvalues,
    })
}

/// `F` reduced to `[-pi/2, pi/2)`.
pub fn wrapped(f: f64) -> f64 {
    f - PI * (f / PI + 0.5).floor()
}

/// Sign changes of the wrapped mismatch between consecutive eigenvalues,
/// counted as crossings of the unwrapped mismatch through the levels
/// `(j + 1/2) pi` along `samples` interior points. Well-posed bisection
/// gives exactly one per gap.
pub fn interlacing_counts(model: &CoefficientModel, report: &EigenReport, samples: usize, opts: &EigenOptions) -> Result<Vec<usize>> {
    let ev = report.values();
    if ev.len() < 2 {
        return Ok(Vec::new());
    }
    let shooter = Shooter::new(
        model,
        report.k,
        report.lambda_lo,
        report.bracket.1,
        &EigenOptions {
            r_match: Some(report.r_match),
            r_far: Some(report.r_far),
            ..*opts
        },
    )?;
    let level = |f: f64| (f / PI - 0.5).floor() as i64;
    let mut counts = Vec::new();
    for w in ev.windows(2) {
        let mut values = Vec::with_capacity(samples + 2);
        for i in 0..=samples + 1 {
            let lambda = w[0] + (w[1] - w[0]) * i as f64 / (samples + 1) as f64;
            values.push(shooter.mismatch(lambda)?);
        }
        let n: i64 = values.windows(2).map(|p| (level(p[1]) - level(p[0])).abs()).sum();
        counts.push(n as usize);
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::Profile;

    fn linear() -> CoefficientModel {
        CoefficientModel::new(Profile::power(1.0, 1.0), Profile::power(1.0, 1.0)).unwrap()
    }

    #[test]
    fn negative_bracket_rejected() {
        let m = linear();
        assert!(matches!(
            eigen_shoot(&m, 1, (-2.0, -1.0), &EigenOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn mismatch_decreases() {
        let m = linear();
        let s = Shooter::new(&m, 1, 0.01, 5.0, &EigenOptions::default()).unwrap();
        let vals: Vec<f64> = (1..=40).map(|i| s.mismatch(i as f64 * 0.125).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
    }

    #[test]
    fn finds_eigenvalues() {
        let m = linear();
        let rep = eigen_shoot(&m, 1, (0.0, 5.0), &EigenOptions::default()).unwrap();
        assert!(!rep.eigenvalues.is_empty());
        for e in &rep.eigenvalues {
            assert!(e.lambda > 0.0 && e.lambda <= 5.0 && e.residual.abs() < 1e-6);
        }
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrapped(0.0), 0.0);
        assert!((wrapped(PI + 0.1) - 0.1).abs() < 1e-15);
        assert!((wrapped(-PI + 0.1) - 0.1).abs() < 1e-15);
    }
}
