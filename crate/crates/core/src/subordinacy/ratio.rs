//! Ratio of running `L^2` masses of two solutions.

use serde::{Deserialize, Serialize};

use super::census::{theta_census, Census};
use super::transform::{guard_radius, transform};
use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::quadrature::cumulative_trapezoid;
use crate::solver::{self, SolveConfig, SolveStatus, Trajectory};

/// Default subordinacy threshold.
pub const DELTA: f64 = 1e-3;
/// Required coefficient of determination for the decay law.
pub const DECAY_R2: f64 = 0.99;
/// Relative Wronskian below which two initial vectors count as dependent.
pub const DEPENDENCE_TOL: f64 = 1e-10;
/// Points of the geometric ratio ladder.
pub const LADDER_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    NoSubordinate,
    SubordinateFound,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `int |u_a|^2 / int |u_b|^2`.
    AOverB,
    BOverA,
}

/// Least-squares fit of `ln ratio = a + slope * r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub orientation: Orientation,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioOptions {
    pub solve: SolveConfig,
    pub delta: f64,
    pub ladder_points: usize,
}

impl Default for RatioOptions {
    fn default() -> Self {
        RatioOptions {
            solve: SolveConfig::default(),
            delta: DELTA,
            ladder_points: LADDER_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubordinacyReport {
    pub lambda: f64,
    pub k: i32,
    pub r0: f64,
    pub r_end: f64,
    pub u0_a: [f64; 2],
    pub u0_b: [f64; 2],
    pub wronskian: f64,
    /// `(r, int_{r0}^r |u_a|^2 / int_{r0}^r |u_b|^2)`.
    pub ratio_tail: Vec<(f64, f64)>,
    /// Same samples, reversed orientation.
    pub reverse_tail: Vec<(f64, f64)>,
    /// `[r_end / 10, r_end]`.
    pub tail_window: (f64, f64),
    pub liminf_estimate: f64,
    pub liminf_reverse: f64,
    pub classification: Classification,
    pub decay_fit: Option<DecayFit>,
    pub census: Option<Census>,
    /// `|v(r0)|^2 / (12 C^2 |w(r0)|^2)` from the rescaled solutions.
    pub lower_bound: Option<f64>,
    pub notes: Vec<String>,
}

impl SubordinacyReport {
    /// Writes `r ratio` rows with a `#` header.
    pub fn write_table<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# r ratio")?;
        for (r, a) in &self.ratio_tail {
            writeln!(out, "{r} {a}")?;
        }
        Ok(())
    }
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Indices of a geometric ladder of `count` radii in `(r0, r_end]`, snapped
/// to the output grid and deduplicated.
fn ladder_indices(traj: &Trajectory, count: usize) -> Vec<usize> {
    let r0 = traj.grid[0];
    let r_end = *traj.grid.last().unwrap();
    let mut idx: Vec<usize> = (1..=count)
        .map(|i| traj.index_of(r0 * (r_end / r0).powf(i as f64 / count as f64)).max(1))
        .collect();
    idx.dedup();
    idx
}

fn mass(traj: &Trajectory) -> Vec<f64> {
    cumulative_trapezoid(&traj.grid, &traj.norm_sq())
}

fn decay_fit(tail: &[(f64, f64)], window: (f64, f64), delta: f64, orientation: Orientation) -> Option<DecayFit> {
    let last: Vec<(f64, f64)> = tail.iter().copied().filter(|(r, _)| *r >= window.0).collect();
    if last.len() < 4 || !last.windows(2).all(|w| w[1].1 < w[0].1) {
        return None;
    }
    let below: Vec<(f64, f64)> = last.into_iter().filter(|(_, v)| *v < delta).collect();
    if below.len() < 4 {
        return None;
    }
    let x: Vec<f64> = below.iter().map(|p| p.0).collect();
    let y: Vec<f64> = below.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, r_squared) = linear_fit(&x, &y);
    Some(DecayFit {
        orientation,
        slope,
        intercept,
        r_squared,
        points: x.len(),
    })
}

fn check_completed(t: &Trajectory) -> Result<()> {
    match t.status {
        SolveStatus::Completed => Ok(()),
        SolveStatus::StepUnderflow => Err(Error::StepUnderflow {
            r: *t.grid.last().unwrap_or(&f64::NAN),
        }),
    }
}

/// Solves the channel `(k, lambda)` from `u0_a` and `u0_b` on `[r0, r_end]`
/// and compares their running masses on a geometric ladder.
#[allow(clippy::too_many_arguments)]
pub fn subordinacy_ratio(
    model: &CoefficientModel,
    k: i32,
    lambda: f64,
    u0_a: [f64; 2],
    u0_b: [f64; 2],
    r0: f64,
    r_end: f64,
    opts: &RatioOptions,
) -> Result<SubordinacyReport> {
    let wr = u0_a[0] * u0_b[1] - u0_a[1] * u0_b[0];
    let norms = u0_a[0].hypot(u0_a[1]) * u0_b[0].hypot(u0_b[1]);
    if !(wr.abs() >= DEPENDENCE_TOL * norms) || norms == 0.0 {
        return Err(Error::DependentData { wronskian: wr });
    }
    if !(opts.delta > 0.0) || opts.ladder_points < 4 {
        return Err(Error::InvalidConfig("delta must be positive and the ladder needs 4 points".into()));
    }
    let channel = model.channel(k, lambda)?;
    let cfg = SolveConfig {
        r_start: r0,
        r_end,
        ..opts.solve
    };
    cfg.validate()?;
    let ta = solver::integrate_cartesian(&channel, u0_a, &cfg)?;
    let tb = solver::integrate_cartesian(&channel, u0_b, &cfg)?;
    check_completed(&ta)?;
    check_completed(&tb)?;
    let (ma, mb) = (mass(&ta), mass(&tb));
    let idx = ladder_indices(&ta, opts.ladder_points);
    let ratio_tail: Vec<(f64, f64)> = idx.iter().map(|&i| (ta.grid[i], ma[i] / mb[i])).collect();
    let reverse_tail: Vec<(f64, f64)> = idx.iter().map(|&i| (ta.grid[i], mb[i] / ma[i])).collect();
    let window = (r_end / 10.0, r_end);
    let tail_min = |t: &[(f64, f64)]| {
        t.iter()
            .filter(|(r, _)| *r >= window.0)
            .fold(f64::INFINITY, |m, (_, v)| m.min(*v))
    };
    let liminf_estimate = tail_min(&ratio_tail);
    let liminf_reverse = tail_min(&reverse_tail);
    let mut notes = Vec::new();

    let fit = [
        decay_fit(&ratio_tail, window, opts.delta, Orientation::AOverB),
        decay_fit(&reverse_tail, window, opts.delta, Orientation::BOverA),
    ]
    .into_iter()
    .flatten()
    .find(|f| f.slope < 0.0);
    let classification = if liminf_estimate >= opts.delta && liminf_reverse >= opts.delta {
        Classification::NoSubordinate
    } else if let Some(f) = fit.filter(|f| f.r_squared > DECAY_R2) {
        notes.push(format!(
            "decay law ln ratio ~ {:.4e} r over {} points, R^2 = {:.6}",
            f.slope, f.points, f.r_squared
        ));
        Classification::SubordinateFound
    } else {
        notes.push("ratio below threshold without a clean decay law".into());
        Classification::Inconclusive
    };

    let (census, lower_bound) = if lambda < 0.0 && model.check_mass_equals_potential(&[r0, 0.5 * (r0 + r_end), r_end]).is_ok() {
        rescaled_evidence(model, k, lambda, &ta, &tb, &cfg, &mut notes)
    } else {
        (None, None)
    };

    Ok(SubordinacyReport {
        lambda,
        k,
        r0,
        r_end,
        u0_a,
        u0_b,
        wronskian: wr,
        ratio_tail,
        reverse_tail,
        tail_window: window,
        liminf_estimate,
        liminf_reverse,
        classification,
        decay_fit: fit,
        census,
        lower_bound,
        notes,
    })
}

fn rescaled_evidence(
    model: &CoefficientModel,
    k: i32,
    lambda: f64,
    ta: &Trajectory,
    tb: &Trajectory,
    cfg: &SolveConfig,
    notes: &mut Vec<String>,
) -> (Option<Census>, Option<f64>) {
    let r0 = ta.grid[0];
    let r_end = *ta.grid.last().unwrap();
    let tc = match transform(model, k, lambda, &[r0]) {
        Ok(t) => t,
        Err(e) => {
            notes.push(format!("rescaling unavailable: {e}"));
            return (None, None);
        }
    };
    let Some(rc) = guard_radius(&tc, r0, super::census::GUARD, r_end) else {
        notes.push("guard |L/Q| <= 1/2 never holds on the range".into());
        return (None, None);
    };
    if rc > r0 {
        notes.push(format!("census starts at the guard radius {rc}"));
    }
    let ic = ta.index_of(rc);
    let rc = ta.grid[ic];
    let v0 = tc.forward(rc, ta.u(ic));
    let census = solver::integrate_pruefer_between(&tc, v0[0].hypot(v0[1]), v0[1].atan2(v0[0]), rc, r_end, cfg)
        .and_then(|t| solver::s_reparam(&tc, &t))
        .and_then(|s| theta_census(&s));
    let census = match census {
        Ok(c) => {
            notes.push(format!("census offset s = {:.6}", c.s_offset));
            Some(c)
        }
        Err(e) => {
            notes.push(format!("census refused: {e}"));
            None
        }
    };
    // Size constant of the rescaled solutions from the census start.
    let constant = |t: &Trajectory| {
        let n0 = {
            let v = tc.forward(rc, t.u(ic));
            v[0] * v[0] + v[1] * v[1]
        };
        (ic..t.len()).fold(1.0f64, |c, i| {
            let v = tc.forward(t.grid[i], t.u(i));
            let n = v[0] * v[0] + v[1] * v[1];
            c.max(n / n0).max(n0 / n)
        })
    };
    let bound = if ic == 0 {
        let c = constant(ta).max(constant(tb));
        let v = tc.forward(rc, ta.u(0));
        let w = tc.forward(rc, tb.u(0));
        Some((v[0] * v[0] + v[1] * v[1]) / (12.0 * c * c * (w[0] * w[0] + w[1] * w[1])))
    } else {
        None
    };
    (census, bound)
}

/// Initial data at `r0` of the solution recessive at infinity, obtained by
/// backward shooting from `r_far` along the recessive direction
/// `tan theta = (k/r - kappa)/lambda`, `kappa = sqrt(lambda (2q - lambda))`.
/// Requires `m == q` and `lambda > 0`.
pub fn decaying_data(model: &CoefficientModel, k: i32, lambda: f64, r0: f64, r_far: f64, cfg: &SolveConfig) -> Result<[f64; 2]> {
    if !(lambda > 0.0) {
        return Err(Error::Precondition("decaying data need lambda > 0".into()));
    }
    model.check_mass_equals_potential(&[r0, r_far])?;
    let channel = model.channel(k, lambda)?;
    let theta_far = recessive_angle(model, k, lambda, r_far)?;
    let theta = solver::phase_at(&channel, theta_far, r_far, r0, cfg)?;
    Ok([theta.cos(), theta.sin()])
}

/// Angle of the solution recessive at infinity at `r` for `m == q`,
/// `lambda > 0`, valid beyond the turning point.
pub fn recessive_angle(model: &CoefficientModel, k: i32, lambda: f64, r: f64) -> Result<f64> {
    let gamma = 2.0 * model.q.value(r) - lambda;
    if !(gamma > 0.0) {
        return Err(Error::NonpositiveDenominator { what: "2q - lambda", r });
    }
    let kappa = (lambda * gamma).sqrt();
    Ok(((k as f64 / r - kappa) / lambda).atan())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::Profile;

    fn linear() -> CoefficientModel {
        CoefficientModel::new(Profile::power(1.0, 1.0), Profile::power(1.0, 1.0)).unwrap()
    }

    #[test]
    fn identical_data_rejected() {
        let m = linear();
        let e = subordinacy_ratio(&m, 1, -1.0, [1.0, 0.5], [1.0, 0.5], 1.0, 10.0, &RatioOptions::default());
        assert!(matches!(e, Err(Error::DependentData { .. })));
    }

    #[test]
    fn negative_energy_has_no_subordinate() {
        let m = linear();
        let rep = subordinacy_ratio(&m, 1, -1.0, [1.0, 0.0], [0.0, 1.0], 1.0, 60.0, &RatioOptions::default()).unwrap();
        assert_eq!(rep.classification, Classification::NoSubordinate);
        assert!(rep.liminf_estimate > 0.0);
        let c = rep.census.as_ref().unwrap();
        assert!(c.violations.is_empty());
        let b = rep.lower_bound.unwrap();
        assert!(b > 0.0 && rep.liminf_estimate >= b && rep.liminf_reverse > 0.0);
    }

    #[test]
    fn positive_energy_decaying_is_subordinate() {
        let m = linear();
        let cfg = SolveConfig::default();
        let dec = decaying_data(&m, 1, 1.0, 1.0, 8.0, &cfg).unwrap();
        let gen = [-dec[1], dec[0]];
        let rep = subordinacy_ratio(&m, 1, 1.0, dec, gen, 1.0, 8.0, &RatioOptions::default()).unwrap();
        assert_eq!(rep.classification, Classification::SubordinateFound, "{:?}", rep.decay_fit);
        assert_eq!(rep.decay_fit.unwrap().orientation, Orientation::AOverB);
        assert!(rep.census.is_none());
    }
}
