//! The quadratic form `R` that dominates `|u|^2` and is almost monotone along
//! solutions, and the two-sided comparability certificate built from it.
//!
//! General form, valid where `Q > W`:
//!
//! ```text
//! R = ((u1^2 + u2^2) Q + (u1^2 - u2^2) M + 2 u1 u2 L) / (Q - W)
//! ```
//!
//! With `M == 0` the denominator is `Q - L`; with `L == 0` it is `Q - M`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bvcalc::variation_of;
use crate::coefficients::{Channel, ChannelPoint, Structure};
use crate::error::{Error, Result};
use crate::hypotheses::{self, CheckOptions, HypothesisReport, Verdict};
use crate::solver::{self, SolveConfig, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RForm {
    General,
    MZero,
    LZero,
}

impl From<Structure> for RForm {
    fn from(s: Structure) -> Self {
        match s {
            Structure::General => RForm::General,
            Structure::MassFree => RForm::MZero,
            Structure::AngularFree => RForm::LZero,
        }
    }
}

/// `R` at one point for the given form.
pub fn r_eval(u: [f64; 2], c: &ChannelPoint, form: RForm, r: f64) -> Result<f64> {
    let [u1, u2] = u;
    let n2 = u1 * u1 + u2 * u2;
    match form {
        RForm::General => {
            let den = c.q - c.w();
            if !(den > 0.0) {
                return Err(Error::NonpositiveDenominator { what: "Q - W", r });
            }
            Ok((n2 * c.q + (u1 * u1 - u2 * u2) * c.m + 2.0 * u1 * u2 * c.l) / den)
        }
        RForm::MZero => {
            let den = c.q - c.l;
            if !(den > 0.0) {
                return Err(Error::NonpositiveDenominator { what: "Q - L", r });
            }
            Ok(n2 + c.l / den * (u1 + u2).powi(2))
        }
        RForm::LZero => {
            let den = c.q - c.m;
            if !(den > 0.0) {
                return Err(Error::NonpositiveDenominator { what: "Q - M", r });
            }
            Ok(n2 + 2.0 * c.m / den * u1 * u1)
        }
    }
}

/// `R` along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RTrace {
    pub grid: Vec<f64>,
    pub r_values: Vec<f64>,
    pub norm_sq: Vec<f64>,
    /// Pointwise lower bound for `R` in terms of `|u|^2`.
    pub lower_bound: Vec<f64>,
    pub form: RForm,
    /// `sup |L|/Q` (M-zero form) or `sup |M|/Q` (L-zero form) over the trace.
    pub eps: Option<f64>,
    /// `(name, variation over the trace)` of the controlling quotients.
    pub quotient_variations: Vec<(String, f64)>,
}

impl RTrace {
    /// Writes columns `r, R, |u|^2, bound` with a `#` header.
    pub fn write_table<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# r R norm_sq bound")?;
        for i in 0..self.grid.len() {
            writeln!(
                out,
                "{} {} {} {}",
                self.grid[i], self.r_values[i], self.norm_sq[i], self.lower_bound[i]
            )?;
        }
        Ok(())
    }
}

fn quotient_series(coeffs: &[ChannelPoint], form: RForm) -> Vec<(String, Vec<f64>)> {
    match form {
        RForm::General => {
            let den: Vec<f64> = coeffs.iter().map(|c| c.q - c.w()).collect();
            vec![
                ("W/(Q - W)".into(), coeffs.iter().zip(&den).map(|(c, d)| c.w() / d).collect()),
                ("M/(Q - W)".into(), coeffs.iter().zip(&den).map(|(c, d)| c.m / d).collect()),
                ("L/(Q - W)".into(), coeffs.iter().zip(&den).map(|(c, d)| c.l / d).collect()),
            ]
        }
        RForm::MZero => vec![(
            "L/(Q - L)".into(),
            coeffs.iter().map(|c| c.l / (c.q - c.l)).collect(),
        )],
        RForm::LZero => vec![(
            "M/(Q - M)".into(),
            coeffs.iter().map(|c| c.m / (c.q - c.m)).collect(),
        )],
    }
}

fn form_eps(coeffs: &[ChannelPoint], form: RForm) -> Option<f64> {
    let sel = match form {
        RForm::General => return None,
        RForm::MZero => |c: &ChannelPoint| c.l.abs() / c.q,
        RForm::LZero => |c: &ChannelPoint| c.m.abs() / c.q,
    };
    Some(coeffs.iter().map(sel).fold(0.0, f64::max))
}

/// Evaluates `R` along `traj` in the form selected by the channel structure.
pub fn r_trace<C: Channel>(channel: &C, traj: &Trajectory) -> Result<RTrace> {
    r_trace_with(traj, channel.structure().into())
}

pub fn r_trace_with(traj: &Trajectory, form: RForm) -> Result<RTrace> {
    let mut r_values = Vec::with_capacity(traj.len());
    for i in 0..traj.len() {
        r_values.push(r_eval(traj.u(i), &traj.coeffs[i], form, traj.grid[i])?);
    }
    let norm_sq = traj.norm_sq();
    let eps = form_eps(&traj.coeffs, form);
    if let Some(e) = eps {
        if e >= 1.0 {
            return Err(Error::Precondition(format!("sup ratio {e} is not below 1")));
        }
    }
    let factor = eps.map_or(1.0, |e| (1.0 - e) / (1.0 + e));
    let quotient_variations = quotient_series(&traj.coeffs, form)
        .into_iter()
        .map(|(name, v)| (name, variation_of(&v)))
        .collect();
    Ok(RTrace {
        grid: traj.grid.clone(),
        r_values,
        lower_bound: norm_sq.iter().map(|n| factor * n).collect(),
        norm_sq,
        form,
        eps,
        quotient_variations,
    })
}

/// Outcome of the almost-monotone inequality on one pair `t1 <= t2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub t1: f64,
    pub t2: f64,
    /// `R(t2) - R(t1)`.
    pub increase: f64,
    /// Variation factor times `sup R` on `[t1, t2]`.
    pub allowance: f64,
    pub holds: bool,
}

/// Relative slack on the almost-monotone inequality.
pub const MONOTONE_SLACK: f64 = 1e-8;

/// All pairs `i < j` of a `count`-point geometric grid on `[r0, r_end]`.
pub fn geometric_pairs(r0: f64, r_end: f64, count: usize) -> Vec<(f64, f64)> {
    let pts: Vec<f64> = (0..count)
        .map(|i| r0 * (r_end / r0).powf(i as f64 / (count - 1) as f64))
        .collect();
    let mut pairs = Vec::new();
    for i in 0..count {
        for j in i + 1..count {
            pairs.push((pts[i], pts[j]));
        }
    }
    pairs
}

/// Checks `R(t2) - R(t1) <= factor * sup_[t1,t2] R` where the factor is the
/// sum of the quotient variations on `[t1, t2]` (general form) or
/// `2 (1 + eps)/(1 - eps)` times the single quotient variation.
pub fn almost_monotone_check(trace: &RTrace, traj: &Trajectory, pairs: &[(f64, f64)]) -> Vec<PairVerdict> {
    let series = quotient_series(&traj.coeffs, trace.form);
    let scale = trace.eps.map_or(1.0, |e| 2.0 * (1.0 + e) / (1.0 - e));
    pairs
        .iter()
        .map(|&(t1, t2)| {
            let (i, j) = (traj.index_of(t1), traj.index_of(t2));
            let (i, j) = (i.min(j), i.max(j));
            let var: f64 = series.iter().map(|(_, v)| variation_of(&v[i..=j])).sum();
            let sup = trace.r_values[i..=j].iter().copied().fold(0.0, f64::max);
            let increase = trace.r_values[j] - trace.r_values[i];
            let allowance = scale * var * sup;
            PairVerdict {
                t1: traj.grid[i],
                t2: traj.grid[j],
                increase,
                allowance,
                holds: increase <= allowance + MONOTONE_SLACK * sup,
            }
        })
        .collect()
}

/// One solution used to fix or test the comparability constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpotCheck {
    pub u0: [f64; 2],
    /// Smallest constant for which the two-sided bound holds on this solution.
    pub constant: f64,
    /// The solution obeys the bound with twice the basis constant.
    pub within_twice_basis: bool,
}

/// Numerical evidence that all solutions stay comparable in size on
/// `[r0, r_end]`: `|y(r0)|^2 / C <= |y(r)|^2 <= C |y(r0)|^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessCertificate {
    pub r0: f64,
    pub r_end: f64,
    /// Largest `R(r)/R(r0)` over all tested solutions.
    pub sup_r_ratio: f64,
    /// Constant valid for every tested solution.
    pub c: f64,
    /// Constant from the two basis solutions alone.
    pub c_basis: f64,
    pub spot_checks: Vec<SpotCheck>,
    pub gating: Vec<HypothesisReport>,
    pub certified: bool,
}

/// Number of random initial directions in a certificate.
pub const RANDOM_DIRECTIONS: usize = 8;

fn solution_constant(traj: &Trajectory) -> f64 {
    let n = traj.norm_sq();
    let n0 = n[0];
    n.iter().fold(1.0f64, |c, x| c.max(x / n0).max(n0 / x))
}

/// Solves the basis and [`RANDOM_DIRECTIONS`] seeded random directions on
/// `[r0, r_end]` and reports the comparability constant. Refused when the
/// channel conditions (C2)/(C3) are reported violated.
pub fn comparability_constant<C: Channel>(
    channel: &C,
    r0: f64,
    r_end: f64,
    cfg: &SolveConfig,
    opts: &CheckOptions,
    seed: u64,
) -> Result<BoundednessCertificate> {
    let gating = hypotheses::check_prop2(channel, opts);
    if let Some(bad) = gating
        .iter()
        .find(|r| r.condition_id != "C1" && r.verdict == Verdict::Violated)
    {
        return Err(Error::CertificateRefused(format!("{} violated", bad.condition_id)));
    }
    let cfg = SolveConfig {
        r_start: r0,
        r_end,
        ..*cfg
    };
    let form: RForm = channel.structure().into();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dirs = vec![[1.0, 0.0], [0.0, 1.0]];
    for _ in 0..RANDOM_DIRECTIONS {
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        dirs.push([phi.cos(), phi.sin()]);
    }
    let mut consts = Vec::with_capacity(dirs.len());
    let mut sup_ratio = 0.0f64;
    for u0 in &dirs {
        let traj = solver::integrate_cartesian(channel, *u0, &cfg)?;
        if traj.status != solver::SolveStatus::Completed {
            return Err(Error::StepUnderflow { r: *traj.grid.last().unwrap_or(&r0) });
        }
        let trace = r_trace_with(&traj, form)?;
        let r_start = trace.r_values[0];
        sup_ratio = sup_ratio.max(trace.r_values.iter().fold(0.0f64, |a, x| a.max(x / r_start)));
        consts.push(solution_constant(&traj));
    }
    let c_basis = consts[0].max(consts[1]);
    let spot_checks = dirs
        .iter()
        .zip(&consts)
        .skip(2)
        .map(|(u0, c)| SpotCheck {
            u0: *u0,
            constant: *c,
            within_twice_basis: *c <= 2.0 * c_basis * (1.0 + 1e-9),
        })
        .collect::<Vec<_>>();
    let c = consts.iter().copied().fold(1.0, f64::max);
    let certified = c.is_finite() && spot_checks.iter().all(|s| s.within_twice_basis);
    Ok(BoundednessCertificate {
        r0,
        r_end,
        sup_r_ratio: sup_ratio,
        c,
        c_basis,
        spot_checks,
        gating,
        certified,
    })
}

/// First radius `r >= from` (on a 0.05 lattice, up to `limit`) from which
/// `W/Q <= ratio` with `Q > 0`.
pub fn dominance_radius<C: Channel>(channel: &C, from: f64, ratio: f64, limit: f64) -> Option<f64> {
    let ok = |r: f64| {
        let c = channel.at(r);
        c.q > 0.0 && c.w() <= ratio * c.q
    };
    (0..)
        .map(|i| from + 0.05 * i as f64)
        .take_while(|r| *r <= limit)
        .find(|r| ok(*r))
}
