//! Integration of the channel system in Cartesian and Prüfer coordinates.
//!
//! With `u = rho (cos theta, sin theta)` the system becomes
//!
//! ```text
//! theta'    = Q + M cos 2theta + L sin 2theta
//! (ln rho)' = M sin 2theta - L cos 2theta
//! ```
//!
//! so `theta'` always lies in `[Q - W, Q + W]`. Outputs are produced on a
//! fixed stride shared by every solve with the same configuration, which lets
//! Wronskians and quadratures combine trajectories without interpolation.

mod dop853;
mod tableau;

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::coefficients::{Channel, ChannelPoint};
use crate::error::{Error, Result};
use crate::quadrature;

use dop853::{Accepted, ErrorScale, Outcome, Tolerances};

/// Tolerances, range and output stride of one solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub r_start: f64,
    pub r_end: f64,
    /// Output spacing in r.
    pub stride: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            rtol: 1e-12,
            atol: 1e-14,
            max_step: f64::INFINITY,
            r_start: 1.0,
            r_end: 200.0,
            stride: 0.05,
        }
    }
}

impl SolveConfig {
    pub fn range(r_start: f64, r_end: f64) -> Self {
        SolveConfig {
            r_start,
            r_end,
            ..SolveConfig::default()
        }
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn with_stride(mut self, stride: f64) -> Self {
        self.stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| x > 0.0 && x < 1.0;
        if !unit(self.rtol) || !unit(self.atol) {
            return Err(Error::InvalidConfig("tolerances must lie in (0, 1)".into()));
        }
        if !(self.r_start > 0.0 && self.r_start < self.r_end && self.r_end.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < r_start < r_end, got [{}, {}]",
                self.r_start, self.r_end
            )));
        }
        if !(self.stride > 0.0) || !(self.max_step > 0.0) {
            return Err(Error::InvalidConfig("stride and max_step must be positive".into()));
        }
        Ok(())
    }

    fn tolerances(&self, scale: ErrorScale) -> Tolerances {
        Tolerances {
            rtol: self.rtol,
            atol: self.atol,
            max_step: self.max_step,
            scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Cartesian,
    Pruefer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Completed,
    /// The trajectory stops early where the step size underflowed.
    StepUnderflow,
}

/// Accepted-step diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Accepted steps checked against the phase envelope.
    pub envelope_checked: usize,
    /// Largest excursion of `theta'` outside `[Q - W, Q + W]`, relative to `1 + |Q| + W`.
    pub envelope_excess: f64,
}

/// Relative excursion tolerated by the phase-envelope check (rounding only).
pub const ENVELOPE_TOL: f64 = 1e-12;

/// A solved path on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub rho: Vec<f64>,
    pub theta: Vec<f64>,
    /// `theta'` at the grid points.
    pub dtheta: Vec<f64>,
    pub coeffs: Vec<ChannelPoint>,
    pub mode: Mode,
    pub stats: StepStats,
    pub status: SolveStatus,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn norm_sq(&self) -> Vec<f64> {
        self.u1.iter().zip(&self.u2).map(|(a, b)| a * a + b * b).collect()
    }

    pub fn u(&self, i: usize) -> [f64; 2] {
        [self.u1[i], self.u2[i]]
    }

    /// Index of the grid point nearest to `r`.
    pub fn index_of(&self, r: f64) -> usize {
        let i = self.grid.partition_point(|x| *x < r);
        if i == 0 {
            0
        } else if i >= self.grid.len() {
            self.grid.len() - 1
        } else if (self.grid[i] - r).abs() < (r - self.grid[i - 1]).abs() {
            i
        } else {
            i - 1
        }
    }

    /// Writes columns `r,u1,u2,rho,theta,Q,M,L,W`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "r,u1,u2,rho,theta,Q,M,L,W")?;
        for i in 0..self.len() {
            let c = self.coeffs[i];
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                self.grid[i],
                self.u1[i],
                self.u2[i],
                self.rho[i],
                self.theta[i],
                c.q,
                c.m,
                c.l,
                c.w()
            )?;
        }
        Ok(())
    }
}

struct Recorder<'c, C: Channel> {
    channel: &'c C,
    grid: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    rho: Vec<f64>,
    theta: Vec<f64>,
    dtheta: Vec<f64>,
    coeffs: Vec<ChannelPoint>,
    stats: StepStats,
    last_theta: f64,
    last_dtheta: f64,
    last_t: f64,
}

impl<'c, C: Channel> Recorder<'c, C> {
    fn new(channel: &'c C, theta0: f64) -> Self {
        Recorder {
            channel,
            grid: Vec::new(),
            u1: Vec::new(),
            u2: Vec::new(),
            rho: Vec::new(),
            theta: Vec::new(),
            dtheta: Vec::new(),
            coeffs: Vec::new(),
            stats: StepStats::default(),
            last_theta: theta0,
            last_dtheta: 0.0,
            last_t: f64::NAN,
        }
    }

    fn envelope(&mut self, c: &ChannelPoint, dtheta: f64) {
        let w = c.w();
        let excess = (dtheta - (c.q + w)).max((c.q - w) - dtheta).max(0.0);
        self.stats.envelope_checked += 1;
        self.stats.envelope_excess = self
            .stats
            .envelope_excess
            .max(excess / (1.0 + c.q.abs() + w));
    }

    fn push(&mut self, t: f64, u: [f64; 2], rho: f64, theta: f64, dtheta: f64, c: ChannelPoint) {
        self.grid.push(t);
        self.u1.push(u[0]);
        self.u2.push(u[1]);
        self.rho.push(rho);
        self.theta.push(theta);
        self.dtheta.push(dtheta);
        self.coeffs.push(c);
    }

    fn cartesian(&mut self, a: Accepted<'_>) {
        let c = self.channel.at(a.t);
        let (u1, u2) = (a.y[0], a.y[1]);
        let n2 = u1 * u1 + u2 * u2;
        let dtheta = (u1 * a.f[1] - u2 * a.f[0]) / n2;
        let angle = u2.atan2(u1);
        let theta = if self.last_t.is_nan() {
            angle
        } else {
            // Branch nearest to the trapezoidal phase prediction.
            let predicted = self.last_theta + 0.5 * (a.t - self.last_t) * (dtheta + self.last_dtheta);
            angle + 2.0 * PI * ((predicted - angle) / (2.0 * PI)).round()
        };
        self.last_theta = theta;
        self.last_dtheta = dtheta;
        self.last_t = a.t;
        self.envelope(&c, dtheta);
        if a.is_output {
            self.push(a.t, [u1, u2], n2.sqrt(), theta, dtheta, c);
        }
    }

    fn pruefer(&mut self, a: Accepted<'_>) {
        let c = self.channel.at(a.t);
        let (log_rho, theta) = (a.y[0], a.y[1]);
        let dtheta = a.f[1];
        self.envelope(&c, dtheta);
        if a.is_output {
            let rho = log_rho.exp();
            let (s, co) = theta.sin_cos();
            self.push(a.t, [rho * co, rho * s], rho, theta, dtheta, c);
        }
    }

    fn finish(mut self, mode: Mode, outcome: Outcome, counters: dop853::Counters) -> Trajectory {
        if self.grid.len() > 1 && self.grid[0] > self.grid[1] {
            for v in [
                &mut self.grid,
                &mut self.u1,
                &mut self.u2,
                &mut self.rho,
                &mut self.theta,
                &mut self.dtheta,
            ] {
                v.reverse();
            }
            self.coeffs.reverse();
        }
        self.stats.accepted = counters.accepted;
        self.stats.rejected = counters.rejected;
        Trajectory {
            grid: self.grid,
            u1: self.u1,
            u2: self.u2,
            rho: self.rho,
            theta: self.theta,
            dtheta: self.dtheta,
            coeffs: self.coeffs,
            mode,
            stats: self.stats,
            status: match outcome {
                Outcome::Completed => SolveStatus::Completed,
                Outcome::Underflow => SolveStatus::StepUnderflow,
            },
        }
    }
}

/// Cartesian solve on `[cfg.r_start, cfg.r_end]` from `u0` at `r_start`.
pub fn integrate_cartesian<C: Channel>(channel: &C, u0: [f64; 2], cfg: &SolveConfig) -> Result<Trajectory> {
    cfg.validate()?;
    integrate_cartesian_between(channel, u0, cfg.r_start, cfg.r_end, cfg)
}

/// Cartesian solve from `r_from` to `r_to` (either direction); the returned
/// grid is ascending. Only the tolerances and stride of `cfg` are used.
pub fn integrate_cartesian_between<C: Channel>(
    channel: &C,
    u0: [f64; 2],
    r_from: f64,
    r_to: f64,
    cfg: &SolveConfig,
) -> Result<Trajectory> {
    check_span(r_from, r_to)?;
    if u0 == [0.0, 0.0] || !u0.iter().all(|x| x.is_finite()) {
        return Err(Error::Precondition("initial vector must be nonzero and finite".into()));
    }
    let mut rec = Recorder::new(channel, u0[1].atan2(u0[0]));
    let (outcome, counters) = dop853::integrate(
        |t, y| channel.at(t).rhs(*y),
        r_from,
        r_to,
        u0,
        cfg.stride,
        &cfg.tolerances(ErrorScale::Norm),
        |a| rec.cartesian(a),
    );
    Ok(rec.finish(Mode::Cartesian, outcome, counters))
}

/// Prüfer solve on `[cfg.r_start, cfg.r_end]` from `(rho0, theta0)`.
pub fn integrate_pruefer<C: Channel>(channel: &C, rho0: f64, theta0: f64, cfg: &SolveConfig) -> Result<Trajectory> {
    cfg.validate()?;
    integrate_pruefer_between(channel, rho0, theta0, cfg.r_start, cfg.r_end, cfg)
}

/// Prüfer solve from `r_from` to `r_to` (either direction); grid ascending.
pub fn integrate_pruefer_between<C: Channel>(
    channel: &C,
    rho0: f64,
    theta0: f64,
    r_from: f64,
    r_to: f64,
    cfg: &SolveConfig,
) -> Result<Trajectory> {
    check_span(r_from, r_to)?;
    if !(rho0 > 0.0 && rho0.is_finite()) || !theta0.is_finite() {
        return Err(Error::Precondition("rho0 must be positive and theta0 finite".into()));
    }
    let mut rec = Recorder::new(channel, theta0);
    let (outcome, counters) = dop853::integrate(
        |t, y| {
            let c = channel.at(t);
            [c.log_rho_prime(y[1]), c.theta_prime(y[1])]
        },
        r_from,
        r_to,
        [rho0.ln(), theta0],
        cfg.stride,
        &cfg.tolerances(ErrorScale::Absolute),
        |a| rec.pruefer(a),
    );
    Ok(rec.finish(Mode::Pruefer, outcome, counters))
}

/// Phase-only solve from `r_from` to `r_to`; returns the final angle. The
/// phase equation does not involve `rho`.
pub fn phase_at<C: Channel>(channel: &C, theta0: f64, r_from: f64, r_to: f64, cfg: &SolveConfig) -> Result<f64> {
    check_span(r_from, r_to)?;
    let mut last = (r_from, theta0);
    let (outcome, _) = dop853::integrate(
        |t, y| [0.0, channel.at(t).theta_prime(y[1])],
        r_from,
        r_to,
        [0.0, theta0],
        (r_to - r_from).abs(),
        &cfg.tolerances(ErrorScale::Absolute),
        |a| last = (a.t, a.y[1]),
    );
    match outcome {
        Outcome::Completed => Ok(last.1),
        Outcome::Underflow => Err(Error::StepUnderflow { r: last.0 }),
    }
}

fn check_span(r_from: f64, r_to: f64) -> Result<()> {
    crate::coefficients::check_radius(r_from)?;
    crate::coefficients::check_radius(r_to)?;
    Ok(())
}

/// `u1^(1) u2^(2) - u2^(1) u1^(2)` on the common grid.
pub fn wronskian(t1: &Trajectory, t2: &Trajectory) -> Result<Vec<f64>> {
    if t1.grid != t2.grid {
        return Err(Error::GridMismatch(format!(
            "grids of length {} and {} differ",
            t1.len(),
            t2.len()
        )));
    }
    Ok((0..t1.len())
        .map(|i| t1.u1[i] * t2.u2[i] - t1.u2[i] * t2.u1[i])
        .collect())
}

/// Largest relative deviation of a Wronskian from its initial value.
pub fn wronskian_drift(w: &[f64]) -> f64 {
    let w0 = w[0];
    w.iter().fold(0.0f64, |d, x| d.max((x - w0).abs())) / w0.abs()
}

/// Default dominance of `|k|/r0` over `|Q +- M|` required near the origin.
pub const FROBENIUS_FACTOR: f64 = 1e3;

/// Initial data at `r0` for the solution recessive at the origin, normalised
/// to unit length. The leading behaviour is `r^|k|` in the component that
/// the angular term leaves unforced, with the first correction in the other.
pub fn frobenius_init<C: Channel>(channel: &C, k: i32, r0: f64, factor: f64) -> Result<[f64; 2]> {
    if k == 0 {
        return Err(Error::ZeroAngularNumber);
    }
    crate::coefficients::check_radius(r0)?;
    let c = channel.at(r0);
    let kk = k.unsigned_abs() as f64;
    let forcing = (c.q + c.m).abs().max((c.q - c.m).abs());
    if kk / r0 < factor * forcing {
        return Err(Error::FrobeniusRadius {
            r0,
            suggested: 0.5 * kk / (factor * forcing),
        });
    }
    let lead = r0.powf(kk);
    let u = if k > 0 {
        [-(c.q - c.m) * r0 * lead / (2.0 * kk + 1.0), lead]
    } else {
        [lead, (c.q + c.m) * r0 * lead / (2.0 * kk + 1.0)]
    };
    let n = u[0].hypot(u[1]);
    Ok([u[0] / n, u[1] / n])
}

/// A trajectory re-indexed by `s(r) = int_{r_0}^r Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct STrajectory {
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    pub theta: Vec<f64>,
    /// `dTheta/ds = theta'(r) / Q(r)`.
    pub dtheta_ds: Vec<f64>,
    pub l_over_q: Vec<f64>,
}

/// Maps `r` to `s` by cumulative Gauss–Legendre quadrature of `Q` between
/// grid points; `Theta(s(r)) = theta(r)`.
pub fn s_reparam<C: Channel>(channel: &C, traj: &Trajectory) -> Result<STrajectory> {
    if let Some((r, _)) = traj
        .grid
        .iter()
        .zip(&traj.coeffs)
        .find(|(_, c)| !(c.q > 0.0))
    {
        return Err(Error::NonpositivePotential { r: *r });
    }
    let s = quadrature::cumulative(|r| channel.at(r).q, &traj.grid);
    if let Some(i) = s.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::NonpositivePotential { r: traj.grid[i] });
    }
    Ok(STrajectory {
        r: traj.grid.clone(),
        s,
        theta: traj.theta.clone(),
        dtheta_ds: traj.dtheta.iter().zip(&traj.coeffs).map(|(d, c)| d / c.q).collect(),
        l_over_q: traj.coeffs.iter().map(|c| c.l / c.q).collect(),
    })
}
