//! Adaptive explicit Runge–Kutta 8(5,3) stepper for two-dimensional systems.
//!
//! Steps are clipped so that every output point of the fixed stride is the
//! end of an accepted step; no interpolation is involved in the output.

use super::tableau::{A, B, C, E3, E5, STAGES};

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const ERROR_EXPONENT: f64 = -1.0 / 8.0;
/// A step reaching within this factor of the next output is stretched to it.
const STRETCH: f64 = 1.01;

pub(crate) type State = [f64; 2];

/// How the per-component error scale is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ErrorScale {
    /// `atol + rtol * |y|_2`, shared by both components.
    Norm,
    /// `atol + rtol`, for unwrapped angles and logarithms.
    Absolute,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub scale: ErrorScale,
}

/// Per-step callback payload: time, state, derivative at the accepted point.
pub(crate) struct Accepted<'a> {
    pub t: f64,
    pub y: &'a State,
    pub f: &'a State,
    pub is_output: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Completed,
    /// The step size fell below the resolution of `t`.
    Underflow,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Counters {
    pub accepted: usize,
    pub rejected: usize,
}

fn scale_of(kind: ErrorScale, tol: &Tolerances, y: &State, y_new: &State) -> f64 {
    match kind {
        ErrorScale::Norm => {
            let n = y[0].hypot(y[1]).max(y_new[0].hypot(y_new[1]));
            tol.atol + tol.rtol * n
        }
        ErrorScale::Absolute => tol.atol + tol.rtol,
    }
}

fn rms(v: &State, scale: f64) -> f64 {
    ((v[0] / scale).powi(2) + (v[1] / scale).powi(2)).sqrt() / std::f64::consts::SQRT_2
}

fn initial_step<F: Fn(f64, &State) -> State>(f: &F, t0: f64, y0: &State, f0: &State, dir: f64, tol: &Tolerances) -> f64 {
    let scale = scale_of(tol.scale, tol, y0, y0);
    let d0 = rms(y0, scale);
    let d1 = rms(f0, scale);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1 = [y0[0] + dir * h0 * f0[0], y0[1] + dir * h0 * f0[1]];
    let f1 = f(t0 + dir * h0, &y1);
    let d2 = rms(&[f1[0] - f0[0], f1[1] - f0[1]], scale) / h0;
    let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 8.0)
    };
    (100.0 * h0).min(h1).min(tol.max_step)
}

/// One Runge–Kutta step; returns the new state, its derivative and the
/// scaled error norm.
fn rk_step<F: Fn(f64, &State) -> State>(
    f: &F,
    t: f64,
    y: &State,
    fy: &State,
    h: f64,
    tol: &Tolerances,
) -> (State, State, f64) {
    let mut k = [[0.0; 2]; STAGES + 1];
    k[0] = *fy;
    for s in 1..STAGES {
        let mut dy = [0.0; 2];
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                dy[0] += a * kj[0];
                dy[1] += a * kj[1];
            }
        }
        k[s] = f(t + C[s] * h, &[y[0] + h * dy[0], y[1] + h * dy[1]]);
    }
    let mut acc = [0.0; 2];
    for (b, ks) in B.iter().zip(k.iter()) {
        acc[0] += b * ks[0];
        acc[1] += b * ks[1];
    }
    let y_new = [y[0] + h * acc[0], y[1] + h * acc[1]];
    let f_new = f(t + h, &y_new);
    k[STAGES] = f_new;

    let scale = scale_of(tol.scale, tol, y, &y_new);
    let (mut e5, mut e3) = ([0.0; 2], [0.0; 2]);
    for (i, ks) in k.iter().enumerate() {
        e5[0] += E5[i] * ks[0];
        e5[1] += E5[i] * ks[1];
        e3[0] += E3[i] * ks[0];
        e3[1] += E3[i] * ks[1];
    }
    let n5 = (e5[0] / scale).powi(2) + (e5[1] / scale).powi(2);
    let n3 = (e3[0] / scale).powi(2) + (e3[1] / scale).powi(2);
    let norm = if n5 == 0.0 && n3 == 0.0 {
        0.0
    } else {
        h.abs() * n5 / ((n5 + 0.01 * n3) * 2.0).sqrt()
    };
    (y_new, f_new, norm)
}

/// Integrates from `t0` to `t1` (either direction), invoking `on_step` at the
/// initial point and after every accepted step.
pub(crate) fn integrate<F, G>(
    f: F,
    t0: f64,
    t1: f64,
    y0: State,
    stride: f64,
    tol: &Tolerances,
    mut on_step: G,
) -> (Outcome, Counters)
where
    F: Fn(f64, &State) -> State,
    G: FnMut(Accepted<'_>),
{
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let n_out = ((span / stride) - 1e-9).ceil().max(1.0) as usize;
    let out_at = |i: usize| if i >= n_out { t1 } else { t0 + dir * stride * i as f64 };

    let mut counters = Counters::default();
    let mut t = t0;
    let mut y = y0;
    let mut fy = f(t, &y);
    on_step(Accepted {
        t,
        y: &y,
        f: &fy,
        is_output: true,
    });
    if span == 0.0 {
        return (Outcome::Completed, counters);
    }
    let mut h_prop = initial_step(&f, t0, &y0, &fy, dir, tol);
    let mut next = 1usize;
    while next <= n_out {
        let target = out_at(next);
        let mut rejected_here = false;
        loop {
            let dist = (target - t).abs();
            let resolution = 10.0 * f64::EPSILON * t.abs().max(target.abs()).max(1.0);
            if dist <= resolution {
                // Remainder below the resolution of t: the target is reached.
                t = target;
                on_step(Accepted {
                    t,
                    y: &y,
                    f: &fy,
                    is_output: true,
                });
                break;
            }
            let h_try = h_prop.min(tol.max_step);
            let clipped = h_try * STRETCH >= dist && dist <= tol.max_step;
            // Exactly representable step: t + dir * h_abs is the new label.
            let h_abs = if clipped { dist } else { ((t + dir * h_try) - t).abs() };
            if h_abs < resolution {
                return (Outcome::Underflow, counters);
            }
            let (y_new, f_new, norm) = rk_step(&f, t, &y, &fy, dir * h_abs, tol);
            if norm.is_finite() && norm < 1.0 {
                let mut factor = if norm == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * norm.powf(ERROR_EXPONENT)).min(MAX_FACTOR)
                };
                if rejected_here {
                    factor = factor.min(1.0);
                    rejected_here = false;
                }
                h_prop = if clipped {
                    h_prop.max(h_abs * factor)
                } else {
                    h_abs * factor
                };
                t = if clipped { target } else { t + dir * h_abs };
                y = y_new;
                fy = f_new;
                counters.accepted += 1;
                on_step(Accepted {
                    t,
                    y: &y,
                    f: &fy,
                    is_output: clipped,
                });
                if clipped {
                    break;
                }
            } else {
                counters.rejected += 1;
                rejected_here = true;
                let shrink = if norm.is_finite() {
                    (SAFETY * norm.powf(ERROR_EXPONENT)).max(MIN_FACTOR)
                } else {
                    MIN_FACTOR
                };
                h_prop = h_abs * shrink;
            }
        }
        next += 1;
    }
    (Outcome::Completed, counters)
}
