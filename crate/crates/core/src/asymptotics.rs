//! WKB reference solutions for `m == q`, `lambda < 0`, and window-wise
//! comparison with integrated solutions.
//!
//! The real fundamental pair is
//!
//! ```text
//! c1 = (q^(-1/4) cos Phi,  a(r) sin Phi)
//! c2 = (q^(-1/4) sin Phi, -a(r) cos Phi)
//! ```
//!
//! with `Phi(r) = int_1^r sqrt(lambda^2 - 2 lambda q)` and the second
//! amplitude `a = sqrt(2/Lambda) q^(1/4)` (leading form) or
//! `a = q^(-1/4) Phi'/Lambda` (phase-matched form). Both agree as `q -> inf`.

use serde::{Deserialize, Serialize};

use crate::coefficients::{Channel, CoefficientModel};
use crate::error::{Error, Result};
use crate::quadrature::{cumulative, gauss_legendre};
use crate::solver::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Amplitude {
    #[default]
    Leading,
    PhaseMatched,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WkbReference {
    pub lambda: f64,
    pub amplitude: Amplitude,
    pub grid: Vec<f64>,
    pub phase: Vec<f64>,
    pub col1: Vec<[f64; 2]>,
    pub col2: Vec<[f64; 2]>,
}

/// Tabulates the reference pair on `grid` (ascending).
pub fn wkb_reference(model: &CoefficientModel, lambda: f64, grid: &[f64], amplitude: Amplitude) -> Result<WkbReference> {
    if !(lambda < 0.0) {
        return Err(Error::Precondition(format!("WKB reference needs lambda < 0, got {lambda}")));
    }
    if grid.is_empty() || !grid.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::InvalidSamples("grid must be nonempty and strictly ascending".into()));
    }
    for &r in grid {
        crate::coefficients::check_radius(r)?;
        if !(model.q.value(r) > 0.0) {
            return Err(Error::NonpositivePotential { r });
        }
    }
    let big = -lambda;
    let omega = |r: f64| (lambda * lambda - 2.0 * lambda * model.q.value(r)).sqrt();
    // Offset from 1 to grid[0], split into unit-sized pieces.
    let r0 = grid[0];
    let pieces = ((r0 - 1.0).abs().ceil() as usize).max(1) * 8;
    let h = (r0 - 1.0) / pieces as f64;
    let offset: f64 = (0..pieces)
        .map(|i| gauss_legendre(omega, 1.0 + i as f64 * h, 1.0 + (i + 1) as f64 * h))
        .sum();
    let phase: Vec<f64> = cumulative(omega, grid).into_iter().map(|p| p + offset).collect();
    let mut col1 = Vec::with_capacity(grid.len());
    let mut col2 = Vec::with_capacity(grid.len());
    for (&r, &p) in grid.iter().zip(&phase) {
        let q = model.q.value(r);
        let a1 = q.powf(-0.25);
        let a2 = match amplitude {
            Amplitude::Leading => (2.0 / big).sqrt() * q.powf(0.25),
            Amplitude::PhaseMatched => a1 * omega(r) / big,
        };
        let (s, c) = p.sin_cos();
        col1.push([a1 * c, a2 * s]);
        col2.push([a1 * s, -a2 * c]);
    }
    Ok(WkbReference {
        lambda,
        amplitude,
        grid: grid.to_vec(),
        phase,
        col1,
        col2,
    })
}

impl WkbReference {
    pub fn phase_increasing(&self) -> bool {
        self.phase.windows(2).all(|w| w[1] > w[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowResidual {
    pub r_lo: f64,
    pub r_hi: f64,
    pub center: f64,
    /// Relative least-squares error; `None` for skipped windows.
    pub residual: Option<f64>,
    pub coefficients: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticComparison {
    /// `+1` keeps the reference second component, `-1` flips it.
    pub sign: f64,
    /// Mean residual over the windows for `[+1, -1]`.
    pub mean_by_sign: [f64; 2],
    pub windows: Vec<WindowResidual>,
}

impl AsymptoticComparison {
    /// Writes `r_window_center,residual` rows; skipped windows are omitted.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "r_window_center,residual")?;
        for w in &self.windows {
            if let Some(r) = w.residual {
                writeln!(out, "{},{}", w.center, r)?;
            }
        }
        Ok(())
    }
}

/// Columns whose Gram determinant falls below this fraction of the squared
/// trace count as dependent.
pub const DEGENERACY_TOL: f64 = 1e-12;

fn project(u: &[[f64; 2]], c1: &[[f64; 2]], c2: &[[f64; 2]], w: &[[f64; 2]]) -> Option<(f64, [f64; 2])> {
    let dot = |a: &[[f64; 2]], b: &[[f64; 2]]| -> f64 {
        a.iter()
            .zip(b)
            .zip(w)
            .map(|((x, y), s)| s[0] * s[0] * x[0] * y[0] + s[1] * s[1] * x[1] * y[1])
            .sum()
    };
    let (g11, g12, g22) = (dot(c1, c1), dot(c1, c2), dot(c2, c2));
    let det = g11 * g22 - g12 * g12;
    if !(det > DEGENERACY_TOL * (g11 + g22).powi(2)) {
        return None;
    }
    let (b1, b2) = (dot(c1, u), dot(c2, u));
    let a = (g22 * b1 - g12 * b2) / det;
    let b = (g11 * b2 - g12 * b1) / det;
    let uu = dot(u, u);
    if uu == 0.0 {
        return Some((0.0, [0.0, 0.0]));
    }
    let err: Vec<[f64; 2]> = u
        .iter()
        .zip(c1.iter().zip(c2))
        .map(|(x, (p, q))| [x[0] - a * p[0] - b * q[0], x[1] - a * p[1] - b * q[1]])
        .collect();
    Some(((dot(&err, &err) / uu).sqrt(), [a, b]))
}

/// Projects the numeric solution on the reference span window by window.
/// Components are weighted by the inverse reference amplitudes so both carry
/// comparable weight; the residual is invariant under scaling `u`.
pub fn compare_asymptotics(traj: &Trajectory, reference: &WkbReference, windows: &[(f64, f64)]) -> Result<AsymptoticComparison> {
    if traj.grid != reference.grid {
        return Err(Error::GridMismatch(format!(
            "trajectory has {} points, reference {}",
            traj.len(),
            reference.grid.len()
        )));
    }
    let u: Vec<[f64; 2]> = (0..traj.len()).map(|i| traj.u(i)).collect();
    let weights: Vec<[f64; 2]> = reference
        .col1
        .iter()
        .zip(&reference.col2)
        .map(|(a, b)| [1.0 / a[0].hypot(b[0]), 1.0 / a[1].hypot(b[1])])
        .collect();
    let flipped: Vec<([f64; 2], [f64; 2])> = reference
        .col1
        .iter()
        .zip(&reference.col2)
        .map(|(a, b)| ([a[0], -a[1]], [b[0], -b[1]]))
        .collect();
    let (f1, f2): (Vec<[f64; 2]>, Vec<[f64; 2]>) = flipped.into_iter().unzip();
    let run = |c1: &[[f64; 2]], c2: &[[f64; 2]]| -> Vec<WindowResidual> {
        windows
            .iter()
            .map(|&(a, b)| {
                let lo = traj.grid.partition_point(|r| *r < a);
                let hi = traj.grid.partition_point(|r| *r <= b);
                let fit = (hi >= lo + 3).then(|| project(&u[lo..hi], &c1[lo..hi], &c2[lo..hi], &weights[lo..hi])).flatten();
                WindowResidual {
                    r_lo: a,
                    r_hi: b,
                    center: 0.5 * (a + b),
                    residual: fit.map(|f| f.0),
                    coefficients: fit.map_or([f64::NAN; 2], |f| f.1),
                }
            })
            .collect()
    };
    let plus = run(&reference.col1, &reference.col2);
    let minus = run(&f1, &f2);
    let mean = |ws: &[WindowResidual]| {
        let v: Vec<f64> = ws.iter().filter_map(|w| w.residual).collect();
        if v.is_empty() {
            f64::INFINITY
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let (mp, mm) = (mean(&plus), mean(&minus));
    let (sign, windows) = if mp <= mm { (1.0, plus) } else { (-1.0, minus) };
    Ok(AsymptoticComparison {
        sign,
        mean_by_sign: [mp, mm],
        windows,
    })
}

/// Windows `[T, 2T]` for `T = start, 2 start, ...` while `2T <= end`.
pub fn octave_windows(start: f64, end: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut t = start;
    while 2.0 * t <= end * (1.0 + 1e-12) {
        out.push((t, 2.0 * t));
        t *= 2.0;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderReport {
    pub stride: f64,
    /// `max |defect| / max (|lambda^2 u1| + |2 lambda q u1|)`.
    pub defect: f64,
    /// Same scale, for `u1' + (k/r) u1 - lambda u2` with `u1'` from the system.
    pub first_order_defect: f64,
    /// Same, with `u1'` from centred differences.
    pub first_order_fd_defect: f64,
}

/// Largest `h * omega` accepted for centred differencing.
pub const MAX_STEP_PHASE: f64 = 1.0;

/// Checks the second-order equation for `u1` and the first-order relation
/// on interior points of a uniform stretch of the output grid.
pub fn second_order_check(traj: &Trajectory, model: &CoefficientModel, k: i32, lambda: f64) -> Result<SecondOrderReport> {
    let n = traj.len();
    if n < 3 {
        return Err(Error::InvalidSamples("need at least three samples".into()));
    }
    model.check_mass_equals_potential(&[traj.grid[0], traj.grid[n - 1]])?;
    let channel = model.channel(k, lambda)?;
    let h = traj.grid[1] - traj.grid[0];
    let kk = k as f64 * (k as f64 + 1.0);
    let (mut worst, mut scale, mut first, mut first_fd) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 1..n - 1 {
        let (r, hl, hr) = (traj.grid[i], traj.grid[i] - traj.grid[i - 1], traj.grid[i + 1] - traj.grid[i]);
        if (hl - h).abs() > 1e-9 * h || (hr - h).abs() > 1e-9 * h {
            continue;
        }
        let q = model.q.value(r);
        let omega = (lambda * lambda - 2.0 * lambda * q).abs().sqrt() + kk.abs().sqrt() / r;
        if h * omega > MAX_STEP_PHASE {
            return Err(Error::InvalidConfig(format!(
                "stride {h} too coarse for differencing at r = {r} (h omega = {:.3})",
                h * omega
            )));
        }
        let (um, u0, up) = (traj.u1[i - 1], traj.u1[i], traj.u1[i + 1]);
        let d2 = (up - 2.0 * u0 + um) / (h * h);
        let defect = -d2 + (2.0 * lambda * q + kk / (r * r) - lambda * lambda) * u0;
        worst = worst.max(defect.abs());
        scale = scale.max((lambda * lambda * u0).abs() + (2.0 * lambda * q * u0).abs());
        let kr = k as f64 / r;
        let d1 = channel.at(r).rhs(traj.u(i))[0];
        first = first.max((d1 + kr * u0 - lambda * traj.u2[i]).abs());
        let d1_fd = (up - um) / (2.0 * h);
        first_fd = first_fd.max((d1_fd + kr * u0 - lambda * traj.u2[i]).abs());
    }
    let rel = |x: f64| if scale == 0.0 { 0.0 } else { x / scale };
    Ok(SecondOrderReport {
        stride: h,
        defect: rel(worst),
        first_order_defect: rel(first),
        first_order_fd_defect: rel(first_fd),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{ConstantChannel, Profile};
    use crate::solver::{integrate_cartesian, SolveConfig};

    fn linear() -> CoefficientModel {
        CoefficientModel::new(Profile::power(1.0, 1.0), Profile::power(1.0, 1.0)).unwrap()
    }

    #[test]
    fn linear_phase_closed_form() {
        let grid: Vec<f64> = (0..200).map(|i| 2.0 + 0.1 * i as f64).collect();
        let w = wkb_reference(&linear(), -1.0, &grid, Amplitude::Leading).unwrap();
        for (i, &r) in grid.iter().enumerate() {
            let exact = ((1.0 + 2.0 * r).powf(1.5) - 27f64.sqrt()) / 3.0;
            assert!((w.phase[i] - exact).abs() < 1e-10 * exact.max(1.0));
            assert!((w.col1[i][0] - r.powf(-0.25) * w.phase[i].cos()).abs() < 1e-14);
            assert!((w.col2[i][1] + 2f64.sqrt() * r.powf(0.25) * w.phase[i].cos()).abs() < 1e-13);
        }
        assert!(w.phase_increasing());
    }

    #[test]
    fn constant_phase_is_linear() {
        let m = CoefficientModel::new(Profile::constant(3.0), Profile::constant(3.0)).unwrap();
        let grid: Vec<f64> = (0..50).map(|i| 1.0 + 0.3 * i as f64).collect();
        let w = wkb_reference(&m, -2.0, &grid, Amplitude::Leading).unwrap();
        let slope = (4.0f64 + 12.0).sqrt();
        for (i, &r) in grid.iter().enumerate() {
            assert!((w.phase[i] - slope * (r - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_nonnegative_energy() {
        assert!(matches!(
            wkb_reference(&linear(), 0.0, &[1.0, 2.0], Amplitude::Leading),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn reference_column_has_zero_residual() {
        let grid: Vec<f64> = (0..400).map(|i| 1.0 + 0.05 * i as f64).collect();
        let w = wkb_reference(&linear(), -1.0, &grid, Amplitude::Leading).unwrap();
        let traj = synthetic(&grid, &w.col1);
        let c = compare_asymptotics(&traj, &w, &[(2.0, 5.0), (5.0, 10.0)]).unwrap();
        assert_eq!(c.sign, 1.0);
        for win in &c.windows {
            assert!(win.residual.unwrap() < 1e-14);
        }
    }

    #[test]
    fn constant_channel_in_span() {
        let (c, lambda) = (4.0, -1.5);
        let m = CoefficientModel::new(Profile::constant(c), Profile::constant(c)).unwrap();
        let ch = ConstantChannel::new(c - lambda, c, 0.0);
        let traj = integrate_cartesian(&ch, [0.3, -0.7], &SolveConfig::range(1.0, 30.0)).unwrap();
        let w = wkb_reference(&m, lambda, &traj.grid, Amplitude::PhaseMatched).unwrap();
        let cmp = compare_asymptotics(&traj, &w, &octave_windows(1.5, 30.0)).unwrap();
        for win in &cmp.windows {
            assert!(win.residual.unwrap() < 1e-6, "{win:?}");
        }
    }

    #[test]
    fn zero_trajectory_has_zero_defect() {
        let grid: Vec<f64> = (0..100).map(|i| 1.0 + 0.01 * i as f64).collect();
        let traj = synthetic(&grid, &vec![[0.0, 0.0]; grid.len()]);
        let r = second_order_check(&traj, &linear(), 1, -1.0).unwrap();
        assert_eq!(r.defect, 0.0);
    }

    #[test]
    fn coarse_stride_rejected() {
        let traj = integrate_cartesian(
            &linear().channel(1, -1.0).unwrap(),
            [1.0, 0.0],
            &SolveConfig::range(1.0, 100.0).with_stride(0.5),
        )
        .unwrap();
        assert!(matches!(second_order_check(&traj, &linear(), 1, -1.0), Err(Error::InvalidConfig(_))));
    }

    pub(crate) fn synthetic(grid: &[f64], u: &[[f64; 2]]) -> Trajectory {
        let m = linear();
        let ch = m.channel(1, -1.0).unwrap();
        let mut t = integrate_cartesian(&ch, [1.0, 0.0], &SolveConfig::range(grid[0], grid[0] + 0.1)).unwrap();
        t.grid = grid.to_vec();
        t.u1 = u.iter().map(|x| x[0]).collect();
        t.u2 = u.iter().map(|x| x[1]).collect();
        t
    }
}
