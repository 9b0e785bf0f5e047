//! Geometric window ladders and trend classification of windowed quantities.
//!
//! Statements "as r tends to infinity" are replaced by evidence gathered on
//! windows `[T, 2T]` for a geometric sequence of `T`. A quantity measured per
//! window is summarised by its fitted per-rung ratio `rho`: a convergent tail
//! integral or tail variation shrinks geometrically along the ladder, a
//! divergent one does not.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Window starts `T`; each window is `[T, 2T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladder {
    pub rungs: Vec<f64>,
    /// Minimum number of sample intervals per window.
    #[serde(default = "default_min_points")]
    pub min_points: usize,
    /// Maximum sample spacing inside a window.
    #[serde(default = "default_max_spacing")]
    pub max_spacing: f64,
}

fn default_min_points() -> usize {
    1024
}

fn default_max_spacing() -> f64 {
    0.02
}

impl Default for Ladder {
    fn default() -> Self {
        Ladder {
            rungs: vec![25.0, 50.0, 100.0, 200.0],
            min_points: default_min_points(),
            max_spacing: default_max_spacing(),
        }
    }
}

impl Ladder {
    pub fn new(rungs: Vec<f64>) -> Result<Self> {
        let ladder = Ladder {
            rungs,
            ..Ladder::default()
        };
        ladder.validate()?;
        Ok(ladder)
    }

    /// `count` rungs `start, 2 start, 4 start, ...`.
    pub fn geometric(start: f64, count: usize) -> Result<Self> {
        Ladder::new((0..count).map(|i| start * 2f64.powi(i as i32)).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.rungs.len() < 2 {
            return Err(Error::InvalidConfig("ladder needs at least two rungs".into()));
        }
        if self.rungs.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidConfig("ladder rungs must be positive".into()));
        }
        if self.rungs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig(
                "ladder rungs must be strictly increasing".into(),
            ));
        }
        if self.min_points < 2 || !(self.max_spacing > 0.0) {
            return Err(Error::InvalidConfig("ladder sampling is degenerate".into()));
        }
        Ok(())
    }

    pub fn windows(&self) -> Vec<(f64, f64)> {
        self.rungs.iter().map(|&t| (t, 2.0 * t)).collect()
    }

    /// Far end of the last window.
    pub fn end(&self) -> f64 {
        2.0 * self.rungs[self.rungs.len() - 1]
    }

    /// The ladder with every rung multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Ladder {
        Ladder {
            rungs: self.rungs.iter().map(|t| t * factor).collect(),
            ..self.clone()
        }
    }

    /// Uniform sample points of `[a, b]` at the ladder's resolution; the
    /// interval count is a multiple of 8 so the grid nests three coarsenings.
    pub fn sample(&self, a: f64, b: f64) -> Vec<f64> {
        let by_spacing = ((b - a) / self.max_spacing).ceil() as usize;
        let n = by_spacing.max(self.min_points).div_ceil(8) * 8;
        crate::quadrature::linspace(a, b, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Converged,
    Growing,
    Inconclusive,
}

/// Decision thresholds for [`classify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrendThresholds {
    /// Fitted per-rung ratio at or below which a decreasing sequence converges.
    pub converge_ratio: f64,
    /// Fitted per-rung ratio at or above which the sequence is growing.
    pub grow_ratio: f64,
    /// Overall last/first factor that flags growth regardless of the fit.
    pub grow_factor: f64,
    /// Absolute bound on the last rung for "limit is zero" checks.
    pub limit_abs: f64,
}

impl Default for TrendThresholds {
    fn default() -> Self {
        TrendThresholds {
            converge_ratio: 0.9,
            grow_ratio: 0.95,
            grow_factor: 2.0,
            limit_abs: 1e-3,
        }
    }
}

/// Trend verdict with the fitted per-rung ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendFit {
    pub trend: Trend,
    pub ratio: f64,
}

const FLOOR: f64 = 1e-300;

/// Per-rung ratio from a least-squares fit of `ln v_i` against `i`.
pub fn fitted_ratio(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let logs: Vec<f64> = values.iter().map(|v| v.abs().max(FLOOR).ln()).collect();
    let xm = (n - 1.0) / 2.0;
    let ym = logs.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in logs.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (y - ym);
        sxx += dx * dx;
    }
    (sxy / sxx).exp()
}

/// Classifies a sequence of nonnegative per-window quantities.
pub fn classify(values: &[f64], th: &TrendThresholds) -> TrendFit {
    if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
        return TrendFit {
            trend: Trend::Inconclusive,
            ratio: f64::NAN,
        };
    }
    if values.iter().all(|v| v.abs() <= FLOOR) {
        return TrendFit {
            trend: Trend::Converged,
            ratio: 0.0,
        };
    }
    let ratio = fitted_ratio(values);
    let first = values[0].abs();
    let last = values[values.len() - 1].abs();
    let trend = if ratio <= th.converge_ratio && last < first {
        Trend::Converged
    } else if ratio >= th.grow_ratio || last >= th.grow_factor * first.max(FLOOR) {
        Trend::Growing
    } else {
        Trend::Inconclusive
    };
    TrendFit { trend, ratio }
}

/// Classifies a "limit is zero" sequence: converging and small on the last rung.
pub fn classify_limit_zero(values: &[f64], th: &TrendThresholds) -> TrendFit {
    let mut fit = classify(values, th);
    if fit.trend == Trend::Converged && values[values.len() - 1].abs() >= th.limit_abs {
        fit.trend = Trend::Inconclusive;
    }
    fit
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_windows() {
        let th = TrendThresholds::default();
        let windows = |a: f64| -> Vec<f64> {
            [25.0f64, 50.0, 100.0, 200.0]
                .iter()
                .map(|t| t.powf(a))
                .collect()
        };
        let c = classify(&windows(-1.0), &th);
        assert_eq!(c.trend, Trend::Converged);
        assert!((c.ratio - 0.5).abs() < 1e-12);
        assert_eq!(classify(&windows(0.0), &th).trend, Trend::Growing);
        assert_eq!(classify(&windows(0.5), &th).trend, Trend::Growing);
        assert_eq!(classify(&windows(-0.1), &th).trend, Trend::Inconclusive);
    }

    #[test]
    fn zeros_converge() {
        let c = classify(&[0.0; 4], &TrendThresholds::default());
        assert_eq!(c.trend, Trend::Converged);
    }

    #[test]
    fn limit_zero_needs_small_tail() {
        let th = TrendThresholds::default();
        assert_eq!(classify_limit_zero(&[1.0, 0.5, 0.25, 0.125], &th).trend, Trend::Inconclusive);
        assert_eq!(classify_limit_zero(&[1e-2, 1e-3, 1e-4, 1e-5], &th).trend, Trend::Converged);
    }

    #[test]
    fn ladder_sampling_resolution() {
        let ladder = Ladder::default();
        assert_eq!(ladder.sample(25.0, 50.0).len(), 1257);
        assert_eq!(ladder.sample(0.0, 1.0).len(), 1025);
        assert!(Ladder::new(vec![3.0, 2.0]).is_err());
        assert_eq!(Ladder::geometric(25.0, 4).unwrap().rungs, Ladder::default().rungs);
    }
}
