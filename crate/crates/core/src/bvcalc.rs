//! Bounded-variation calculus on sample grids.
//!
//! The grid variation `sum |f(x_j) - f(x_{j-1})|` is a lower bound for the
//! true variation and is nondecreasing under refinement. Membership in
//! `BV(., inf)` is undecidable from finite data, so tail statements are
//! reported as windowed variations together with a trend verdict.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::ladder::{self, Ladder, Trend, TrendThresholds};
use crate::quadrature::{linspace, trapezoid};

/// Samples of a function on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Vec<f64>,
    values: Vec<f64>,
    derivative: Option<Vec<f64>>,
}

impl SampledFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::InvalidSamples("need at least two samples".into()));
        }
        if grid.len() != values.len() {
            return Err(Error::InvalidSamples(format!(
                "{} grid points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSamples(
                "grid must be strictly increasing".into(),
            ));
        }
        if values.iter().chain(&grid).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSamples("non-finite sample".into()));
        }
        Ok(SampledFunction {
            grid,
            values,
            derivative: None,
        })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: Vec<f64>, f: F) -> Result<Self> {
        let values = grid.iter().map(|&x| f(x)).collect();
        SampledFunction::new(grid, values)
    }

    /// Attaches derivative samples on the same grid.
    pub fn with_derivative(mut self, d: Vec<f64>) -> Result<Self> {
        if d.len() != self.grid.len() {
            return Err(Error::InvalidSamples(
                "derivative length differs from grid".into(),
            ));
        }
        self.derivative = Some(d);
        Ok(self)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivative(&self) -> Option<&[f64]> {
        self.derivative.as_deref()
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn same_grid(&self, other: &SampledFunction) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch("functions are sampled on different grids".into()))
        }
    }
}

/// Grid variation of `f`.
pub fn variation(f: &SampledFunction) -> f64 {
    variation_of(&f.values)
}

/// Grid variation of a value sequence.
pub fn variation_of(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Canonical Jordan decomposition `f = g_plus - g_minus` with
/// `g_plus(a) = f(a)`, `g_minus(a) = 0`, both nondecreasing.
pub fn jordan_decompose(f: &SampledFunction) -> (SampledFunction, SampledFunction) {
    let n = f.values.len();
    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    let (mut p, mut m) = (f.values[0], 0.0);
    plus.push(p);
    minus.push(m);
    for w in f.values.windows(2) {
        let d = w[1] - w[0];
        if d > 0.0 {
            p += d;
        } else {
            m -= d;
        }
        plus.push(p);
        minus.push(m);
    }
    let wrap = |values| SampledFunction {
        grid: f.grid.clone(),
        values,
        derivative: None,
    };
    (wrap(plus), wrap(minus))
}

/// Both sides of `Var(fg) <= int |f' g| + sup|f| Var(g)` on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductBound {
    pub lhs: f64,
    pub rhs: f64,
    pub integral: f64,
    pub sup_f: f64,
    pub var_g: f64,
    /// Quadrature error allowance from a half-resolution comparison.
    pub allowance: f64,
    pub holds: bool,
}

/// Relative slack on the product and quotient inequalities.
pub const BOUND_TOL: f64 = 1e-6;

pub fn check_product_bound(f: &SampledFunction, g: &SampledFunction) -> Result<ProductBound> {
    f.same_grid(g)?;
    let df = f.derivative().ok_or(Error::MissingDerivative)?;
    let fg: Vec<f64> = f.values.iter().zip(&g.values).map(|(a, b)| a * b).collect();
    let lhs = variation_of(&fg);
    let integrand: Vec<f64> = df.iter().zip(&g.values).map(|(d, v)| (d * v).abs()).collect();
    let integral = trapezoid(&f.grid, &integrand);
    let coarse_x: Vec<f64> = f.grid.iter().step_by(2).copied().collect();
    let coarse_y: Vec<f64> = integrand.iter().step_by(2).copied().collect();
    let coarse = if (f.grid.len() - 1).is_multiple_of(2) {
        trapezoid(&coarse_x, &coarse_y)
    } else {
        let n = f.grid.len();
        trapezoid(&coarse_x, &coarse_y)
            + trapezoid(&f.grid[n - 2..], &integrand[n - 2..])
    };
    let sup_f = f.sup_abs();
    let var_g = variation(g);
    let rhs = integral + sup_f * var_g;
    let allowance = 2.0 * (integral - coarse).abs();
    let holds = lhs <= rhs * (1.0 + BOUND_TOL) + allowance;
    Ok(ProductBound {
        lhs,
        rhs,
        integral,
        sup_f,
        var_g,
        allowance,
        holds,
    })
}

/// `(1-eps)^2 Var(f/(g-f)) <= Var(f/g) <= (1+eps)^2 Var(f/(g-f))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuotientBounds {
    pub eps: f64,
    pub var_fg: f64,
    pub var_f_over_g_minus_f: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
    pub holds: bool,
}

pub fn check_quotient_bounds(f: &SampledFunction, g: &SampledFunction) -> Result<QuotientBounds> {
    f.same_grid(g)?;
    if let Some(i) = g.values.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Precondition(format!(
            "g must be positive; g({}) = {}",
            g.grid[i], g.values[i]
        )));
    }
    let eps = f
        .values
        .iter()
        .zip(&g.values)
        .fold(0.0f64, |e, (a, b)| e.max(a.abs() / b));
    if eps >= 1.0 {
        return Err(Error::Precondition(format!(
            "sup |f|/g = {eps} is not below 1"
        )));
    }
    let q1: Vec<f64> = f.values.iter().zip(&g.values).map(|(a, b)| a / b).collect();
    let q2: Vec<f64> = f.values.iter().zip(&g.values).map(|(a, b)| a / (b - a)).collect();
    let var_fg = variation_of(&q1);
    let var_q2 = variation_of(&q2);
    let slack = 1e-12 * var_fg.max(var_q2);
    let lower_holds = (1.0 - eps).powi(2) * var_q2 <= var_fg * (1.0 + BOUND_TOL) + slack;
    let upper_holds = var_fg <= (1.0 + eps).powi(2) * var_q2 * (1.0 + BOUND_TOL) + slack;
    Ok(QuotientBounds {
        eps,
        var_fg,
        var_f_over_g_minus_f: var_q2,
        lower_holds,
        upper_holds,
        holds: lower_holds && upper_holds,
    })
}

/// Grid variations of `f` on uniform grids of `base, 2 base, 4 base, ...`
/// intervals (each grid contains the previous one).
pub fn dyadic_variations<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, base: usize, levels: usize) -> Vec<f64> {
    (0..levels)
        .map(|j| {
            let grid = linspace(a, b, base << j);
            let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
            variation_of(&values)
        })
        .collect()
}

/// Trend of a nondecreasing refinement sequence: converged when increments
/// shrink geometrically, growing when they do not decay or the variation
/// itself at least doubles.
pub fn refinement_trend(variations: &[f64]) -> Trend {
    if variations.len() < 3 {
        return Trend::Inconclusive;
    }
    let first = variations[0];
    let last = variations[variations.len() - 1];
    if last >= 2.0 * first && last > 0.0 {
        return Trend::Growing;
    }
    let incs: Vec<f64> = variations.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
    if incs.iter().all(|d| *d <= 1e-12 * last.max(1e-300)) {
        return Trend::Converged;
    }
    let ratio = ladder::fitted_ratio(&incs);
    if ratio <= 0.6 {
        Trend::Converged
    } else if ratio >= 0.8 {
        Trend::Growing
    } else {
        Trend::Inconclusive
    }
}

/// Windowed variation diagnostics for one function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    pub window: (f64, f64),
    pub variation: f64,
    pub refinement_trend: Trend,
    /// `(T, Var over [T, b])`.
    pub tail_windows: Vec<(f64, f64)>,
}

/// Samples `f` on `[a, b]` at the ladder resolution and reports the total
/// variation, its refinement trend, and the tail variations from each rung
/// inside the window.
pub fn variation_report<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, ladder: &Ladder) -> VariationReport {
    let grid = ladder.sample(a, b);
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let n = grid.len() - 1;
    let refinement: Vec<f64> = [8usize, 4, 2, 1]
        .iter()
        .filter(|s| n.is_multiple_of(**s) && n / *s >= 2)
        .map(|&s| {
            let sub: Vec<f64> = values.iter().step_by(s).copied().collect();
            variation_of(&sub)
        })
        .collect();
    let mut suffix = vec![0.0; values.len()];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + (values[i + 1] - values[i]).abs();
    }
    let variation = suffix[0];
    let tail_windows = ladder
        .rungs
        .iter()
        .filter(|t| **t >= a && **t < b)
        .map(|&t| {
            let i = grid.partition_point(|x| *x < t).min(n);
            (grid[i], suffix[i])
        })
        .collect();
    VariationReport {
        window: (a, b),
        variation,
        refinement_trend: refinement_trend(&refinement),
        tail_windows,
    }
}

/// Windowed variation of `f` on each ladder window `[T, 2T]`.
pub fn windowed_variations<F: Fn(f64) -> f64>(f: F, ladder: &Ladder) -> Vec<f64> {
    ladder
        .windows()
        .into_iter()
        .map(|(a, b)| {
            let values: Vec<f64> = ladder.sample(a, b).iter().map(|&x| f(x)).collect();
            variation_of(&values)
        })
        .collect()
}

/// Windowed `int |f|` on each ladder window.
pub fn windowed_integrals<F: Fn(f64) -> f64>(f: F, ladder: &Ladder) -> Vec<f64> {
    ladder
        .windows()
        .into_iter()
        .map(|(a, b)| {
            let grid = ladder.sample(a, b);
            crate::quadrature::cumulative(|x| f(x).abs(), &grid)
                .last()
                .copied()
                .unwrap_or(0.0)
        })
        .collect()
}

/// Per-lambda result of the trichotomy probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaProbe {
    pub lambda: f64,
    pub trend: Trend,
    pub ratio: f64,
    /// Variation of `m/(q - lambda)` on each window.
    pub windowed_variation: Vec<f64>,
}

/// Observed shape of the set of lambda with `m/(q - lambda)` of bounded variation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "lambda")]
pub enum TrichotomyPattern {
    Empty,
    Singleton(f64),
    All,
    /// At least two but not all probed values converge.
    Inconsistent,
    /// Some values were inconclusive and the rest do not decide the pattern.
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrichotomyReport {
    pub ladder: Vec<f64>,
    pub probes: Vec<LambdaProbe>,
    pub pattern: TrichotomyPattern,
}

/// Classifies each lambda by the windowed variation trend of `m/(q - lambda)`
/// on the ladder `tail_start * 2^i` and checks the observed set against the
/// trichotomy {empty, singleton, all}.
pub fn lambda_trichotomy_probe(
    model: &CoefficientModel,
    lambdas: &[f64],
    tail_start: f64,
    th: &TrendThresholds,
) -> Result<TrichotomyReport> {
    let ladder = Ladder::geometric(tail_start, 4)?;
    lambda_trichotomy_on(model, lambdas, &ladder, th)
}

pub fn lambda_trichotomy_on(
    model: &CoefficientModel,
    lambdas: &[f64],
    ladder: &Ladder,
    th: &TrendThresholds,
) -> Result<TrichotomyReport> {
    ladder.validate()?;
    let probes = lambdas
        .par_iter()
        .map(|&lambda| probe_one(model, lambda, ladder, th))
        .collect::<Result<Vec<_>>>()?;
    let pattern = trichotomy_pattern(&probes);
    Ok(TrichotomyReport {
        ladder: ladder.rungs.clone(),
        probes,
        pattern,
    })
}

fn probe_one(model: &CoefficientModel, lambda: f64, ladder: &Ladder, th: &TrendThresholds) -> Result<LambdaProbe> {
    let mut windowed = Vec::with_capacity(ladder.rungs.len());
    for (a, b) in ladder.windows() {
        let grid = ladder.sample(a, b);
        let mut values = Vec::with_capacity(grid.len());
        for &r in &grid {
            let den = model.q.value(r) - lambda;
            if !(den > 0.0) {
                return Err(Error::NonpositiveDenominator { what: "q - lambda", r });
            }
            values.push(model.m.value(r) / den);
        }
        windowed.push(variation_of(&values));
    }
    let fit = ladder::classify(&windowed, th);
    Ok(LambdaProbe {
        lambda,
        trend: fit.trend,
        ratio: fit.ratio,
        windowed_variation: windowed,
    })
}

fn trichotomy_pattern(probes: &[LambdaProbe]) -> TrichotomyPattern {
    let conv: Vec<f64> = probes
        .iter()
        .filter(|p| p.trend == Trend::Converged)
        .map(|p| p.lambda)
        .collect();
    let undecided = probes.iter().any(|p| p.trend == Trend::Inconclusive);
    if conv.len() >= 2 && conv.len() < probes.len() && !undecided {
        return TrichotomyPattern::Inconsistent;
    }
    if undecided {
        return TrichotomyPattern::Undetermined;
    }
    match conv.len() {
        0 => TrichotomyPattern::Empty,
        n if n == probes.len() => TrichotomyPattern::All,
        1 => TrichotomyPattern::Singleton(conv[0]),
        _ => TrichotomyPattern::Inconsistent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::Profile;
    use std::f64::consts::PI;

    #[test]
    fn sine_full_period_has_variation_four() {
        let f = SampledFunction::from_fn(linspace(0.0, 2.0 * PI, 9999), f64::sin).unwrap();
        assert!((variation(&f) - 4.0).abs() < 1e-3);
    }

    #[test]
    fn monotone_reciprocal() {
        for n in [1usize, 7, 100] {
            let f = SampledFunction::from_fn(linspace(1.0, 10.0, n), |r| 1.0 / r).unwrap();
            assert!((variation(&f) - 0.9).abs() < 1e-15);
        }
    }

    #[test]
    fn oscillator_near_origin_grows_under_refinement() {
        let v = dyadic_variations(|r| r * (1.0 / r).sin(), 1e-6, 1.0, 64, 10);
        assert_eq!(refinement_trend(&v), Trend::Growing);
        let smooth = dyadic_variations(|r| (3.0 * r).sin(), 0.0, 4.0, 16, 8);
        assert_eq!(refinement_trend(&smooth), Trend::Converged);
    }

    #[test]
    fn jordan_small_cases() {
        let f = SampledFunction::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
        let (p, m) = jordan_decompose(&f);
        assert_eq!(p.values(), &[0.0, 1.0, 1.0]);
        assert_eq!(m.values(), &[0.0, 0.0, 1.0]);
        assert_eq!(variation(&f), 2.0);
        let c = SampledFunction::new(vec![0.0, 1.0, 2.0], vec![3.0; 3]).unwrap();
        let (p, m) = jordan_decompose(&c);
        assert_eq!(p.values(), &[3.0; 3]);
        assert_eq!(m.values(), &[0.0; 3]);
    }

    #[test]
    fn product_bound_constant_f_is_equality() {
        let grid = linspace(0.0, 5.0, 500);
        let f = SampledFunction::from_fn(grid.clone(), |_| 2.5)
            .unwrap()
            .with_derivative(vec![0.0; grid.len()])
            .unwrap();
        let g = SampledFunction::from_fn(grid, |r| (2.0 * r).cos()).unwrap();
        let b = check_product_bound(&f, &g).unwrap();
        assert!(b.holds);
        assert!((b.lhs - b.rhs).abs() < 1e-12 * b.rhs);
        assert!((b.lhs - 2.5 * variation(&g)).abs() < 1e-12);
    }

    #[test]
    fn product_bound_requires_derivative() {
        let grid = linspace(0.0, 1.0, 10);
        let f = SampledFunction::from_fn(grid.clone(), |r| r).unwrap();
        let g = SampledFunction::from_fn(grid, |r| r).unwrap();
        assert_eq!(check_product_bound(&f, &g).unwrap_err(), Error::MissingDerivative);
    }

    #[test]
    fn quotient_bounds_sine_over_two() {
        let grid = linspace(0.0, 2.0 * PI, 100_000);
        let f = SampledFunction::from_fn(grid.clone(), f64::sin).unwrap();
        let g = SampledFunction::from_fn(grid, |_| 2.0).unwrap();
        let b = check_quotient_bounds(&f, &g).unwrap();
        assert!((b.eps - 0.5).abs() < 1e-9);
        assert!((b.var_fg - 2.0).abs() < 1e-8);
        assert!(b.var_f_over_g_minus_f >= 8.0 / 9.0 && b.var_f_over_g_minus_f <= 8.0);
        // sin/(2 - sin) runs from -1/3 to 1 and back twice over a period.
        assert!((b.var_f_over_g_minus_f - 8.0 / 3.0).abs() < 1e-8);
        assert!(b.holds);
    }

    #[test]
    fn quotient_bounds_reject_large_eps() {
        let grid = linspace(0.0, 1.0, 10);
        let f = SampledFunction::from_fn(grid.clone(), |_| 1.0).unwrap();
        let g = SampledFunction::from_fn(grid, |_| 1.0).unwrap();
        assert!(matches!(check_quotient_bounds(&f, &g), Err(Error::Precondition(_))));
    }

    #[test]
    fn report_tail_windows_nest() {
        let rep = variation_report(|r| (r).sin() / r, 25.0, 400.0, &Ladder::default());
        assert_eq!(rep.tail_windows.len(), 4);
        let mut prev = rep.variation;
        for (_, v) in &rep.tail_windows {
            assert!(*v <= prev);
            prev = *v;
        }
        assert_eq!(rep.refinement_trend, Trend::Converged);
    }

    #[test]
    fn trichotomy_fixtures() {
        let th = TrendThresholds::default();
        let lin = CoefficientModel::new(Profile::power(1.0, 1.0), Profile::constant(1.0)).unwrap();
        let rep = lambda_trichotomy_probe(&lin, &[-1.0, 0.0, 1.0], 25.0, &th).unwrap();
        assert_eq!(rep.pattern, TrichotomyPattern::All);

        let m = Profile::periodic(2.0, 1.0, 1.0, 1.0, 0.0);
        let q = Profile::periodic(2.0, 1.0, 1.0, 1.0, 0.25);
        let r2 = CoefficientModel::new(q, m).unwrap();
        let rep = lambda_trichotomy_probe(&r2, &[0.0, 1.0], 25.0, &th).unwrap();
        assert_eq!(rep.probes[0].trend, Trend::Converged);
        assert_eq!(rep.probes[1].trend, Trend::Growing);
        assert_eq!(rep.pattern, TrichotomyPattern::Singleton(0.0));

        let free = CoefficientModel::new(Profile::power(1.0, 1.0), Profile::constant(0.0)).unwrap();
        let rep = lambda_trichotomy_probe(&free, &[-3.0, 2.0], 25.0, &th).unwrap();
        assert_eq!(rep.pattern, TrichotomyPattern::All);
    }
}
