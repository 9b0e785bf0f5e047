//! Coefficient functions `m`, `q` and the per-channel coefficient bundle.
//!
//! A [`CoefficientModel`] pairs a potential profile `q` with a mass profile
//! `m`. Profiles are drawn from a small closed set of parametric families
//! plus monotone-cubic tabulated data, so every evaluation is auditable and
//! derivatives are available in closed form wherever the family is smooth.
//!
//! A channel `(k, lambda)` turns the model into the first-order system
//!
//! ```text
//! u1' = -L u1 - (Q - M) u2
//! u2' = (Q + M) u1 + L u2
//! ```
//!
//! with `Q = q - lambda`, `M = m`, `L = k / r`. Other systems of the same
//! shape (constant coefficients, the rescaled channel used for `m == q`)
//! implement [`Channel`] as well.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value and derivatives of a profile at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    /// False when the derivatives come from an interpolant.
    pub exact: bool,
}

impl Jet {
    fn closed(value: f64, d1: f64, d2: f64) -> Self {
        Jet {
            value,
            d1: Some(d1),
            d2: Some(d2),
            exact: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerParams {
    pub c: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogParams {
    pub c: f64,
}

/// `(a + b sin(omega r)) * c * r^p`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicParams {
    pub a: f64,
    pub b: f64,
    pub omega: f64,
    pub c: f64,
    pub p: f64,
}

/// `c * exp(a r)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpParams {
    pub c: f64,
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineTerm {
    pub weight: f64,
    pub profile: Profile,
}

/// `offset + sum(weight_i * profile_i)`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineParams {
    #[serde(default)]
    pub offset: f64,
    pub terms: Vec<AffineTerm>,
}

/// One radial coefficient function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "family",
    content = "params",
    rename_all = "snake_case",
    deny_unknown_fields
)]
pub enum Profile {
    /// `c r^p`
    Power(PowerParams),
    /// `c ln(1 + r)`
    Logarithm(LogParams),
    Periodic(PeriodicParams),
    Exponential(ExpParams),
    Affine(AffineParams),
    Tabulated(Tabulated),
}

impl Profile {
    pub fn power(c: f64, p: f64) -> Self {
        Profile::Power(PowerParams { c, p })
    }

    pub fn constant(c: f64) -> Self {
        Profile::power(c, 0.0)
    }

    pub fn logarithm(c: f64) -> Self {
        Profile::Logarithm(LogParams { c })
    }

    pub fn periodic(a: f64, b: f64, omega: f64, c: f64, p: f64) -> Self {
        Profile::Periodic(PeriodicParams { a, b, omega, c, p })
    }

    pub fn exponential(c: f64, a: f64) -> Self {
        Profile::Exponential(ExpParams { c, a })
    }

    pub fn affine(offset: f64, terms: Vec<(f64, Profile)>) -> Self {
        Profile::Affine(AffineParams {
            offset,
            terms: terms
                .into_iter()
                .map(|(weight, profile)| AffineTerm { weight, profile })
                .collect(),
        })
    }

    pub fn tabulated(r: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Tabulated::new(r, values, true).map(Profile::Tabulated)
    }

    /// Evaluates the profile; `r` must already be validated as positive.
    pub fn jet(&self, r: f64) -> Jet {
        match self {
            Profile::Power(PowerParams { c, p }) => {
                let v = c * r.powf(*p);
                if *p == 0.0 {
                    Jet::closed(v, 0.0, 0.0)
                } else {
                    Jet::closed(v, p * v / r, p * (p - 1.0) * v / (r * r))
                }
            }
            Profile::Logarithm(LogParams { c }) => {
                let s = 1.0 + r;
                Jet::closed(c * r.ln_1p(), c / s, -c / (s * s))
            }
            Profile::Periodic(PeriodicParams { a, b, omega, c, p }) => {
                let (sin, cos) = (omega * r).sin_cos();
                let g = a + b * sin;
                let g1 = b * omega * cos;
                let g2 = -b * omega * omega * sin;
                let h = c * r.powf(*p);
                let (h1, h2) = if *p == 0.0 {
                    (0.0, 0.0)
                } else {
                    (p * h / r, p * (p - 1.0) * h / (r * r))
                };
                Jet::closed(g * h, g1 * h + g * h1, g2 * h + 2.0 * g1 * h1 + g * h2)
            }
            Profile::Exponential(ExpParams { c, a }) => {
                let v = c * (a * r).exp();
                Jet::closed(v, a * v, a * a * v)
            }
            Profile::Affine(AffineParams { offset, terms }) => {
                let mut out = Jet::closed(*offset, 0.0, 0.0);
                for term in terms {
                    let j = term.profile.jet(r);
                    out.value += term.weight * j.value;
                    out.d1 = out.d1.zip(j.d1).map(|(x, y)| x + term.weight * y);
                    out.d2 = out.d2.zip(j.d2).map(|(x, y)| x + term.weight * y);
                    out.exact &= j.exact;
                }
                out
            }
            Profile::Tabulated(t) => t.jet(r),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r).value
    }

    /// True when the descriptor is the zero function.
    pub fn is_identically_zero(&self) -> bool {
        match self {
            Profile::Power(PowerParams { c, .. }) => *c == 0.0,
            Profile::Logarithm(LogParams { c }) => *c == 0.0,
            Profile::Periodic(PeriodicParams { a, b, c, .. }) => {
                *c == 0.0 || (*a == 0.0 && *b == 0.0)
            }
            Profile::Exponential(ExpParams { c, .. }) => *c == 0.0,
            Profile::Affine(AffineParams { offset, terms }) => {
                *offset == 0.0
                    && terms
                        .iter()
                        .all(|t| t.weight == 0.0 || t.profile.is_identically_zero())
            }
            Profile::Tabulated(t) => t.values.iter().all(|v| *v == 0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let ok = match self {
            Profile::Power(PowerParams { c, p }) => finite(&[*c, *p]),
            Profile::Logarithm(LogParams { c }) => c.is_finite(),
            Profile::Periodic(PeriodicParams { a, b, omega, c, p }) => {
                finite(&[*a, *b, *omega, *c, *p])
            }
            Profile::Exponential(ExpParams { c, a }) => finite(&[*c, *a]),
            Profile::Affine(AffineParams { offset, terms }) => {
                for t in terms {
                    t.profile.validate()?;
                }
                offset.is_finite() && terms.iter().all(|t| t.weight.is_finite())
            }
            Profile::Tabulated(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidProfile("non-finite parameter".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TabulatedSpec {
    r: Vec<f64>,
    values: Vec<f64>,
    #[serde(default = "default_true")]
    smooth: bool,
}

fn default_true() -> bool {
    true
}

/// Tabulated samples with a shape-preserving (Fritsch–Carlson) cubic
/// interpolant. Outside the knot range the interpolant is continued linearly
/// with its end slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TabulatedSpec", into = "TabulatedSpec")]
pub struct Tabulated {
    r: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    smooth: bool,
}

impl TryFrom<TabulatedSpec> for Tabulated {
    type Error = Error;

    fn try_from(spec: TabulatedSpec) -> Result<Self> {
        Tabulated::new(spec.r, spec.values, spec.smooth)
    }
}

impl From<Tabulated> for TabulatedSpec {
    fn from(t: Tabulated) -> Self {
        TabulatedSpec {
            r: t.r,
            values: t.values,
            smooth: t.smooth,
        }
    }
}

impl Tabulated {
    /// `smooth = false` declares the data non-differentiable; derivatives are
    /// then reported as absent.
    pub fn new(r: Vec<f64>, values: Vec<f64>, smooth: bool) -> Result<Self> {
        if r.len() != values.len() {
            return Err(Error::InvalidProfile(format!(
                "{} knots but {} values",
                r.len(),
                values.len()
            )));
        }
        if r.len() < 2 {
            return Err(Error::InvalidProfile("need at least two knots".into()));
        }
        if r[0] <= 0.0 {
            return Err(Error::InvalidProfile("knots must be positive".into()));
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidProfile(
                "knots must be strictly increasing".into(),
            ));
        }
        if r.iter().chain(values.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidProfile("non-finite knot data".into()));
        }
        let slopes = pchip_slopes(&r, &values);
        Ok(Tabulated {
            r,
            values,
            slopes,
            smooth,
        })
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.r, &self.values)
    }

    fn jet(&self, x: f64) -> Jet {
        let n = self.r.len();
        let (value, d1, d2) = if x <= self.r[0] {
            let d = self.slopes[0];
            (self.values[0] + d * (x - self.r[0]), d, 0.0)
        } else if x >= self.r[n - 1] {
            let d = self.slopes[n - 1];
            (self.values[n - 1] + d * (x - self.r[n - 1]), d, 0.0)
        } else {
            let k = self.r.partition_point(|&knot| knot <= x) - 1;
            let h = self.r[k + 1] - self.r[k];
            let t = (x - self.r[k]) / h;
            let (y0, y1) = (self.values[k], self.values[k + 1]);
            let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
            let t2 = t * t;
            let t3 = t2 * t;
            let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
                + (t3 - 2.0 * t2 + t) * m0
                + (-2.0 * t3 + 3.0 * t2) * y1
                + (t3 - t2) * m1;
            let dv = ((6.0 * t2 - 6.0 * t) * y0
                + (3.0 * t2 - 4.0 * t + 1.0) * m0
                + (-6.0 * t2 + 6.0 * t) * y1
                + (3.0 * t2 - 2.0 * t) * m1)
                / h;
            let ddv = ((12.0 * t - 6.0) * y0
                + (6.0 * t - 4.0) * m0
                + (-12.0 * t + 6.0) * y1
                + (6.0 * t - 2.0) * m1)
                / (h * h);
            (v, dv, ddv)
        };
        Jet {
            value,
            d1: self.smooth.then_some(d1),
            d2: self.smooth.then_some(d2),
            exact: false,
        }
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = pchip_end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = pchip_end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn pchip_end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

/// Values and first derivatives of `q` and `m` at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelPoint {
    pub q: f64,
    pub m: f64,
    pub dq: Option<f64>,
    pub dm: Option<f64>,
    /// Derivatives come from an interpolant rather than a closed form.
    pub approximate: bool,
}

/// The coefficient pair `(q, m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientModel {
    pub q: Profile,
    pub m: Profile,
}

impl CoefficientModel {
    pub fn new(q: Profile, m: Profile) -> Result<Self> {
        q.validate()?;
        m.validate()?;
        Ok(CoefficientModel { q, m })
    }

    pub fn eval(&self, r: f64) -> Result<ModelPoint> {
        check_radius(r)?;
        let q = self.q.jet(r);
        let m = self.m.jet(r);
        Ok(ModelPoint {
            q: q.value,
            m: m.value,
            dq: q.d1,
            dm: m.d1,
            approximate: !(q.exact && m.exact),
        })
    }

    /// Builds the channel `(k, lambda)`.
    pub fn channel(&self, k: i32, lambda: f64) -> Result<ChannelSystem<'_>> {
        if k == 0 {
            return Err(Error::ZeroAngularNumber);
        }
        if !lambda.is_finite() {
            return Err(Error::Precondition("lambda must be finite".into()));
        }
        Ok(ChannelSystem {
            model: self,
            k,
            lambda,
        })
    }

    /// Checks `m == q`: structurally for parametric descriptors, otherwise
    /// pointwise on `probe`.
    pub fn check_mass_equals_potential(&self, probe: &[f64]) -> Result<()> {
        if self.q == self.m {
            return Ok(());
        }
        for &r in probe {
            let (q, m) = (self.q.value(r), self.m.value(r));
            if (q - m).abs() > 1e-12 * (1.0 + q.abs().max(m.abs())) {
                return Err(Error::MassPotentialMismatch { r, m, q });
            }
        }
        Ok(())
    }
}

/// Checks `r` lies in `(0, inf)`.
pub fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { r })
    }
}

/// Coefficients `Q, M, L` of the system at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPoint {
    pub q: f64,
    pub m: f64,
    pub l: f64,
}

impl ChannelPoint {
    /// `W = sqrt(M^2 + L^2)`
    pub fn w(&self) -> f64 {
        self.m.hypot(self.l)
    }

    /// Right-hand side of the Cartesian system.
    #[inline]
    pub fn rhs(&self, u: [f64; 2]) -> [f64; 2] {
        [
            -self.l * u[0] - (self.q - self.m) * u[1],
            (self.q + self.m) * u[0] + self.l * u[1],
        ]
    }

    /// Phase derivative `Q + M cos 2theta + L sin 2theta`.
    #[inline]
    pub fn theta_prime(&self, theta: f64) -> f64 {
        let (s, c) = (2.0 * theta).sin_cos();
        self.q + self.m * c + self.l * s
    }

    /// Log-amplitude derivative `M sin 2theta - L cos 2theta`.
    #[inline]
    pub fn log_rho_prime(&self, theta: f64) -> f64 {
        let (s, c) = (2.0 * theta).sin_cos();
        self.m * s - self.l * c
    }
}

/// Which coefficient vanishes identically, selecting the form of the
/// boundedness function and of the variation conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    General,
    /// `M == 0`
    MassFree,
    /// `L == 0`
    AngularFree,
}

/// A first-order Dirac system `(sigma2 p + M sigma3 + L sigma1 + Q) u = 0`.
pub trait Channel: Sync {
    /// Coefficients at `r > 0`.
    fn at(&self, r: f64) -> ChannelPoint;

    fn structure(&self) -> Structure {
        Structure::General
    }
}

impl<C: Channel + ?Sized> Channel for &C {
    fn at(&self, r: f64) -> ChannelPoint {
        (**self).at(r)
    }

    fn structure(&self) -> Structure {
        (**self).structure()
    }
}

/// `Q = q - lambda`, `M = m`, `L = k / r`.
#[derive(Debug, Clone, Copy)]
pub struct ChannelSystem<'a> {
    model: &'a CoefficientModel,
    k: i32,
    lambda: f64,
}

impl<'a> ChannelSystem<'a> {
    pub fn model(&self) -> &'a CoefficientModel {
        self.model
    }

    pub fn k(&self) -> i32 {
        self.k
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn evaluate(&self, r: f64) -> Result<ChannelPoint> {
        check_radius(r)?;
        Ok(self.at(r))
    }
}

impl Channel for ChannelSystem<'_> {
    #[inline]
    fn at(&self, r: f64) -> ChannelPoint {
        ChannelPoint {
            q: self.model.q.value(r) - self.lambda,
            m: self.model.m.value(r),
            l: self.k as f64 / r,
        }
    }

    fn structure(&self) -> Structure {
        if self.model.m.is_identically_zero() {
            Structure::MassFree
        } else {
            Structure::General
        }
    }
}

/// Constant coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantChannel {
    pub q: f64,
    pub m: f64,
    pub l: f64,
}

impl ConstantChannel {
    pub fn new(q: f64, m: f64, l: f64) -> Self {
        ConstantChannel { q, m, l }
    }
}

impl Channel for ConstantChannel {
    fn at(&self, _r: f64) -> ChannelPoint {
        ChannelPoint {
            q: self.q,
            m: self.m,
            l: self.l,
        }
    }

    fn structure(&self) -> Structure {
        if self.m == 0.0 {
            Structure::MassFree
        } else if self.l == 0.0 {
            Structure::AngularFree
        } else {
            Structure::General
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn linear_model() -> CoefficientModel {
        CoefficientModel::new(Profile::power(1.0, 1.0), Profile::constant(1.0)).unwrap()
    }

    fn remark2_model() -> CoefficientModel {
        CoefficientModel::new(
            Profile::periodic(2.0, 1.0, 1.0, 1.0, 0.25),
            Profile::periodic(2.0, 1.0, 1.0, 1.0, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn eval_linear_potential_unit_mass() {
        let p = linear_model().eval(2.0).unwrap();
        assert_eq!((p.q, p.m, p.dq, p.dm), (2.0, 1.0, Some(1.0), Some(0.0)));
        assert!(!p.approximate);
    }

    #[test]
    fn eval_rejects_origin_and_negative_radii() {
        let model = remark2_model();
        assert!(matches!(model.eval(0.0), Err(Error::Domain { .. })));
        assert!(matches!(model.eval(-1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn eval_periodic_mass_at_quarter_period() {
        let p = remark2_model().eval(FRAC_PI_2).unwrap();
        assert_relative_eq!(p.m, 3.0, epsilon = 1e-15);
        assert_relative_eq!(p.q, FRAC_PI_2.powf(0.25) * 3.0, epsilon = 1e-14);
    }

    #[test]
    fn periodic_derivatives_match_finite_differences() {
        let prof = Profile::periodic(2.0, 1.0, 1.3, 0.7, 0.25);
        let h = 1e-5;
        for &r in &[0.5, 3.0, 17.0] {
            let j = prof.jet(r);
            let fd1 = (prof.value(r + h) - prof.value(r - h)) / (2.0 * h);
            let fd2 = (prof.value(r + h) - 2.0 * j.value + prof.value(r - h)) / (h * h);
            assert_relative_eq!(j.d1.unwrap(), fd1, epsilon = 1e-8);
            assert!((j.d2.unwrap() - fd2).abs() < 1e-4);
        }
    }

    #[test]
    fn tabulated_knot_value_and_interpolant_derivative() {
        let prof = Profile::tabulated(vec![1.0, 2.0, 3.0], vec![1.0, 4.0, 9.0]).unwrap();
        let j = prof.jet(2.0);
        assert_eq!(j.value, 4.0);
        assert!(!j.exact);
        let h = 1e-7;
        let fd = (prof.value(2.0 + h) - prof.value(2.0 - h)) / (2.0 * h);
        assert!((j.d1.unwrap() - fd).abs() < 1e-6);
    }

    #[test]
    fn tabulated_non_smooth_has_no_derivatives() {
        let t = Tabulated::new(vec![1.0, 2.0, 3.0], vec![1.0, 0.0, 1.0], false).unwrap();
        let model = CoefficientModel::new(Profile::Tabulated(t), Profile::constant(1.0)).unwrap();
        let p = model.eval(1.5).unwrap();
        assert_eq!(p.dq, None);
        assert!(p.approximate);
    }

    #[test]
    fn tabulated_rejects_bad_knots() {
        assert!(Profile::tabulated(vec![1.0, 1.0], vec![0.0, 1.0]).is_err());
        assert!(Profile::tabulated(vec![1.0], vec![0.0]).is_err());
        assert!(Profile::tabulated(vec![1.0, 2.0], vec![0.0]).is_err());
    }

    #[test]
    fn channel_linear_potential() {
        let model = linear_model();
        let p = model.channel(1, 0.0).unwrap().evaluate(2.0).unwrap();
        assert_eq!((p.q, p.m, p.l), (2.0, 1.0, 0.5));
        assert_relative_eq!(p.w(), 1.25f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn channel_rejects_zero_k() {
        assert_eq!(linear_model().channel(0, 1.0).unwrap_err(), Error::ZeroAngularNumber);
    }

    #[test]
    fn channel_equal_mass_and_potential() {
        let model = CoefficientModel::new(Profile::power(1.0, 1.0), Profile::power(1.0, 1.0)).unwrap();
        let p = model.channel(1, -1.0).unwrap().evaluate(4.0).unwrap();
        assert_eq!((p.q, p.m, p.l), (5.0, 4.0, 0.25));
        assert_relative_eq!(p.w(), 16.0625f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn model_descriptor_json_shape() {
        let json = r#"{"q": {"family": "power", "params": {"c": 1.0, "p": 1.0}},
                       "m": {"family": "periodic", "params": {"a": 2, "b": 1, "omega": 1, "c": 1, "p": 0}}}"#;
        let model: CoefficientModel = serde_json::from_str(json).unwrap();
        assert_eq!(model.q, Profile::power(1.0, 1.0));
        let bad = r#"{"q": {"family": "power", "params": {"c": 1.0, "p": 1.0, "x": 2}},
                      "m": {"family": "power", "params": {"c": 1.0, "p": 0.0}}}"#;
        assert!(serde_json::from_str::<CoefficientModel>(bad).is_err());
        let tab = r#"{"q": {"family": "tabulated", "params": {"r": [1, 2], "values": [3, 1]}},
                      "m": {"family": "power", "params": {"c": 1.0, "p": 0.0}}}"#;
        let model: CoefficientModel = serde_json::from_str(tab).unwrap();
        assert_eq!(model.q.value(1.5), 2.0);
        let back = serde_json::to_string(&model).unwrap();
        assert_eq!(serde_json::from_str::<CoefficientModel>(&back).unwrap(), model);
    }

    #[test]
    fn mass_potential_mismatch_is_located() {
        let model = linear_model();
        let err = model.check_mass_equals_potential(&[3.0, 5.0]).unwrap_err();
        assert!(matches!(err, Error::MassPotentialMismatch { r, .. } if r == 3.0));
        let same = CoefficientModel::new(
            Profile::affine(0.0, vec![(1.0, Profile::power(1.0, 1.0))]),
            Profile::power(1.0, 1.0),
        )
        .unwrap();
        assert!(same.check_mass_equals_potential(&[1.0, 7.5]).is_ok());
    }
}
