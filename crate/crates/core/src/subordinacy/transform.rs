//! Rescaled channel for `m == q` and `lambda < 0`.
//!
//! With `gamma = 2q - lambda` and `Lambda = |lambda|`, the functions
//! `v1 = (gamma/Lambda)^(1/4) u1`, `v2 = (Lambda/gamma)^(1/4) u2` solve a
//! mass-free system with
//!
//! ```text
//! L~ = k/r - gamma'/(4 gamma),   Q~ = sqrt(Lambda gamma),   M~ = 0.
//! ```

use crate::coefficients::{Channel, ChannelPoint, CoefficientModel, Structure};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct TransformedChannel<'a> {
    model: &'a CoefficientModel,
    k: i32,
    lambda: f64,
}

/// Builds the rescaled channel; requires `m == q` (checked on `probe`),
/// `lambda < 0`, `k != 0` and a differentiable `q`.
pub fn transform<'a>(model: &'a CoefficientModel, k: i32, lambda: f64, probe: &[f64]) -> Result<TransformedChannel<'a>> {
    if k == 0 {
        return Err(Error::ZeroAngularNumber);
    }
    if !(lambda < 0.0) {
        return Err(Error::Precondition(format!(
            "the rescaling needs lambda < 0, got {lambda}"
        )));
    }
    model.check_mass_equals_potential(probe)?;
    if model.q.jet(probe.first().copied().unwrap_or(1.0)).d1.is_none() {
        return Err(Error::MissingDerivative);
    }
    Ok(TransformedChannel { model, k, lambda })
}

impl<'a> TransformedChannel<'a> {
    pub fn k(&self) -> i32 {
        self.k
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn big_lambda(&self) -> f64 {
        -self.lambda
    }

    /// `(gamma, gamma')` at `r`.
    pub fn gamma(&self, r: f64) -> (f64, f64) {
        let j = self.model.q.jet(r);
        (2.0 * j.value - self.lambda, 2.0 * j.d1.unwrap_or(f64::NAN))
    }

    /// Checks `gamma > 0` on a set of radii.
    pub fn check_positive(&self, radii: &[f64]) -> Result<()> {
        for &r in radii {
            if !(self.gamma(r).0 > 0.0) {
                return Err(Error::NonpositiveDenominator { what: "gamma", r });
            }
        }
        Ok(())
    }

    fn scale(&self, r: f64) -> f64 {
        (self.gamma(r).0 / self.big_lambda()).powf(0.25)
    }

    /// `u -> v`.
    pub fn forward(&self, r: f64, u: [f64; 2]) -> [f64; 2] {
        let s = self.scale(r);
        [s * u[0], u[1] / s]
    }

    /// `v -> u`.
    pub fn inverse(&self, r: f64, v: [f64; 2]) -> [f64; 2] {
        let s = self.scale(r);
        [v[0] / s, s * v[1]]
    }
}

impl Channel for TransformedChannel<'_> {
    #[inline]
    fn at(&self, r: f64) -> ChannelPoint {
        let (g, dg) = self.gamma(r);
        ChannelPoint {
            q: (self.big_lambda() * g).sqrt(),
            m: 0.0,
            l: self.k as f64 / r - dg / (4.0 * g),
        }
    }

    fn structure(&self) -> Structure {
        Structure::MassFree
    }
}

/// Largest `|L~/Q~|` on each ladder window.
pub fn l_over_q_windows<C: Channel>(channel: &C, ladder: &crate::ladder::Ladder) -> Vec<f64> {
    ladder
        .windows()
        .into_iter()
        .map(|(a, b)| {
            ladder
                .sample(a, b)
                .iter()
                .map(|&r| {
                    let c = channel.at(r);
                    (c.l / c.q).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// First radius at or beyond `from` (0.05 lattice, up to `limit`) after which
/// `|L~/Q~| <= bound` holds on the rest of the lattice up to `limit`.
pub fn guard_radius<C: Channel>(channel: &C, from: f64, bound: f64, limit: f64) -> Option<f64> {
    let n = ((limit - from) / 0.05).floor() as usize;
    let mut start = None;
    for i in 0..=n {
        let r = from + 0.05 * i as f64;
        let c = channel.at(r);
        let ok = c.q > 0.0 && (c.l / c.q).abs() <= bound;
        match (ok, start) {
            (true, None) => start = Some(r),
            (false, Some(_)) => start = None,
            _ => {}
        }
    }
    start
}
