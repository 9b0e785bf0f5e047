//! Windowed diagnostics for the asymptotic hypotheses on `q`, `m` and on a
//! channel's `Q`, `M`, `L`.
//!
//! Every condition is evaluated on the windows `[T, 2T]` of a [`Ladder`]:
//! limits use window extremes, integrability uses window integrals, bounded
//! variation uses window variations. A verdict other than `inconclusive`
//! always rests on at least two rungs.

use serde::{Deserialize, Serialize};

use crate::bvcalc;
use crate::coefficients::{Channel, ChannelPoint, CoefficientModel, Structure};
use crate::error::{Error, Result};
use crate::ladder::{self, Ladder, Trend, TrendFit, TrendThresholds};
use crate::quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

impl Verdict {
    /// Conjunction: violated dominates, then inconclusive.
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Violated, _) | (_, Violated) => Violated,
            (Satisfied, Satisfied) => Satisfied,
            _ => Inconclusive,
        }
    }
}

/// One windowed quantity, one value per rung.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub quantity: String,
    pub values: Vec<f64>,
    /// Fitted per-rung ratio when a trend was classified.
    pub ratio: Option<f64>,
    pub trend: Option<Trend>,
}

impl Evidence {
    fn new(quantity: impl Into<String>, values: Vec<f64>, fit: Option<TrendFit>) -> Self {
        Evidence {
            quantity: quantity.into(),
            values,
            ratio: fit.map(|f| f.ratio),
            trend: fit.map(|f| f.trend),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub condition_id: String,
    pub verdict: Verdict,
    pub evidence: Vec<Evidence>,
    pub ladder: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<i32>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub details: Vec<HypothesisReport>,
}

impl HypothesisReport {
    fn new(id: &str, verdict: Verdict, evidence: Vec<Evidence>, ladder: &Ladder) -> Self {
        let rungs = evidence.iter().map(|e| e.values.len()).min().unwrap_or(0);
        let verdict = if rungs < 2 { Verdict::Inconclusive } else { verdict };
        HypothesisReport {
            condition_id: id.to_string(),
            verdict,
            evidence,
            ladder: ladder.rungs.clone(),
            lambda: None,
            k: None,
            notes: Vec::new(),
            details: Vec::new(),
        }
    }

    pub fn inconclusive(id: &str, ladder: &Ladder, note: impl Into<String>) -> Self {
        let mut r = HypothesisReport::new(id, Verdict::Inconclusive, Vec::new(), ladder);
        r.notes.push(note.into());
        r
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    fn with_k(mut self, k: i32) -> Self {
        self.k = Some(k);
        self
    }

    fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }
}

/// Ladder and thresholds shared by all checks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckOptions {
    pub ladder: Ladder,
    pub thresholds: TrendThresholds,
}

fn sample_windows<F: Fn(f64) -> f64>(ladder: &Ladder, f: F) -> Vec<(Vec<f64>, Vec<f64>)> {
    ladder
        .windows()
        .into_iter()
        .map(|(a, b)| {
            let grid = ladder.sample(a, b);
            let values = grid.iter().map(|&x| f(x)).collect();
            (grid, values)
        })
        .collect()
}

fn window_min(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::INFINITY, f64::min)
}

fn window_max(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Verdict from a windowed quantity that must shrink along the ladder.
fn decay_verdict(fit: &TrendFit) -> Verdict {
    match fit.trend {
        Trend::Converged => Verdict::Satisfied,
        Trend::Growing => Verdict::Violated,
        Trend::Inconclusive => Verdict::Inconclusive,
    }
}

/// `lim f = inf`: window minima increase and their increments do not decay.
fn tends_to_infinity<F: Fn(f64) -> f64>(id: &str, name: &str, f: F, opts: &CheckOptions) -> HypothesisReport {
    let mins: Vec<f64> = sample_windows(&opts.ladder, f)
        .iter()
        .map(|(_, v)| window_min(v))
        .collect();
    let incs: Vec<f64> = mins.windows(2).map(|w| w[1] - w[0]).collect();
    let fit = ladder::classify(&incs.iter().map(|d| d.max(0.0)).collect::<Vec<_>>(), &opts.thresholds);
    let verdict = if mins.iter().any(|v| !v.is_finite()) {
        Verdict::Inconclusive
    } else if incs.iter().any(|d| *d <= 0.0) || fit.trend == Trend::Converged {
        Verdict::Violated
    } else if fit.trend == Trend::Growing {
        Verdict::Satisfied
    } else {
        Verdict::Inconclusive
    };
    HypothesisReport::new(
        id,
        verdict,
        vec![
            Evidence::new(format!("window min {name}"), mins, None),
            Evidence::new(format!("increment of window min {name}"), incs, Some(fit)),
        ],
        &opts.ladder,
    )
}

/// Windowed `int |f|`; the tail integral converges when these shrink.
fn integrable<F: Fn(f64) -> f64>(id: &str, name: &str, f: F, opts: &CheckOptions) -> HypothesisReport {
    let values = bvcalc::windowed_integrals(f, &opts.ladder);
    let fit = ladder::classify(&values, &opts.thresholds);
    HypothesisReport::new(
        id,
        decay_verdict(&fit),
        vec![Evidence::new(format!("window integral of |{name}|"), values, Some(fit))],
        &opts.ladder,
    )
}

/// Windowed variation; bounded tail variation when these shrink.
fn bounded_variation<F: Fn(f64) -> f64>(name: &str, f: F, opts: &CheckOptions) -> (Verdict, Evidence) {
    let values = bvcalc::windowed_variations(f, &opts.ladder);
    let fit = ladder::classify(&values, &opts.thresholds);
    (
        decay_verdict(&fit),
        Evidence::new(format!("window variation of {name}"), values, Some(fit)),
    )
}

fn has_derivatives(model: &CoefficientModel, second: bool) -> bool {
    let probe = |p: &crate::coefficients::Profile| {
        let j = p.jet(1.0);
        j.d1.is_some() && (!second || j.d2.is_some())
    };
    probe(&model.q) && probe(&model.m)
}

/// `liminf |m| > 0` and `limsup |m/q| < 1`.
pub fn check_a2(model: &CoefficientModel, opts: &CheckOptions) -> HypothesisReport {
    let n = opts.ladder.rungs.len();
    let mut mins = Vec::with_capacity(n);
    let mut ratios = Vec::with_capacity(n);
    for (grid, m) in sample_windows(&opts.ladder, |r| model.m.value(r)) {
        let sign_change = m.windows(2).any(|w| w[0] * w[1] <= 0.0);
        mins.push(if sign_change {
            0.0
        } else {
            m.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()))
        });
        ratios.push(
            grid.iter()
                .zip(&m)
                .fold(0.0f64, |a, (r, mv)| a.max((mv / model.q.value(*r)).abs())),
        );
    }
    let tail = n.saturating_sub(2);
    let liminf = window_min(&mins[tail..]);
    let limsup = window_max(&ratios[tail..]);
    let min_fit = ladder::classify(&mins, &opts.thresholds);
    let lower = if liminf < opts.thresholds.limit_abs
        || (min_fit.trend == Trend::Converged && min_fit.ratio < opts.thresholds.converge_ratio)
    {
        Verdict::Violated
    } else if min_fit.ratio >= opts.thresholds.converge_ratio {
        Verdict::Satisfied
    } else {
        Verdict::Inconclusive
    };
    let upper = if !limsup.is_finite() {
        Verdict::Inconclusive
    } else if limsup < 1.0 {
        Verdict::Satisfied
    } else {
        Verdict::Violated
    };
    HypothesisReport::new(
        "A2",
        lower.and(upper),
        vec![
            Evidence::new("window min |m|", mins, Some(min_fit)),
            Evidence::new("window max |m/q|", ratios, None),
        ],
        &opts.ladder,
    )
    .note(format!(
        "liminf |m| estimate {liminf}; limsup |m/q| estimate {limsup} (margin {})",
        1.0 - limsup
    ))
    .note("limsup of |m/q| is reported; existence of the limit is not asserted")
}

/// `m/(q - lambda)` of bounded variation, for one lambda.
pub fn check_a3(model: &CoefficientModel, lambda: f64, opts: &CheckOptions) -> HypothesisReport {
    match bvcalc::lambda_trichotomy_on(model, &[lambda], &opts.ladder, &opts.thresholds) {
        Ok(rep) => {
            let p = &rep.probes[0];
            let fit = TrendFit {
                trend: p.trend,
                ratio: p.ratio,
            };
            HypothesisReport::new(
                "A3",
                decay_verdict(&fit),
                vec![Evidence::new(
                    "window variation of m/(q - lambda)",
                    p.windowed_variation.clone(),
                    Some(fit),
                )],
                &opts.ladder,
            )
            .with_lambda(lambda)
        }
        Err(e) => HypothesisReport::inconclusive("A3", &opts.ladder, e.to_string()).with_lambda(lambda),
    }
}

/// `m'/(r m q)` integrable; with `strong`, the probe `m'/(r m^2)` instead.
pub fn check_a4(model: &CoefficientModel, strong: bool, opts: &CheckOptions) -> HypothesisReport {
    let id = if strong { "A4'" } else { "A4" };
    if !has_derivatives(model, false) {
        return HypothesisReport::inconclusive(id, &opts.ladder, "derivative of m unavailable");
    }
    let f = |r: f64| {
        let m = model.m.jet(r);
        let dm = m.d1.unwrap_or(f64::NAN);
        if strong {
            dm / (r * m.value * m.value)
        } else {
            dm / (r * m.value * model.q.value(r))
        }
    };
    let name = if strong { "m'/(r m^2)" } else { "m'/(r m q)" };
    integrable(id, name, f, opts)
}

/// Reports for (A1)-(A4) on the model and, for every `(k, lambda)`, the
/// channel conditions they imply.
pub fn check_theorem1(model: &CoefficientModel, lambdas: &[f64], k_values: &[i32], opts: &CheckOptions) -> Result<Vec<HypothesisReport>> {
    if k_values.contains(&0) {
        return Err(Error::ZeroAngularNumber);
    }
    let mut out = vec![
        tends_to_infinity("A1", "q", |r| model.q.value(r), opts),
        check_a2(model, opts),
    ];
    out.extend(lambdas.iter().map(|&l| check_a3(model, l, opts)));
    out.push(check_a4(model, false, opts));
    for &k in k_values {
        for &lambda in lambdas {
            let ch = model.channel(k, lambda)?;
            out.extend(check_prop2(&ch, opts).into_iter().map(|r| r.with_k(k).with_lambda(lambda)));
        }
    }
    Ok(out)
}

/// `m'/q` and `m q'/q^2` integrable.
pub fn check_corollary1(model: &CoefficientModel, opts: &CheckOptions) -> Vec<HypothesisReport> {
    const IDS: [&str; 2] = ["Cor1:m'/q", "Cor1:mq'/q^2"];
    if !has_derivatives(model, false) {
        return IDS
            .iter()
            .map(|id| HypothesisReport::inconclusive(id, &opts.ladder, "derivatives unavailable"))
            .collect();
    }
    let implication = "both integrable implies m/(q - lambda) of bounded variation for every lambda";
    vec![
        integrable(
            IDS[0],
            "m'/q",
            |r| model.m.jet(r).d1.unwrap_or(f64::NAN) / model.q.value(r),
            opts,
        )
        .note(implication),
        integrable(
            IDS[1],
            "m q'/q^2",
            |r| {
                let q = model.q.jet(r);
                let dq = q.d1.unwrap_or(f64::NAN);
                model.m.value(r) * (dq / q.value) / q.value
            },
            opts,
        )
        .note(implication),
    ]
}

fn probe_points(ladder: &Ladder) -> Vec<f64> {
    ladder
        .windows()
        .iter()
        .flat_map(|&(a, b)| crate::quadrature::linspace(a, b, 64))
        .collect()
}

/// (B1), (B2) and, when second derivatives exist, (B2)' for `m == q`.
pub fn check_theorem2(model: &CoefficientModel, opts: &CheckOptions) -> Result<Vec<HypothesisReport>> {
    model.check_mass_equals_potential(&probe_points(&opts.ladder))?;
    let mut out = vec![tends_to_infinity("B1", "q", |r| model.q.value(r), opts)];
    if !has_derivatives(model, false) {
        out.push(HypothesisReport::inconclusive("B2", &opts.ladder, "derivative of q unavailable"));
        return Ok(out);
    }
    // q'/q^{3/2} = (q'/q)/sqrt(q) avoids overflow for rapidly growing q.
    let g = |r: f64| {
        let j = model.q.jet(r);
        (j.d1.unwrap_or(f64::NAN) / j.value) / j.value.sqrt()
    };
    let (v_bv, e_bv) = bounded_variation("q'/q^(3/2)", g, opts);
    let l2 = integrable("B2", "(q'/q^(3/2))^2", |r| g(r).powi(2), opts);
    let mut b2 = HypothesisReport::new(
        "B2",
        v_bv.and(l2.verdict),
        vec![e_bv, l2.evidence[0].clone()],
        &opts.ladder,
    );
    let c2 = untransformed_c2_note(model, opts);
    b2.notes.push(c2);
    out.push(b2);
    if has_derivatives(model, true) {
        let a = integrable(
            "B2'",
            "q''/q^(3/2)",
            |r| {
                let j = model.q.jet(r);
                (j.d2.unwrap_or(f64::NAN) / j.value) / j.value.sqrt()
            },
            opts,
        );
        let b = integrable(
            "B2'",
            "(q')^2/q^(5/2)",
            |r| {
                let j = model.q.jet(r);
                (j.d1.unwrap_or(f64::NAN) / j.value).powi(2) / j.value.sqrt()
            },
            opts,
        );
        out.push(HypothesisReport::new(
            "B2'",
            a.verdict.and(b.verdict),
            vec![a.evidence[0].clone(), b.evidence[0].clone()],
            &opts.ladder,
        ));
    }
    Ok(out)
}

/// For `m == q` the untransformed channel has `W/Q -> 1`, so the boundedness
/// criterion is unavailable there; recorded on the (B2) report.
fn untransformed_c2_note(model: &CoefficientModel, opts: &CheckOptions) -> String {
    let t = opts.ladder.end();
    match model.channel(1, -1.0) {
        Ok(ch) => {
            let c = ch.at(t);
            format!(
                "untransformed channel k = 1, lambda = -1: W/Q = {} at r = {t}; boundedness goes through the rescaled channel",
                c.w() / c.q
            )
        }
        Err(e) => e.to_string(),
    }
}

/// (C1)-(C3) for a channel, or (C3)' when `M == 0` or `L == 0`.
pub fn check_prop2<C: Channel>(channel: &C, opts: &CheckOptions) -> Vec<HypothesisReport> {
    let ladder = &opts.ladder;
    let c1 = tends_to_infinity("C1", "Q", |r| channel.at(r).q, opts);

    let mut ratios = Vec::new();
    let mut gaps = Vec::new();
    for (grid, _) in sample_windows(ladder, |_| 0.0) {
        let (mut ratio, mut gap) = (0.0f64, f64::INFINITY);
        for &r in &grid {
            let c = channel.at(r);
            let w = c.w();
            ratio = ratio.max(if c.q > 0.0 { w / c.q } else { f64::INFINITY });
            gap = gap.min(c.q - w);
        }
        ratios.push(ratio);
        gaps.push(gap);
    }
    let tail = ratios.len().saturating_sub(2);
    let limsup = window_max(&ratios[tail..]);
    let persistent_nonpositive = gaps[tail..].iter().all(|g| *g <= 0.0);
    let c2_verdict = if limsup < 1.0 { Verdict::Satisfied } else { Verdict::Violated };
    let c2 = HypothesisReport::new(
        "C2",
        c2_verdict,
        vec![
            Evidence::new("window max W/Q", ratios, None),
            Evidence::new("window min Q - W", gaps, None),
        ],
        ladder,
    )
    .note(format!("limsup W/Q estimate {limsup}, margin {}", 1.0 - limsup));

    let structure = channel.structure();
    let c3 = if persistent_nonpositive {
        HypothesisReport::inconclusive("C3", ladder, "Q - W is nonpositive on the tail; not evaluated")
    } else {
        match structure {
            Structure::General => {
                let quotient = |sel: fn(&ChannelPoint) -> f64| {
                    move |r: f64| {
                        let c = channel.at(r);
                        sel(&c) / (c.q - c.w())
                    }
                };
                let (v1, e1) = bounded_variation("W/(Q - W)", quotient(|c| c.w()), opts);
                let (v2, e2) = bounded_variation("M/(Q - W)", quotient(|c| c.m), opts);
                let (v3, e3) = bounded_variation("L/(Q - W)", quotient(|c| c.l), opts);
                HypothesisReport::new("C3", v1.and(v2).and(v3), vec![e1, e2, e3], ladder)
            }
            Structure::MassFree => {
                let (v, e) = bounded_variation(
                    "L/(Q - L)",
                    |r| {
                        let c = channel.at(r);
                        c.l / (c.q - c.l)
                    },
                    opts,
                );
                HypothesisReport::new("C3'", v, vec![e], ladder)
            }
            Structure::AngularFree => {
                let (v, e) = bounded_variation(
                    "M/(Q - M)",
                    |r| {
                        let c = channel.at(r);
                        c.m / (c.q - c.m)
                    },
                    opts,
                );
                HypothesisReport::new("C3'", v, vec![e], ladder)
            }
        }
    };
    vec![c1, c2, c3]
}

/// Diagnostics of `gamma = 2q - lambda` for `m == q`: tail variation of
/// `gamma'/gamma^(3/2)`, integrability of `gamma'/(r gamma^(3/2))`, and decay
/// of `gamma'/gamma^(3/2)`. The ladder is doubled (at most eight times) until
/// `gamma > 0` on every window.
pub fn gamma_diagnostics(model: &CoefficientModel, lambda: f64, opts: &CheckOptions) -> Result<HypothesisReport> {
    let mut ladder = opts.ladder.clone();
    model.check_mass_equals_potential(&probe_points(&ladder))?;
    let gamma = |r: f64| {
        let j = model.q.jet(r);
        (2.0 * j.value - lambda, 2.0 * j.d1.unwrap_or(f64::NAN))
    };
    let positive = |l: &Ladder| {
        sample_windows(l, |r| gamma(r).0)
            .iter()
            .all(|(_, v)| v.iter().all(|g| *g > 0.0))
    };
    let mut shifts = 0;
    while !positive(&ladder) {
        if shifts == 8 {
            return Err(Error::GammaNonpositive);
        }
        ladder = ladder.scaled(2.0);
        shifts += 1;
    }
    let local = CheckOptions {
        ladder: ladder.clone(),
        thresholds: opts.thresholds,
    };
    let ratio = |r: f64| {
        let (g, dg) = gamma(r);
        (dg / g) / g.sqrt()
    };
    if !has_derivatives(model, false) {
        return Ok(HypothesisReport::inconclusive("Lemma1", &ladder, "derivative of q unavailable").with_lambda(lambda));
    }
    let (v_bv, e_bv) = bounded_variation("gamma'/gamma^(3/2)", ratio, &local);
    let var = HypothesisReport::new("Lemma1:variation", v_bv, vec![e_bv], &ladder);
    let int = integrable("Lemma1:integral", "gamma'/(r gamma^(3/2))", |r| ratio(r) / r, &local);
    let sups: Vec<f64> = sample_windows(&ladder, ratio)
        .iter()
        .map(|(_, v)| v.iter().fold(0.0f64, |a, x| a.max(x.abs())))
        .collect();
    let fit = ladder::classify_limit_zero(&sups, &opts.thresholds);
    let lim = HypothesisReport::new(
        "Lemma1:limit",
        decay_verdict(&fit),
        vec![Evidence::new("window max |gamma'/gamma^(3/2)|", sups, Some(fit))],
        &ladder,
    );
    let verdict = var.verdict.and(int.verdict).and(lim.verdict);
    let mut parent = HypothesisReport::new("Lemma1", verdict, Vec::new(), &ladder);
    parent.verdict = verdict;
    parent.lambda = Some(lambda);
    if shifts > 0 {
        parent.notes.push(format!("ladder advanced by a factor {}", 2f64.powi(shifts)));
    }
    parent.details = vec![var, int, lim];
    Ok(parent)
}

/// Sampled `int_a^b |f|` by Gauss–Legendre on the ladder resolution.
pub fn window_integral<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, ladder: &Ladder) -> f64 {
    let grid = ladder.sample(a, b);
    *quadrature::cumulative(|x| f(x).abs(), &grid).last().unwrap_or(&0.0)
}
