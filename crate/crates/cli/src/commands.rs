//! One function per subcommand. Each writes its artifacts into the output
//! directory and returns the violations it found; per-channel work runs on
//! the rayon pool and is merged in `(k, lambda)` order.

use std::io::Write;
use std::path::PathBuf;

use radial_dirac::asymptotics::{compare_asymptotics, octave_windows, second_order_check, wkb_reference, AsymptoticComparison, SecondOrderReport};
use radial_dirac::boundedness::{almost_monotone_check, comparability_constant, dominance_radius, geometric_pairs, r_trace, BoundednessCertificate};
use radial_dirac::bvcalc::{lambda_trichotomy_on, TrichotomyReport};
use radial_dirac::hypotheses::{self, HypothesisReport, Verdict};
use radial_dirac::solver::{self, Mode, SolveConfig, SolveStatus, StepStats, Trajectory, ENVELOPE_TOL};
use radial_dirac::subordinacy::{
    classify_spectrum, decaying_data, eigen_shoot, subordinacy_ratio, CellCode, Classification, EigenReport, RatioOptions,
    SubordinacyReport,
};
use radial_dirac::{Channel, CoefficientModel};
use rayon::prelude::*;
use serde::Serialize;

use crate::artifacts::{write_json, write_text, Artifact};
use crate::bv::{run_instances, InstanceResult};
use crate::config::RunConfig;
use crate::table::{opt, Table};
use crate::{CliError, Outcome};

/// `Q > SWITCH_RATIO * W` switches the automatic solve mode to Prüfer.
pub const SWITCH_RATIO: f64 = 10.0;

/// Channel label used in file names.
pub fn tag(k: i32, lambda: f64) -> String {
    format!("k{k}_l{lambda}")
}

/// `(k, lambda)` pairs of the grid, or `None` for the constant channel.
fn channel_keys(cfg: &RunConfig) -> Vec<Option<(i32, f64)>> {
    if cfg.constant_channel.is_some() {
        return vec![None];
    }
    let ls = cfg.lambdas();
    cfg.ks()
        .into_iter()
        .flat_map(|k| ls.iter().map(move |&l| Some((k, l))))
        .collect()
}

fn key_tag(key: Option<(i32, f64)>) -> String {
    key.map_or_else(|| "constant".into(), |(k, l)| tag(k, l))
}

fn with_channel<T>(cfg: &RunConfig, key: Option<(i32, f64)>, f: impl FnOnce(&dyn Channel) -> Result<T, CliError>) -> Result<T, CliError> {
    match (key, cfg.constant_channel) {
        (Some((k, l)), _) => f(&cfg.model.channel(k, l)?),
        (None, Some(c)) => f(&c.channel()),
        (None, None) => Err(CliError::Usage("no channel selected".into())),
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Satisfied => "satisfied",
        Verdict::Violated => "violated",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn label(r: &HypothesisReport) -> String {
    let mut s = r.condition_id.clone();
    if let Some(k) = r.k {
        s += &format!(" k={k}");
    }
    if let Some(l) = r.lambda {
        s += &format!(" lambda={l}");
    }
    s
}

fn is_mass_equals_potential(cfg: &RunConfig) -> bool {
    let mut probe = vec![1.0];
    probe.extend(cfg.ladder.rungs.iter().copied());
    probe.push(cfg.ladder.end());
    cfg.model.check_mass_equals_potential(&probe).is_ok()
}

#[derive(Debug, Serialize)]
struct HypothesesOutput {
    mass_equals_potential: bool,
    reports: Vec<HypothesisReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trichotomy: Option<TrichotomyReport>,
}

pub fn hypotheses(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let opts = cfg.check_options();
    let (ks, ls) = (cfg.ks(), cfg.lambdas());
    let mep = is_mass_equals_potential(cfg);
    let mut reports;
    let mut trichotomy = None;
    if mep {
        reports = hypotheses::check_theorem2(&cfg.model, &opts)?;
        for &l in ls.iter().filter(|l| **l < 0.0) {
            reports.push(match hypotheses::gamma_diagnostics(&cfg.model, l, &opts) {
                Ok(r) => r,
                Err(e) => HypothesisReport::inconclusive("Lemma1", &opts.ladder, e.to_string()).with_lambda(l),
            });
        }
    } else {
        reports = hypotheses::check_theorem1(&cfg.model, &ls, &ks, &opts)?;
        reports.push(hypotheses::check_a4(&cfg.model, true, &opts));
        reports.extend(hypotheses::check_corollary1(&cfg.model, &opts));
        trichotomy = Some(lambda_trichotomy_on(&cfg.model, &ls, &opts.ladder, &opts.thresholds)?);
    }

    let mut table = Table::new(["condition", "k", "lambda", "verdict", "fitted ratio", "notes"]);
    for r in &reports {
        let ratio = r.evidence.iter().rev().find_map(|e| e.ratio);
        table.row([
            r.condition_id.clone(),
            opt(r.k),
            opt(r.lambda),
            verdict_str(r.verdict).into(),
            ratio.map_or("-".into(), |x| format!("{x:.4}")),
            r.notes.join("; "),
        ]);
    }
    let mut text = table.render();
    if let Some(t) = &trichotomy {
        text += &format!("\nlambda trichotomy: {:?}\n", t.pattern);
        let mut tt = Table::new(["lambda", "trend", "fitted ratio"]);
        for p in &t.probes {
            tt.row([p.lambda.to_string(), format!("{:?}", p.trend).to_lowercase(), format!("{:.4}", p.ratio)]);
        }
        text += &tt.render();
    }

    let dir = cfg.out_dir();
    let violations = reports
        .iter()
        .filter(|r| r.verdict == Verdict::Violated)
        .map(|r| format!("{} violated", label(r)))
        .collect();
    let out = HypothesesOutput {
        mass_equals_potential: mep,
        reports,
        trichotomy,
    };
    Ok(Outcome {
        written: vec![
            write_json(&dir.join("hypotheses.json"), &out)?,
            write_text(&dir.join("hypotheses.txt"), &text)?,
        ],
        violations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Segment {
    pub mode: Mode,
    pub r_from: f64,
    pub r_to: f64,
    pub status: SolveStatus,
    pub stats: StepStats,
}

#[derive(Debug, Clone, Serialize)]
struct SolveSummary {
    channel: String,
    k: Option<i32>,
    lambda: Option<f64>,
    segments: Vec<Segment>,
}

fn segment(t: &Trajectory, r_from: f64, r_to: f64) -> Segment {
    Segment {
        mode: t.mode,
        r_from,
        r_to,
        status: t.status,
        stats: t.stats,
    }
}

/// Cartesian up to the first radius with `Q > 10 W`, Prüfer beyond; a fixed
/// mode overrides the switch.
pub fn solve_channel(ch: &dyn Channel, u0: [f64; 2], fixed: Option<Mode>, cfg: &SolveConfig) -> Result<Vec<Trajectory>, CliError> {
    let (a, b) = (cfg.r_start, cfg.r_end);
    let switch = match fixed {
        Some(Mode::Cartesian) => None,
        Some(Mode::Pruefer) => Some(a),
        None => dominance_radius(&ch, a, 1.0 / SWITCH_RATIO, b).filter(|r| *r < b),
    };
    let polar = |u: [f64; 2]| (u[0].hypot(u[1]), u[1].atan2(u[0]));
    Ok(match switch {
        None => vec![solver::integrate_cartesian(&ch, u0, cfg)?],
        Some(r) if r <= a => {
            let (rho, theta) = polar(u0);
            vec![solver::integrate_pruefer_between(&ch, rho, theta, a, b, cfg)?]
        }
        Some(r) => {
            let first = solver::integrate_cartesian_between(&ch, u0, a, r, cfg)?;
            if first.status != SolveStatus::Completed {
                return Ok(vec![first]);
            }
            let n = first.len() - 1;
            let (rho, theta) = (first.rho[n], first.theta[n]);
            let second = solver::integrate_pruefer_between(&ch, rho, theta, r, b, cfg)?;
            vec![first, second]
        }
    })
}

pub fn solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let keys = channel_keys(cfg);
    let fixed = cfg.solve.mode.fixed();
    let results = keys
        .par_iter()
        .map(|&key| with_channel(cfg, key, |ch| solve_channel(ch, cfg.solve.u0, fixed, &cfg.solver)))
        .collect::<Result<Vec<_>, _>>()?;
    let dir = cfg.out_dir();
    let mut outcome = Outcome::default();
    let mut summaries = Vec::new();
    for (key, segs) in keys.iter().zip(&results) {
        let name = key_tag(*key);
        let mut csv = Vec::new();
        for (i, t) in segs.iter().enumerate() {
            let mut buf = Vec::new();
            t.write_csv(&mut buf)?;
            let skip = if i == 0 { 0 } else { 2 };
            for line in String::from_utf8_lossy(&buf).lines().skip(skip) {
                writeln!(csv, "{line}")?;
            }
        }
        let path = dir.join(format!("solve_{name}.csv"));
        std::fs::write(&path, csv)?;
        outcome.written.push(path);
        let segments: Vec<Segment> = segs
            .iter()
            .map(|t| segment(t, t.grid[0], *t.grid.last().unwrap_or(&t.grid[0])))
            .collect();
        for s in &segments {
            if s.status != SolveStatus::Completed {
                outcome.violations.push(format!("{name}: step underflow at r = {}", s.r_to));
            }
            if s.stats.envelope_excess > ENVELOPE_TOL {
                outcome
                    .violations
                    .push(format!("{name}: phase envelope exceeded by {}", s.stats.envelope_excess));
            }
        }
        summaries.push(SolveSummary {
            channel: name,
            k: key.map(|k| k.0),
            lambda: key.map(|k| k.1),
            segments,
        });
    }
    outcome.written.push(write_json(&dir.join("solve.json"), &summaries)?);
    Ok(outcome)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundednessResult {
    pub channel: String,
    pub k: Option<i32>,
    pub lambda: Option<f64>,
    pub r0: Option<f64>,
    pub pairs: usize,
    pub pairs_failed: usize,
    /// Largest `increase / allowance` over the pairs with positive allowance.
    pub worst_pair_load: f64,
    pub certificate: Option<BoundednessCertificate>,
    pub message: Option<String>,
}

fn boundedness_one(cfg: &RunConfig, key: Option<(i32, f64)>, seed: u64) -> Result<(BoundednessResult, Option<Artifact>), CliError> {
    let sec = cfg.boundedness;
    let name = key_tag(key);
    with_channel(cfg, key, |ch| {
        let empty = BoundednessResult {
            channel: name.clone(),
            k: key.map(|k| k.0),
            lambda: key.map(|k| k.1),
            r0: None,
            pairs: 0,
            pairs_failed: 0,
            worst_pair_load: 0.0,
            certificate: None,
            message: None,
        };
        let Some(r0) = dominance_radius(&ch, sec.r0, 0.5, sec.r_end).filter(|r| *r < sec.r_end) else {
            return Ok((
                BoundednessResult {
                    message: Some("W/Q <= 1/2 never reached".into()),
                    ..empty
                },
                None,
            ));
        };
        let scfg = SolveConfig {
            r_start: r0,
            r_end: sec.r_end,
            ..cfg.solver
        };
        let traced = solver::integrate_cartesian(&ch, [1.0, 0.0], &scfg).and_then(|t| r_trace(&ch, &t).map(|r| (t, r)));
        let (traj, trace) = match traced {
            Ok(x) => x,
            Err(e) => {
                return Ok((
                    BoundednessResult {
                        r0: Some(r0),
                        message: Some(e.to_string()),
                        ..empty
                    },
                    None,
                ))
            }
        };
        let verdicts = almost_monotone_check(&trace, &traj, &geometric_pairs(r0, sec.r_end, sec.grid_points));
        let load = verdicts
            .iter()
            .filter(|v| v.allowance > 0.0)
            .map(|v| v.increase / v.allowance)
            .fold(f64::NEG_INFINITY, f64::max);
        let (certificate, message) = match comparability_constant(&ch, r0, sec.r_end, &cfg.solver, &cfg.check_options(), seed) {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Ok((
            BoundednessResult {
                r0: Some(r0),
                pairs: verdicts.len(),
                pairs_failed: verdicts.iter().filter(|v| !v.holds).count(),
                worst_pair_load: load,
                certificate,
                message,
                ..empty
            },
            Some(Artifact::RTrace(trace)),
        ))
    })
}

pub fn boundedness(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let keys = channel_keys(cfg);
    let results = keys
        .par_iter()
        .enumerate()
        .map(|(i, &key)| boundedness_one(cfg, key, cfg.seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let dir = cfg.out_dir();
    let mut outcome = Outcome::default();
    let mut table = Table::new(["channel", "r0", "pairs failed", "C", "certified", "message"]);
    let mut rows = Vec::new();
    for (res, art) in results {
        if let Some(a) = art {
            outcome.written.push(write_json(&dir.join(format!("rtrace_{}.json", res.channel)), &a)?);
        }
        let certified = res.certificate.as_ref().is_some_and(|c| c.certified);
        if res.pairs_failed > 0 {
            outcome
                .violations
                .push(format!("{}: {} almost-monotone pairs fail", res.channel, res.pairs_failed));
        }
        if !certified {
            outcome.violations.push(format!(
                "{}: no comparability constant certified ({})",
                res.channel,
                res.message.as_deref().unwrap_or("spot checks disagree")
            ));
        }
        table.row([
            res.channel.clone(),
            opt(res.r0),
            format!("{}/{}", res.pairs_failed, res.pairs),
            opt(res.certificate.as_ref().map(|c| format!("{:.6}", c.c))),
            certified.to_string(),
            res.message.clone().unwrap_or_default(),
        ]);
        rows.push(res);
    }
    outcome.written.push(write_json(&dir.join("boundedness.json"), &rows)?);
    outcome.written.push(write_text(&dir.join("boundedness.txt"), &table.render())?);
    Ok(outcome)
}

/// Basis data, except for `m == q` where `lambda = 0` is excluded (`None`)
/// and `lambda > 0` pairs the decaying solution with its perpendicular.
pub fn energy_report(model: &CoefficientModel, k: i32, lambda: f64, cfg: &RunConfig) -> Option<Result<SubordinacyReport, CliError>> {
    let sec = cfg.subordinacy;
    let ropts = RatioOptions {
        solve: cfg.solver,
        delta: sec.delta,
        ..RatioOptions::default()
    };
    let mep = is_mass_equals_potential(cfg);
    if mep && lambda == 0.0 {
        return None;
    }
    let rep = if mep && lambda > 0.0 {
        decaying_data(model, k, lambda, sec.r0, sec.positive_r_end, &cfg.solver)
            .and_then(|d| subordinacy_ratio(model, k, lambda, d, [-d[1], d[0]], sec.r0, sec.positive_r_end, &ropts))
    } else {
        subordinacy_ratio(model, k, lambda, [1.0, 0.0], [0.0, 1.0], sec.r0, sec.r_end, &ropts)
    };
    Some(rep.map_err(CliError::from))
}

#[derive(Debug, Serialize)]
struct SubordinacyEntry {
    k: i32,
    lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<SubordinacyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
}

pub fn subordinacy(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ls = cfg.lambdas();
    let keys: Vec<(i32, f64)> = cfg.ks().into_iter().flat_map(|k| ls.iter().map(move |&l| (k, l))).collect();
    let entries: Vec<SubordinacyEntry> = keys
        .par_iter()
        .map(|&(k, lambda)| match energy_report(&cfg.model, k, lambda, cfg) {
            None => SubordinacyEntry {
                k,
                lambda,
                report: None,
                message: Some("lambda = 0 excluded for m == q".into()),
            },
            Some(Ok(r)) => SubordinacyEntry {
                k,
                lambda,
                report: Some(r),
                message: None,
            },
            Some(Err(e)) => SubordinacyEntry {
                k,
                lambda,
                report: None,
                message: Some(e.to_string()),
            },
        })
        .collect();
    let dir = cfg.out_dir();
    let mut outcome = Outcome::default();
    let mut table = Table::new(["k", "lambda", "classification", "liminf ratio", "lower bound", "census J/K", "message"]);
    for e in &entries {
        let name = tag(e.k, e.lambda);
        let class = e.report.as_ref().map(|r| r.classification);
        if let Some(r) = &e.report {
            outcome
                .written
                .push(write_json(&dir.join(format!("ratio_{name}.json")), &Artifact::RatioTail(r.clone()))?);
            if let Some(c) = &r.census {
                outcome
                    .written
                    .push(write_json(&dir.join(format!("census_{name}.json")), &Artifact::Census(c.clone()))?);
            }
        }
        if cfg.expects_ac(e.lambda) && e.report.is_some() && class != Some(Classification::NoSubordinate) {
            outcome.violations.push(format!(
                "{name}: expected no subordinate solution, got {}",
                class.map_or_else(|| e.message.clone().unwrap_or_default(), |c| format!("{c:?}"))
            ));
        }
        table.row([
            e.k.to_string(),
            e.lambda.to_string(),
            class.map_or("-".into(), |c| serde_json::to_value(c).map(|v| v.as_str().unwrap_or("").to_string()).unwrap_or_default()),
            opt(e.report.as_ref().map(|r| format!("{:.6e}", r.liminf_estimate))),
            opt(e.report.as_ref().and_then(|r| r.lower_bound).map(|b| format!("{b:.6e}"))),
            opt(e.report.as_ref().and_then(|r| r.census.as_ref()).map(|c| {
                use radial_dirac::subordinacy::IntervalKind;
                format!("{}/{}", c.count(IntervalKind::J), c.count(IntervalKind::K))
            })),
            e.message.clone().unwrap_or_default(),
        ]);
    }
    outcome.written.push(write_json(&dir.join("subordinacy.json"), &entries)?);
    outcome.written.push(write_text(&dir.join("subordinacy.txt"), &table.render())?);
    Ok(outcome)
}

pub fn eigen_bracket(cfg: &RunConfig) -> Result<(f64, f64), CliError> {
    if let Some([a, b]) = cfg.eigen.bracket {
        return Ok((a, b));
    }
    let top = cfg.lambdas().into_iter().filter(|l| *l > 0.0).fold(f64::NAN, f64::max);
    if top > 0.0 {
        Ok((0.0, top))
    } else {
        Err(CliError::Config("`eigen.bracket` absent and `lambda_grid` has no positive energy".into()))
    }
}

pub fn eigen(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let bracket = eigen_bracket(cfg)?;
    let opts = cfg.eigen_options();
    let reports = cfg
        .ks()
        .par_iter()
        .map(|&k| eigen_shoot(&cfg.model, k, bracket, &opts))
        .collect::<Result<Vec<EigenReport>, _>>()?;
    let dir = cfg.out_dir();
    let mut outcome = Outcome::default();
    let mut table = Table::new(["k", "index", "lambda", "branch", "residual"]);
    for r in &reports {
        for (i, e) in r.eigenvalues.iter().enumerate() {
            table.row([
                r.k.to_string(),
                i.to_string(),
                format!("{:.12}", e.lambda),
                e.branch.to_string(),
                format!("{:.3e}", e.residual),
            ]);
            if cfg.expects_ac(e.lambda) {
                outcome
                    .violations
                    .push(format!("k={}: eigenvalue {} inside the expected a.c. interval", r.k, e.lambda));
            }
        }
    }
    outcome.written.push(write_json(&dir.join("eigen.json"), &reports)?);
    outcome.written.push(write_text(&dir.join("eigen.txt"), &table.render())?);
    Ok(outcome)
}

pub fn scan(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let map = classify_spectrum(&cfg.model, &cfg.ks(), &cfg.lambdas(), &cfg.check_options(), &cfg.classify_options())?;
    let dir = cfg.out_dir();
    let mut csv = Vec::new();
    map.write_csv(&mut csv)?;
    let csv_path = dir.join("scan.csv");
    std::fs::write(&csv_path, csv)?;
    let mut outcome = Outcome::default();
    for c in &map.cells {
        let name = tag(c.k, c.lambda);
        if c.code == CellCode::Error {
            outcome
                .violations
                .push(format!("{name}: {}", c.message.as_deref().unwrap_or("error")));
        } else if cfg.expects_ac(c.lambda) && c.code != CellCode::AcCandidate && c.code != CellCode::Excluded {
            outcome
                .violations
                .push(format!("{name}: expected ac-candidate, got {}", c.code.as_str()));
        }
    }
    outcome.written.push(csv_path);
    outcome.written.push(write_json(&dir.join("scan.json"), &map)?);
    Ok(outcome)
}

#[derive(Debug, Serialize)]
struct BvOutput {
    seed: u64,
    instances: usize,
    failures: Vec<usize>,
    max_jordan_residual: f64,
    results: Vec<InstanceResult>,
    trichotomy: TrichotomyReport,
}

pub fn bv_verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let results = run_instances(cfg.bv.instances, cfg.bv.grid_points, cfg.seed)?;
    let ladder = radial_dirac::ladder::Ladder::geometric(cfg.bv.tail_start, cfg.ladder.rungs.len().max(2))?;
    let trichotomy = lambda_trichotomy_on(&cfg.model, &cfg.lambdas(), &ladder, &cfg.thresholds)?;
    let failures: Vec<usize> = results.iter().filter(|r| !r.holds()).map(|r| r.index).collect();
    let max_jordan_residual = results.iter().map(|r| r.jordan_residual).fold(0.0, f64::max);

    let count = |f: &dyn Fn(&InstanceResult) -> bool| results.iter().filter(|r| f(r)).count();
    let mut table = Table::new(["check", "holds", "of"]);
    let n = results.len().to_string();
    table.row(["product bound".to_string(), count(&|r| r.product.holds).to_string(), n.clone()]);
    table.row(["quotient bounds".to_string(), count(&|r| r.quotient.holds).to_string(), n.clone()]);
    table.row(["jordan identities".to_string(), count(&|r| r.jordan_holds).to_string(), n]);
    let mut text = table.render();
    text += &format!("\nmax jordan residual: {max_jordan_residual:.3e}\nlambda trichotomy: {:?}\n", trichotomy.pattern);
    let mut tt = Table::new(["lambda", "trend", "fitted ratio"]);
    for p in &trichotomy.probes {
        tt.row([p.lambda.to_string(), format!("{:?}", p.trend).to_lowercase(), format!("{:.4}", p.ratio)]);
    }
    text += &tt.render();

    let violations = failures.iter().map(|i| format!("instance {i} fails an inequality")).collect();
    let dir = cfg.out_dir();
    let out = BvOutput {
        seed: cfg.seed,
        instances: results.len(),
        failures,
        max_jordan_residual,
        results,
        trichotomy,
    };
    Ok(Outcome {
        written: vec![write_json(&dir.join("bv.json"), &out)?, write_text(&dir.join("bv.txt"), &text)?],
        violations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticsResult {
    pub k: i32,
    pub lambda: f64,
    pub comparison: AsymptoticComparison,
    pub defects: Vec<SecondOrderReport>,
    /// `log2` of successive defect ratios.
    pub orders: Vec<f64>,
}

/// Residual bounds on the observed defect order.
pub const ORDER_RANGE: (f64, f64) = (1.8, 2.2);

pub fn asymptotics_one(model: &CoefficientModel, k: i32, lambda: f64, cfg: &RunConfig) -> Result<AsymptoticsResult, CliError> {
    let sec = &cfg.asymptotics;
    let ch = model.channel(k, lambda)?;
    let scfg = SolveConfig {
        r_start: sec.r_start,
        r_end: sec.r_end,
        ..cfg.solver
    };
    let traj = solver::integrate_cartesian(&ch, sec.u0, &scfg)?;
    let reference = wkb_reference(model, lambda, &traj.grid, sec.amplitude)?;
    let windows: Vec<(f64, f64)> = match &sec.windows {
        Some(w) => w.iter().map(|[a, b]| (*a, *b)).collect(),
        None => octave_windows(4.0 * sec.r_start, sec.r_end),
    };
    let comparison = compare_asymptotics(&traj, &reference, &windows)?;
    let defects = sec
        .strides
        .iter()
        .map(|&h| {
            let c = SolveConfig {
                r_start: sec.r_start,
                r_end: sec.defect_r_end,
                stride: h,
                ..cfg.solver
            };
            let t = solver::integrate_cartesian(&ch, sec.u0, &c)?;
            second_order_check(&t, model, k, lambda)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let orders = defects.windows(2).map(|p| (p[0].defect / p[1].defect).log2()).collect();
    Ok(AsymptoticsResult {
        k,
        lambda,
        comparison,
        defects,
        orders,
    })
}

pub fn asymptotics(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ls: Vec<f64> = cfg.lambdas().into_iter().filter(|l| *l < 0.0).collect();
    if ls.is_empty() {
        return Err(CliError::Config("asymptotics needs a negative energy in `lambda_grid`".into()));
    }
    let keys: Vec<(i32, f64)> = cfg.ks().into_iter().flat_map(|k| ls.iter().map(move |&l| (k, l))).collect();
    let results = keys
        .par_iter()
        .map(|&(k, l)| asymptotics_one(&cfg.model, k, l, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let dir = cfg.out_dir();
    let mut outcome = Outcome::default();
    let mut table = Table::new(["k", "lambda", "sign", "first residual", "last residual", "orders"]);
    for r in &results {
        let name = tag(r.k, r.lambda);
        outcome.written.push(write_json(
            &dir.join(format!("residuals_{name}.json")),
            &Artifact::Residuals(r.comparison.clone()),
        )?);
        let res: Vec<f64> = r.comparison.windows.iter().filter_map(|w| w.residual).collect();
        let (first, last) = (res.first().copied(), res.last().copied());
        match (first, last) {
            (Some(a), Some(b)) if res.len() >= 2 && b < a => {}
            _ => outcome
                .violations
                .push(format!("{name}: projection residual does not shrink ({first:?} -> {last:?})")),
        }
        if let Some(o) = r.orders.iter().find(|o| !(ORDER_RANGE.0..=ORDER_RANGE.1).contains(*o)) {
            outcome.violations.push(format!("{name}: defect order {o} outside {ORDER_RANGE:?}"));
        }
        table.row([
            r.k.to_string(),
            r.lambda.to_string(),
            r.comparison.sign.to_string(),
            opt(first.map(|x| format!("{x:.4e}"))),
            opt(last.map(|x| format!("{x:.4e}"))),
            r.orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>().join(" "),
        ]);
    }
    outcome.written.push(write_json(&dir.join("asymptotics.json"), &results)?);
    outcome.written.push(write_text(&dir.join("asymptotics.txt"), &table.render())?);
    Ok(outcome)
}

/// Paths of the artifacts a subcommand leaves for `plotdata`.
pub fn artifact_paths(outcome: &Outcome) -> Vec<PathBuf> {
    outcome
        .written
        .iter()
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            ["rtrace_", "ratio_", "residuals_", "census_"].iter().any(|s| name.starts_with(s))
        })
        .cloned()
        .collect()
}
