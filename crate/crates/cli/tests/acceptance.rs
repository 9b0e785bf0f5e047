//! Acceptance suite, one line per criterion. Runs without the libtest
//! harness so every criterion reports even when an earlier one fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use radial_dirac::boundedness::{almost_monotone_check, comparability_constant, dominance_radius, geometric_pairs, r_trace};
use radial_dirac::bvcalc::lambda_trichotomy_on;
use radial_dirac::hypotheses::{check_prop2, check_theorem1, Verdict};
use radial_dirac::ladder::{Ladder, Trend};
use radial_dirac::solver::{
    integrate_cartesian, integrate_pruefer, integrate_pruefer_between, s_reparam, wronskian, wronskian_drift, Mode,
    SolveConfig, SolveStatus, Trajectory, ENVELOPE_TOL,
};
use radial_dirac::subordinacy::{eigen_shoot, guard_radius, transform, Classification, IntervalKind};
use radial_dirac::{Channel, ConstantChannel};
use radial_dirac_cli::bv::{run_instances, JORDAN_TOL};
use radial_dirac_cli::commands::{asymptotics_one, energy_report, solve_channel};
use radial_dirac_cli::config::RunConfig;

const FIXTURES: [&str; 5] = ["theorem1_linear", "theorem2_linear", "remark2", "remark6", "constant_coeff"];

type Check = Result<String, String>;

fn fixture(name: &str) -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json"));
    RunConfig::load(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Channels of a fixture with a printable name; the constant override
/// replaces the model grid.
fn channels(cfg: &RunConfig) -> Vec<(String, Box<dyn Channel + Sync + '_>)> {
    if let Some(c) = cfg.constant_channel {
        return vec![(format!("const(q={}, m={}, l={})", c.q, c.m, c.l), Box::new(c.channel()))];
    }
    let mut out: Vec<(String, Box<dyn Channel + Sync + '_>)> = Vec::new();
    for k in cfg.ks() {
        for l in cfg.lambdas() {
            out.push((format!("k={k} lambda={l}"), Box::new(cfg.model.channel(k, l).unwrap())));
        }
    }
    out
}

fn rel_drift(values: &[f64]) -> f64 {
    let v0 = values[0];
    values.iter().map(|v| (v - v0).abs()).fold(0.0, f64::max) / v0.abs()
}

fn criterion_1() -> Check {
    let cfg = fixture("constant_coeff");
    let spec = cfg.constant_channel.ok_or("constant_coeff has no constant channel")?;
    let ch: ConstantChannel = spec.channel();
    if (spec.q, spec.m, spec.l) != (2.0, 1.0, 0.0) {
        return Err(format!("fixture channel is {spec:?}, expected Q = 2, M = 1, L = 0"));
    }
    let scfg = cfg.solver;
    if scfg.r_end - scfg.r_start < 100.0 {
        return Err(format!("span {} < 100", scfg.r_end - scfg.r_start));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut starts = vec![[1.0, 0.0]];
    starts.extend((0..16).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]));
    let w = 3f64.sqrt();
    let (mut worst_r, mut worst_u) = (0.0f64, 0.0f64);
    for u0 in starts {
        let [a, b] = u0;
        let traj = integrate_cartesian(&ch, u0, &scfg).map_err(|e| e.to_string())?;
        let trace = r_trace(&ch, &traj).map_err(|e| e.to_string())?;
        let r0 = 3.0 * a * a + b * b;
        if (trace.r_values[0] - r0).abs() > 1e-14 * r0 {
            return Err(format!("R(r0) = {} but 3a^2 + b^2 = {r0}", trace.r_values[0]));
        }
        worst_r = worst_r.max(rel_drift(&trace.r_values));
        let scale = a.hypot(b);
        for i in 0..traj.len() {
            let t = traj.grid[i] - scfg.r_start;
            let (s, c) = (w * t).sin_cos();
            let exact = [a * c - b / w * s, b * c + w * a * s];
            let err = (traj.u1[i] - exact[0]).abs().max((traj.u2[i] - exact[1]).abs()) / scale;
            worst_u = worst_u.max(err);
        }
    }
    let detail = format!("17 solutions, R drift {worst_r:.2e}, closed-form error {worst_u:.2e}");
    if worst_r < 1e-8 && worst_u <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_2() -> Check {
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    for name in FIXTURES {
        let cfg = fixture(name);
        let scfg = SolveConfig {
            r_start: 1.0,
            r_end: 201.0,
            ..SolveConfig::default()
        };
        let results: Vec<(String, Result<f64, String>)> = channels(&cfg)
            .par_iter()
            .map(|(label, ch)| {
                let pair = (|| {
                    let a = integrate_cartesian(&ch.as_ref(), [1.0, 0.0], &scfg).map_err(|e| e.to_string())?;
                    let b = integrate_cartesian(&ch.as_ref(), [0.0, 1.0], &scfg).map_err(|e| e.to_string())?;
                    for t in [&a, &b] {
                        if t.status != SolveStatus::Completed {
                            return Err(format!("step underflow at r = {}", t.grid.last().unwrap()));
                        }
                    }
                    Ok(wronskian_drift(&wronskian(&a, &b).map_err(|e| e.to_string())?))
                })();
                (label.clone(), pair)
            })
            .collect();
        for (label, r) in results {
            let ok = matches!(r, Ok(d) if d < 1e-8);
            let shown = match &r {
                Ok(d) => format!("{d:.2e}"),
                Err(e) => e.clone(),
            };
            lines.push(format!("{name} {label}: {shown}"));
            if !ok {
                failed.push(format!("{name} {label}: {shown}"));
            }
        }
    }
    if failed.is_empty() {
        Ok(format!("{} channels below 1e-8", lines.len()))
    } else {
        Err(format!("{} of {} channels at or above 1e-8: {}", failed.len(), lines.len(), failed.join("; ")))
    }
}

fn criterion_3() -> Check {
    let cfg = fixture("theorem2_linear");
    let scfg = SolveConfig {
        r_start: 1.0,
        r_end: 100.0,
        ..cfg.solver
    };
    let mut worst = 0.0f64;
    let negative: Vec<f64> = cfg.lambdas().into_iter().filter(|l| *l < 0.0).collect();
    for k in cfg.ks() {
        for &l in &negative {
            let tc = transform(&cfg.model, k, l, &[1.0, 50.0, 100.0]).map_err(|e| e.to_string())?;
            let u0 = tc.forward(1.0, [1.0, 0.3]);
            let cart = integrate_cartesian(&tc, u0, &scfg).map_err(|e| e.to_string())?;
            let pr = integrate_pruefer(&tc, u0[0].hypot(u0[1]), u0[1].atan2(u0[0]), &scfg).map_err(|e| e.to_string())?;
            if cart.grid != pr.grid {
                return Err(format!("k={k} lambda={l}: output grids differ"));
            }
            for i in 0..cart.len() {
                let n = cart.u1[i].hypot(cart.u2[i]);
                worst = worst.max((n - pr.rho[i]).abs() / pr.rho[i]);
            }
        }
    }
    let detail = format!("{} channels, max relative |u| gap {worst:.2e}", negative.len() * cfg.ks().len());
    if worst <= 1e-6 && !negative.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_4() -> Check {
    let cfg = fixture("theorem1_linear");
    let opts = cfg.check_options();
    let reports = check_theorem1(&cfg.model, &cfg.lambdas(), &cfg.ks(), &opts).map_err(|e| e.to_string())?;
    let bad: Vec<String> = reports
        .iter()
        .filter(|r| r.verdict != Verdict::Satisfied)
        .map(|r| format!("{} {:?}", r.condition_id, r.verdict))
        .collect();
    if !bad.is_empty() {
        return Err(format!("hypotheses not satisfied: {}", bad.join(", ")));
    }
    let sec = cfg.boundedness;
    let chans = channels(&cfg);
    let results: Vec<Result<(usize, f64), String>> = chans
        .par_iter()
        .enumerate()
        .map(|(i, (label, ch))| {
            let ch = ch.as_ref();
            let prop2 = check_prop2(&ch, &opts);
            if let Some(r) = prop2.iter().find(|r| r.verdict != Verdict::Satisfied) {
                return Err(format!("{label}: {} {:?}", r.condition_id, r.verdict));
            }
            let r0 = dominance_radius(&ch, sec.r0, 0.5, sec.r_end).ok_or(format!("{label}: W/Q <= 1/2 never reached"))?;
            let scfg = SolveConfig {
                r_start: r0,
                r_end: sec.r_end,
                ..cfg.solver
            };
            let traj = integrate_cartesian(&ch, [1.0, 0.0], &scfg).map_err(|e| e.to_string())?;
            let trace = r_trace(&ch, &traj).map_err(|e| e.to_string())?;
            let pairs = geometric_pairs(r0, sec.r_end, 32);
            let verdicts = almost_monotone_check(&trace, &traj, &pairs);
            if let Some(v) = verdicts.iter().find(|v| !v.holds) {
                return Err(format!("{label}: almost-monotone pair fails: {v:?}"));
            }
            let cert = comparability_constant(&ch, r0, sec.r_end, &cfg.solver, &opts, cfg.seed + i as u64)
                .map_err(|e| format!("{label}: {e}"))?;
            if !(cert.certified && cert.spot_checks.len() == 8 && cert.c.is_finite()) {
                return Err(format!(
                    "{label}: certified {} with {} spot checks, C = {}",
                    cert.certified,
                    cert.spot_checks.len(),
                    cert.c
                ));
            }
            Ok((verdicts.len(), cert.c))
        })
        .collect();
    let mut pairs = 0;
    let mut worst_c = 0.0f64;
    for r in results {
        let (n, c) = r?;
        pairs += n;
        worst_c = worst_c.max(c);
    }
    Ok(format!(
        "{} reports satisfied, {pairs} pairs hold on {} channels, largest C = {worst_c:.4}",
        reports.len(),
        chans.len()
    ))
}

fn criterion_5() -> Check {
    let cfg = fixture("theorem2_linear");
    let rep = energy_report(&cfg.model, 1, -1.0, &cfg)
        .ok_or("no report at lambda = -1")?
        .map_err(|e| e.to_string())?;
    if rep.classification != Classification::NoSubordinate || !(rep.liminf_estimate > 0.0) {
        return Err(format!("{:?} with liminf {}", rep.classification, rep.liminf_estimate));
    }
    let census = rep.census.ok_or("no census at lambda = -1")?;
    if census.count(IntervalKind::J) < 50 || census.count(IntervalKind::K) < 50 {
        return Err(format!(
            "census too short: {} J and {} K intervals",
            census.count(IntervalKind::J),
            census.count(IntervalKind::K)
        ));
    }
    if let Some(i) = census
        .intervals
        .iter()
        .filter(|i| i.n <= 50)
        .find(|i| !(PI / 3.0..=PI).contains(&i.length))
    {
        return Err(format!("interval out of [pi/3, pi]: {i:?}"));
    }

    let opts = cfg.eigen_options();
    let base = eigen_shoot(&cfg.model, 1, (0.0, 5.0), &opts).map_err(|e| e.to_string())?.values();
    let mut halved = opts;
    halved.solve = opts.solve.with_tolerances(opts.solve.rtol / 2.0, opts.solve.atol / 2.0);
    let tight = eigen_shoot(&cfg.model, 1, (0.0, 5.0), &halved).map_err(|e| e.to_string())?.values();
    if base.is_empty() {
        return Err("no eigenvalue in (0, 5]".into());
    }
    if base.len() != tight.len() {
        return Err(format!("{base:?} vs {tight:?} under tolerance halving"));
    }
    let shift = base.iter().zip(&tight).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let detail = format!(
        "liminf {:.4}, census intervals in [pi/3, pi], eigenvalues {base:.6?} shift {shift:.1e}",
        rep.liminf_estimate
    );
    if shift <= 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_6() -> Check {
    let cfg = fixture("remark2");
    let results = run_instances(200, cfg.bv.grid_points, cfg.seed).map_err(|e| e.to_string())?;
    let fails: Vec<usize> = results.iter().filter(|r| !(r.product.holds && r.quotient.holds)).map(|r| r.index).collect();
    if !fails.is_empty() {
        return Err(format!("inequalities fail on instances {fails:?}"));
    }
    let jordan = results.iter().map(|r| r.jordan_residual).fold(0.0, f64::max);
    if !results.iter().all(|r| r.jordan_holds) || jordan > 1e-12 || JORDAN_TOL > 1e-12 {
        return Err(format!("Jordan identities: max residual {jordan:.2e}"));
    }
    let ladder = Ladder::geometric(cfg.bv.tail_start, cfg.ladder.rungs.len().max(2)).map_err(|e| e.to_string())?;
    let tri = lambda_trichotomy_on(&cfg.model, &[0.0, 1.0], &ladder, &cfg.thresholds).map_err(|e| e.to_string())?;
    let trend = |l: f64| tri.probes.iter().find(|p| p.lambda == l).map(|p| p.trend);
    if trend(0.0) != Some(Trend::Converged) || trend(1.0) != Some(Trend::Growing) {
        return Err(format!("trichotomy trends: lambda 0 {:?}, lambda 1 {:?}", trend(0.0), trend(1.0)));
    }
    Ok(format!(
        "{} instances hold, Jordan residual {jordan:.1e}, lambda 0 converged and lambda 1 growing",
        results.len()
    ))
}

fn criterion_7() -> Check {
    let mut cfg = fixture("theorem2_linear");
    cfg.asymptotics.windows = Some(vec![[10.0, 20.0], [100.0, 200.0]]);
    if cfg.asymptotics.strides.len() < 4 {
        return Err(format!("{} strides give fewer than three halvings", cfg.asymptotics.strides.len()));
    }
    let res = asymptotics_one(&cfg.model, 1, -1.0, &cfg).map_err(|e| e.to_string())?;
    let w = &res.comparison.windows;
    let (near, far) = match (w.first().and_then(|x| x.residual), w.last().and_then(|x| x.residual)) {
        (Some(a), Some(b)) if w.len() == 2 => (a, b),
        _ => return Err(format!("windows without residual: {w:?}")),
    };
    let orders_ok = res.orders.len() >= 3 && res.orders.iter().all(|o| (o - 2.0).abs() <= 0.2);
    let detail = format!("residual [10, 20] {near:.3e}, [100, 200] {far:.3e}, orders {:.3?}", res.orders);
    if far < near && orders_ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn envelope_ok(t: &Trajectory) -> Result<(), String> {
    if t.mode != Mode::Pruefer {
        return Ok(());
    }
    if t.stats.envelope_checked < t.stats.accepted || t.stats.envelope_excess > ENVELOPE_TOL {
        return Err(format!(
            "{} of {} steps checked, excess {:.2e}",
            t.stats.envelope_checked, t.stats.accepted, t.stats.envelope_excess
        ));
    }
    Ok(())
}

fn criterion_8() -> Check {
    let mut steps = 0usize;
    let mut worst = 0.0f64;
    for name in FIXTURES {
        let cfg = fixture(name);
        for (label, ch) in channels(&cfg) {
            for fixed in [Some(Mode::Pruefer), None] {
                let trajs = solve_channel(ch.as_ref(), cfg.solve.u0, fixed, &cfg.solver).map_err(|e| e.to_string())?;
                for t in &trajs {
                    envelope_ok(t).map_err(|e| format!("{name} {label}: {e}"))?;
                    if t.mode == Mode::Pruefer {
                        steps += t.stats.accepted;
                        worst = worst.max(t.stats.envelope_excess);
                    }
                }
            }
        }
    }

    let cfg = fixture("theorem2_linear");
    let (r_from, r_end) = (cfg.solver.r_start, cfg.solver.r_end);
    let mut slope = (f64::INFINITY, f64::NEG_INFINITY);
    let mut guarded = 0;
    for k in cfg.ks() {
        for l in cfg.lambdas().into_iter().filter(|l| *l < 0.0) {
            let tc = transform(&cfg.model, k, l, &[r_from, r_end]).map_err(|e| e.to_string())?;
            let rc = guard_radius(&tc, r_from, 0.5, r_end).ok_or(format!("k={k} lambda={l}: no guarded range"))?;
            let lattice = ((r_end - rc) / 0.05).floor() as usize;
            if let Some(r) = (0..=lattice).map(|i| rc + 0.05 * i as f64).find(|&r| {
                let c = tc.at(r);
                !(c.q > 0.0 && (c.l / c.q).abs() <= 0.5)
            }) {
                return Err(format!("k={k} lambda={l}: |L/Q| > 1/2 at r = {r} past the guard {rc}"));
            }
            let t = integrate_pruefer_between(&tc, 1.0, 0.0, rc, r_end, &cfg.solver).map_err(|e| e.to_string())?;
            envelope_ok(&t).map_err(|e| format!("transformed k={k} lambda={l}: {e}"))?;
            let s = s_reparam(&tc, &t).map_err(|e| e.to_string())?;
            for d in &s.dtheta_ds {
                slope = (slope.0.min(*d), slope.1.max(*d));
            }
            guarded += 1;
        }
    }
    let detail = format!(
        "{steps} Pruefer steps, worst excess {worst:.1e}; {guarded} guarded ranges with Theta' in [{:.4}, {:.4}]",
        slope.0, slope.1
    );
    if guarded > 0 && slope.0 >= 0.5 && slope.1 <= 1.5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scratch(label: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("radial-dirac-acceptance-{}-{label}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run_scan(fixture_name: &str, out: &Path, workers: usize) -> Result<(Vec<u8>, Vec<u8>), String> {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{fixture_name}.json"));
    let status = Command::new(env!("CARGO_BIN_EXE_radial-dirac"))
        .args(["scan", "--seed", "7", "--workers", &workers.to_string(), "--config"])
        .arg(&config)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!("{fixture_name}: exit {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr)));
    }
    let read = |f: &str| std::fs::read(out.join(f)).map_err(|e| format!("{f}: {e}"));
    Ok((read("scan.csv")?, read("scan.json")?))
}

fn criterion_9() -> Check {
    let mut checked = Vec::new();
    for (name, workers) in [("theorem1_linear", [1, 3]), ("theorem2_linear", [2, 2])] {
        let (a, b) = (scratch(&format!("{name}-a")), scratch(&format!("{name}-b")));
        let first = run_scan(name, &a, workers[0])?;
        let second = run_scan(name, &b, workers[1])?;
        let _ = std::fs::remove_dir_all(&a);
        let _ = std::fs::remove_dir_all(&b);
        if first != second {
            return Err(format!("{name}: outputs differ between runs"));
        }
        checked.push(format!("{name} (workers {} and {})", workers[0], workers[1]));
    }
    Ok(format!("scan.csv and scan.json identical for {}", checked.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [(usize, fn() -> Check); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut failures = 0;
    for (n, f) in criteria {
        let start = Instant::now();
        let verdict = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(d) => println!("criterion {n}: PASS ({secs:.1} s) {d}"),
            Err(d) => {
                failures += 1;
                println!("criterion {n}: FAIL ({secs:.1} s) {d}");
            }
        }
    }
    println!("acceptance: {} of 9 criteria pass", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
