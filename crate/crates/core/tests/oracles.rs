use std::f64::consts::PI;

use radial_dirac::asymptotics::{compare_asymptotics, second_order_check, wkb_reference, Amplitude};
use radial_dirac::coefficients::{Channel, CoefficientModel, Profile};
use radial_dirac::hypotheses::{check_corollary1, check_prop2, check_theorem1, CheckOptions, Verdict};
use radial_dirac::bvcalc::{lambda_trichotomy_probe, TrichotomyPattern};
use radial_dirac::ladder::{Ladder, Trend};
use radial_dirac::solver::{integrate_cartesian, integrate_cartesian_between, integrate_pruefer_between, s_reparam, SolveConfig};
use radial_dirac::subordinacy::{
    classify_spectrum, eigen_shoot, interlacing_counts, l_over_q_windows, subordinacy_ratio, theta_census, transform,
    CellCode, Classification, ClassifyOptions, EigenOptions, IntervalKind, RatioOptions,
};

fn linear_equal() -> CoefficientModel {
    CoefficientModel::new(Profile::power(1.0, 1.0), Profile::power(1.0, 1.0)).unwrap()
}

fn linear_unit_mass() -> CoefficientModel {
    CoefficientModel::new(Profile::power(1.0, 1.0), Profile::constant(1.0)).unwrap()
}

#[test]
fn rescaled_solution_solves_transformed_channel() {
    let m = linear_equal();
    let ch = m.channel(1, -1.0).unwrap();
    let tc = transform(&m, 1, -1.0, &[1.0]).unwrap();
    let cfg = SolveConfig::range(1.0, 20.0);
    let u = integrate_cartesian(&ch, [0.4, -0.9], &cfg).unwrap();
    let v = integrate_cartesian(&tc, tc.forward(1.0, u.u(0)), &cfg).unwrap();
    for i in 0..u.len() {
        let mapped = tc.forward(u.grid[i], u.u(i));
        let n = mapped[0].hypot(mapped[1]);
        assert!((mapped[0] - v.u1[i]).abs() <= 1e-6 * n && (mapped[1] - v.u2[i]).abs() <= 1e-6 * n);
    }
}

#[test]
fn census_first_fifty_in_bounds() {
    let m = linear_equal();
    let tc = transform(&m, 1, -1.0, &[1.0]).unwrap();
    let traj = integrate_pruefer_between(&tc, 1.0, 0.2, 1.0, 40.0, &SolveConfig::default()).unwrap();
    let c = theta_census(&s_reparam(&tc, &traj).unwrap()).unwrap();
    assert!(c.count(IntervalKind::J) >= 50 && c.count(IntervalKind::K) >= 50);
    let resolution = traj.grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
        * traj.coeffs.iter().map(|p| p.q).fold(0.0, f64::max);
    for i in c.intervals.iter().filter(|i| i.n <= 50) {
        assert!(i.length >= PI / 3.0 && i.length <= PI, "{i:?}");
        assert!(i.length >= PI / 3.0 - 1.5 * resolution);
    }
    assert!(c.min_dtheta_ds >= 0.5 && c.max_dtheta_ds <= 1.5);
}

#[test]
fn angular_ratio_decays_along_ladder() {
    let m = linear_equal();
    let tc = transform(&m, 1, -1.0, &[1.0]).unwrap();
    let w = l_over_q_windows(&tc, &Ladder::default());
    assert!(w.last().unwrap() < w.first().unwrap());
    assert!(*w.first().unwrap() < 0.5);
}

#[test]
fn negative_energy_ratio_against_tighter_solve() {
    let m = linear_equal();
    let rep = subordinacy_ratio(&m, 1, -1.0, [1.0, 0.0], [0.0, 1.0], 1.0, 400.0, &RatioOptions::default()).unwrap();
    let tight = RatioOptions {
        solve: SolveConfig::default().with_tolerances(1e-13, 1e-15),
        ..RatioOptions::default()
    };
    let oracle = subordinacy_ratio(&m, 1, -1.0, [1.0, 0.0], [0.0, 1.0], 1.0, 400.0, &tight).unwrap();
    assert_eq!(rep.classification, Classification::NoSubordinate);
    assert!(rep.liminf_estimate > 0.0);
    assert!((rep.liminf_estimate - oracle.liminf_estimate).abs() < 1e-6 * oracle.liminf_estimate);
    for ((r, a), (_, b)) in rep.ratio_tail.iter().zip(&rep.reverse_tail) {
        assert!(*a > 0.0 && *b > 0.0);
        assert!((a * b - 1.0).abs() <= 4.0 * f64::EPSILON, "r = {r}");
    }
    let census = rep.census.unwrap();
    assert!(census.violations.is_empty());
    assert!(rep.liminf_estimate >= rep.lower_bound.unwrap());
}

#[test]
fn eigenvalues_are_stable_and_partition_invariant() {
    let m = linear_equal();
    let base = eigen_shoot(&m, 1, (0.0, 5.0), &EigenOptions::default()).unwrap();
    let ev = base.values();
    assert!(!ev.is_empty() && ev.len() < 10);
    let doubled = eigen_shoot(
        &m,
        1,
        (0.0, 5.0),
        &EigenOptions {
            r_match: Some(2.0 * base.r_match),
            ..EigenOptions::default()
        },
    )
    .unwrap()
    .values();
    let tight = eigen_shoot(
        &m,
        1,
        (0.0, 5.0),
        &EigenOptions {
            solve: SolveConfig::default().with_tolerances(5e-13, 5e-15),
            ..EigenOptions::default()
        },
    )
    .unwrap()
    .values();
    let mut halves = eigen_shoot(&m, 1, (0.0, 2.5), &EigenOptions::default()).unwrap().values();
    halves.extend(eigen_shoot(&m, 1, (2.5, 5.0), &EigenOptions::default()).unwrap().values());
    for other in [&doubled, &tight, &halves] {
        assert_eq!(other.len(), ev.len());
        for (a, b) in ev.iter().zip(other.iter()) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}

#[test]
fn spectrum_depends_on_k_through_k_times_k_plus_one() {
    let m = linear_equal();
    let a = eigen_shoot(&m, 1, (0.0, 6.0), &EigenOptions::default()).unwrap().values();
    let b = eigen_shoot(&m, -2, (0.0, 6.0), &EigenOptions::default()).unwrap().values();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-7);
    }
}

#[test]
fn one_wrap_between_eigenvalues() {
    let m = linear_equal();
    let opts = EigenOptions::default();
    let rep = eigen_shoot(&m, -1, (0.0, 8.0), &opts).unwrap();
    assert!(rep.eigenvalues.len() >= 3);
    let counts = interlacing_counts(&m, &rep, 24, &opts).unwrap();
    assert!(counts.iter().all(|c| *c == 1), "{counts:?}");
}

#[test]
fn unit_mass_grid_is_certified() {
    let m = linear_unit_mass();
    let map = classify_spectrum(&m, &[-2, -1, 1, 2], &[-2.0, 0.0, 2.0], &CheckOptions::default(), &ClassifyOptions::default()).unwrap();
    assert_eq!(map.cells.len(), 12);
    for c in &map.cells {
        assert_eq!(c.code, CellCode::AcCandidate, "{c:?}");
        assert!(!c.heuristic);
        assert!(c.certificate.as_ref().unwrap().c.is_finite());
    }
}

#[test]
fn wkb_residual_shrinks_and_defect_is_second_order() {
    let m = linear_equal();
    let ch = m.channel(1, -1.0).unwrap();
    let t = integrate_cartesian(&ch, [1.0, 0.3], &SolveConfig::range(1.0, 200.0).with_stride(0.01)).unwrap();
    let w = wkb_reference(&m, -1.0, &t.grid, Amplitude::Leading).unwrap();
    let c = compare_asymptotics(&t, &w, &[(10.0, 20.0), (100.0, 200.0)]).unwrap();
    assert!(c.windows[1].residual.unwrap() < c.windows[0].residual.unwrap());

    let defects: Vec<f64> = [0.02, 0.01, 0.005, 0.0025]
        .iter()
        .map(|h| {
            let t = integrate_cartesian(&ch, [1.0, 0.3], &SolveConfig::range(1.0, 10.0).with_stride(*h)).unwrap();
            let rep = second_order_check(&t, &m, 1, -1.0).unwrap();
            assert!(rep.first_order_defect < 1e-12);
            rep.defect
        })
        .collect();
    for p in defects.windows(2) {
        let order = (p[0] / p[1]).log2();
        assert!((1.8..=2.2).contains(&order), "{order}");
    }
}

#[test]
fn tabulated_phase_matches_closed_form() {
    let r: Vec<f64> = (1..=400).map(|i| 0.5 * i as f64).collect();
    let tab = CoefficientModel::new(Profile::tabulated(r.clone(), r.clone()).unwrap(), Profile::tabulated(r.clone(), r).unwrap()).unwrap();
    let grid: Vec<f64> = (0..=1000).map(|i| 1.0 + 0.19 * i as f64).collect();
    let w = wkb_reference(&tab, -1.0, &grid, Amplitude::Leading).unwrap();
    for (x, p) in grid.iter().zip(&w.phase) {
        let exact = ((1.0 + 2.0 * x).powf(1.5) - 27f64.sqrt()) / 3.0;
        assert!((p - exact).abs() <= 1e-8 * exact.max(1.0));
    }
}

#[test]
fn corollary_implies_convergent_trichotomy() {
    let m = linear_unit_mass();
    let opts = CheckOptions::default();
    let cor = check_corollary1(&m, &opts);
    assert!(cor.iter().all(|r| r.verdict == Verdict::Satisfied));
    let probe = lambda_trichotomy_probe(&m, &[-3.0, -1.0, 0.0, 1.0, 3.0], 25.0, &opts.thresholds).unwrap();
    assert!(probe.probes.iter().all(|p| p.trend == Trend::Converged), "{probe:?}");
    assert_eq!(probe.pattern, TrichotomyPattern::All);
}

#[test]
fn channel_conditions_follow_from_model_conditions() {
    let m = linear_unit_mass();
    let opts = CheckOptions::default();
    let reports = check_theorem1(&m, &[-1.0, 0.0, 1.0], &[-2, -1, 1, 2], &opts).unwrap();
    assert!(reports.iter().all(|r| r.verdict == Verdict::Satisfied), "{reports:#?}");
    for k in [-2, -1, 1, 2] {
        for l in [-1.0, 0.0, 1.0] {
            let ch = m.channel(k, l).unwrap();
            assert!(check_prop2(&ch, &opts).iter().all(|r| r.verdict == Verdict::Satisfied));
            assert!(ch.at(50.0).w() < ch.at(50.0).q);
        }
    }
}

#[test]
fn backward_solve_returns_ascending_grid() {
    let m = linear_unit_mass();
    let ch = m.channel(1, 0.5).unwrap();
    let t = integrate_cartesian_between(&ch, [1.0, 0.0], 10.0, 2.0, &SolveConfig::default()).unwrap();
    assert!(t.grid.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(*t.grid.last().unwrap(), 10.0);
}
