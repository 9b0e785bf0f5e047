//! Spectral classification per channel.
//!
//! For `m == q` the negative half-line is probed with mass ratios of two
//! solutions and the rescaled phase census; positive energies get the
//! decaying solution and shooting for eigenvalues. Otherwise every channel
//! gets a boundedness certificate.

mod census;
mod eigen;
mod ratio;
mod transform;

pub use census::{theta_census, Census, CensusInterval, IntervalKind, GUARD};
pub use eigen::{eigen_shoot, interlacing_counts, wrapped, EigenOptions, EigenReport, Eigenvalue, Shooter};
pub use ratio::{
    decaying_data, recessive_angle, subordinacy_ratio, Classification, DecayFit, Orientation, RatioOptions,
    SubordinacyReport, DECAY_R2, DELTA, DEPENDENCE_TOL, LADDER_POINTS,
};
pub use transform::{guard_radius, l_over_q_windows, transform, TransformedChannel};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundedness::{comparability_constant, dominance_radius, BoundednessCertificate};
use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::hypotheses::{self, CheckOptions, HypothesisReport, Verdict};
use crate::solver::SolveConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Path {
    /// Boundedness of all solutions.
    Boundedness,
    /// `m == q`: subordinacy on the negative half-line.
    MassEqualsPotential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellCode {
    AcCandidate,
    Subordinate,
    Inconclusive,
    Excluded,
    Error,
}

impl CellCode {
    pub fn as_str(self) -> &'static str {
        match self {
            CellCode::AcCandidate => "ac-candidate",
            CellCode::Subordinate => "subordinate",
            CellCode::Inconclusive => "inconclusive",
            CellCode::Excluded => "excluded",
            CellCode::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub k: i32,
    pub lambda: f64,
    pub code: CellCode,
    /// Some hypothesis relevant to the cell is reported violated.
    pub heuristic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<BoundednessCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subordinacy: Option<SubordinacyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSummary {
    pub k: i32,
    /// Energies classified `ac-candidate`.
    pub ac_lambdas: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigen: Option<EigenReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMap {
    pub path: Path,
    pub hypotheses: Vec<HypothesisReport>,
    /// Sorted by `(k, lambda)`.
    pub cells: Vec<Cell>,
    pub summary: Vec<KSummary>,
}

impl SpectrumMap {
    pub fn cell(&self, k: i32, lambda: f64) -> Option<&Cell> {
        self.cells.iter().find(|c| c.k == k && c.lambda == lambda)
    }

    /// Matrix with one row per `k` and one column per `lambda`; heuristic
    /// cells carry a trailing `*`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut lambdas: Vec<f64> = self.cells.iter().map(|c| c.lambda).collect();
        lambdas.sort_by(f64::total_cmp);
        lambdas.dedup();
        let mut ks: Vec<i32> = self.cells.iter().map(|c| c.k).collect();
        ks.dedup();
        write!(out, "k")?;
        for l in &lambdas {
            write!(out, ",{l}")?;
        }
        writeln!(out)?;
        for k in ks {
            write!(out, "{k}")?;
            for l in &lambdas {
                match self.cell(k, *l) {
                    Some(c) => write!(out, ",{}{}", c.code.as_str(), if c.heuristic { "*" } else { "" })?,
                    None => write!(out, ",")?,
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyOptions {
    pub solve: SolveConfig,
    /// Left end of every solve.
    pub r_start: f64,
    /// Right end of the boundedness solves.
    pub r_end: f64,
    /// Right end of the mass ratios for `lambda < 0`.
    pub ratio_r_end: f64,
    /// Right end of the mass ratios for `lambda > 0`.
    pub positive_r_end: f64,
    pub delta: f64,
    pub seed: u64,
    /// Shoot for eigenvalues up to the largest positive grid energy.
    pub eigen: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            solve: SolveConfig::default(),
            r_start: 1.0,
            r_end: 200.0,
            ratio_r_end: 200.0,
            positive_r_end: 8.0,
            delta: DELTA,
            seed: 0,
            eigen: true,
        }
    }
}

fn probe(opts: &ClassifyOptions) -> [f64; 4] {
    let a = opts.r_start;
    let b = opts.r_end.max(opts.ratio_r_end);
    [a, 0.5 * (a + b), b, 2.0 * b]
}

fn any_violated<'a, I: IntoIterator<Item = &'a HypothesisReport>>(reports: I) -> bool {
    reports.into_iter().any(|r| r.verdict == Verdict::Violated)
}

/// Per-`(k, lambda)` spectral evidence. Cells run in parallel and are merged
/// in `(k, lambda)` order.
pub fn classify_spectrum(
    model: &CoefficientModel,
    k_set: &[i32],
    lambda_grid: &[f64],
    check: &CheckOptions,
    opts: &ClassifyOptions,
) -> Result<SpectrumMap> {
    if k_set.contains(&0) {
        return Err(Error::ZeroAngularNumber);
    }
    let mut ks = k_set.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut lambdas = lambda_grid.to_vec();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let path = if model.check_mass_equals_potential(&probe(opts)).is_ok() {
        Path::MassEqualsPotential
    } else {
        Path::Boundedness
    };
    if ks.is_empty() {
        return Ok(SpectrumMap {
            path,
            hypotheses: Vec::new(),
            cells: Vec::new(),
            summary: Vec::new(),
        });
    }
    let mut hyps = match path {
        Path::Boundedness => hypotheses::check_theorem1(model, &lambdas, &ks, check)?,
        Path::MassEqualsPotential => hypotheses::check_theorem2(model, check)?,
    };
    if path == Path::MassEqualsPotential {
        for &l in lambdas.iter().filter(|l| **l < 0.0) {
            match hypotheses::gamma_diagnostics(model, l, check) {
                Ok(r) => hyps.push(r),
                Err(e) => hyps.push(HypothesisReport::inconclusive("Lemma1", &check.ladder, e.to_string()).with_lambda(l)),
            }
        }
    }
    let model_level_violated = any_violated(hyps.iter().filter(|r| r.k.is_none() && r.lambda.is_none()));

    let pairs: Vec<(usize, i32, usize, f64)> = ks
        .iter()
        .enumerate()
        .flat_map(|(ki, &k)| lambdas.iter().enumerate().map(move |(li, &l)| (ki, k, li, l)))
        .collect();
    let mut cells: Vec<Cell> = pairs
        .par_iter()
        .map(|&(ki, k, li, lambda)| {
            let own = hyps
                .iter()
                .filter(|r| r.lambda == Some(lambda) && r.k.is_none_or(|rk| rk == k));
            let heuristic = model_level_violated || any_violated(own);
            let seed = opts.seed.wrapping_add((ki as u64) << 32 | li as u64);
            let mut cell = match path {
                Path::Boundedness => boundedness_cell(model, k, lambda, check, opts, seed),
                Path::MassEqualsPotential => subordinacy_cell(model, k, lambda, opts),
            };
            cell.heuristic = heuristic;
            cell
        })
        .collect();
    cells.sort_by(|a, b| a.k.cmp(&b.k).then(a.lambda.total_cmp(&b.lambda)));

    let top = lambdas.iter().copied().filter(|l| *l > 0.0).fold(f64::NAN, f64::max);
    let summary = ks
        .par_iter()
        .map(|&k| {
            let ac_lambdas = cells
                .iter()
                .filter(|c| c.k == k && c.code == CellCode::AcCandidate)
                .map(|c| c.lambda)
                .collect();
            let eigen = (path == Path::MassEqualsPotential && opts.eigen && top > 0.0)
                .then(|| {
                    eigen_shoot(
                        model,
                        k,
                        (0.0, top),
                        &EigenOptions {
                            solve: opts.solve,
                            ..EigenOptions::default()
                        },
                    )
                    .ok()
                })
                .flatten();
            KSummary { k, ac_lambdas, eigen }
        })
        .collect();
    Ok(SpectrumMap {
        path,
        hypotheses: hyps,
        cells,
        summary,
    })
}

fn empty_cell(k: i32, lambda: f64, code: CellCode) -> Cell {
    Cell {
        k,
        lambda,
        code,
        heuristic: false,
        certificate: None,
        subordinacy: None,
        message: None,
    }
}

fn failed(k: i32, lambda: f64, code: CellCode, e: Error) -> Cell {
    Cell {
        message: Some(e.to_string()),
        ..empty_cell(k, lambda, code)
    }
}

fn boundedness_cell(model: &CoefficientModel, k: i32, lambda: f64, check: &CheckOptions, opts: &ClassifyOptions, seed: u64) -> Cell {
    let channel = match model.channel(k, lambda) {
        Ok(c) => c,
        Err(e) => return failed(k, lambda, CellCode::Error, e),
    };
    let Some(r0) = dominance_radius(&channel, opts.r_start, 0.5, opts.r_end) else {
        let mut c = empty_cell(k, lambda, CellCode::Inconclusive);
        c.message = Some("W/Q <= 1/2 never reached".into());
        return c;
    };
    match comparability_constant(&channel, r0, opts.r_end, &opts.solve, check, seed) {
        Ok(cert) => Cell {
            code: if cert.certified { CellCode::AcCandidate } else { CellCode::Inconclusive },
            certificate: Some(cert),
            ..empty_cell(k, lambda, CellCode::Inconclusive)
        },
        Err(e @ Error::CertificateRefused(_)) => failed(k, lambda, CellCode::Inconclusive, e),
        Err(e) => failed(k, lambda, CellCode::Error, e),
    }
}

fn subordinacy_cell(model: &CoefficientModel, k: i32, lambda: f64, opts: &ClassifyOptions) -> Cell {
    if lambda == 0.0 {
        return empty_cell(k, lambda, CellCode::Excluded);
    }
    let ropts = RatioOptions {
        solve: opts.solve,
        delta: opts.delta,
        ..RatioOptions::default()
    };
    let report = if lambda < 0.0 {
        subordinacy_ratio(model, k, lambda, [1.0, 0.0], [0.0, 1.0], opts.r_start, opts.ratio_r_end, &ropts)
    } else {
        decaying_data(model, k, lambda, opts.r_start, opts.positive_r_end, &opts.solve).and_then(|d| {
            subordinacy_ratio(model, k, lambda, d, [-d[1], d[0]], opts.r_start, opts.positive_r_end, &ropts)
        })
    };
    match report {
        Ok(rep) => Cell {
            code: match rep.classification {
                Classification::NoSubordinate => CellCode::AcCandidate,
                Classification::SubordinateFound => CellCode::Subordinate,
                Classification::Inconclusive => CellCode::Inconclusive,
            },
            subordinacy: Some(rep),
            ..empty_cell(k, lambda, CellCode::Inconclusive)
        },
        Err(e) => failed(k, lambda, CellCode::Error, e),
    }
}
