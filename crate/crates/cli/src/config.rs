//! Run configuration shared by every subcommand.
//!
//! A configuration is one JSON document. Unknown keys are rejected at every
//! level, and parse errors carry the JSON path of the offending field.

use std::fs;
use std::path::{Path, PathBuf};

use radial_dirac::hypotheses::CheckOptions;
use radial_dirac::ladder::{Ladder, TrendThresholds};
use radial_dirac::solver::{Mode, SolveConfig};
use radial_dirac::subordinacy::{ClassifyOptions, EigenOptions, DELTA};
use radial_dirac::{CoefficientModel, ConstantChannel};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: CoefficientModel,
    pub k_set: Vec<i32>,
    pub lambda_grid: Vec<f64>,
    #[serde(default)]
    pub solver: SolveConfig,
    #[serde(default)]
    pub ladder: Ladder,
    #[serde(default)]
    pub thresholds: TrendThresholds,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Closed energy interval where absolutely continuous spectrum is
    /// expected; drives assertion mode for `subordinacy`, `scan`, `eigen`.
    #[serde(default)]
    pub expect_ac: Option<[f64; 2]>,
    /// Replaces the model channels in `solve` and `boundedness`.
    #[serde(default)]
    pub constant_channel: Option<ConstantSpec>,
    #[serde(default)]
    pub solve: SolveSection,
    #[serde(default)]
    pub boundedness: BoundednessSection,
    #[serde(default)]
    pub subordinacy: SubordinacySection,
    #[serde(default)]
    pub eigen: EigenSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub asymptotics: AsymptoticsSection,
    #[serde(default)]
    pub bv: BvSection,
}

/// Constant coefficients `(Q, M, L)`; `Q` already contains the energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantSpec {
    pub q: f64,
    pub m: f64,
    pub l: f64,
}

impl ConstantSpec {
    pub fn channel(&self) -> ConstantChannel {
        ConstantChannel::new(self.q, self.m, self.l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeChoice {
    /// Cartesian until `Q > 10 W`, Prüfer beyond.
    #[default]
    Auto,
    Cartesian,
    Pruefer,
}

impl ModeChoice {
    pub fn fixed(self) -> Option<Mode> {
        match self {
            ModeChoice::Auto => None,
            ModeChoice::Cartesian => Some(Mode::Cartesian),
            ModeChoice::Pruefer => Some(Mode::Pruefer),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSection {
    pub mode: ModeChoice,
    pub u0: [f64; 2],
}

impl Default for SolveSection {
    fn default() -> Self {
        SolveSection {
            mode: ModeChoice::Auto,
            u0: [1.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundednessSection {
    /// Left end; the dominance radius `W/Q <= 1/2` is used when larger.
    pub r0: f64,
    pub r_end: f64,
    /// Points of the geometric grid whose pairs are tested.
    pub grid_points: usize,
}

impl Default for BoundednessSection {
    fn default() -> Self {
        BoundednessSection {
            r0: 1.0,
            r_end: 200.0,
            grid_points: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubordinacySection {
    pub r0: f64,
    /// Right end for negative energies.
    pub r_end: f64,
    /// Right end for positive energies.
    pub positive_r_end: f64,
    pub delta: f64,
}

impl Default for SubordinacySection {
    fn default() -> Self {
        SubordinacySection {
            r0: 1.0,
            r_end: 200.0,
            positive_r_end: 8.0,
            delta: DELTA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenSection {
    /// Defaults to `(0, max positive lambda_grid]`.
    pub bracket: Option<[f64; 2]>,
    pub lambda_floor: f64,
    pub decay_exponent: f64,
    pub tol: f64,
}

impl Default for EigenSection {
    fn default() -> Self {
        let d = EigenOptions::default();
        EigenSection {
            bracket: None,
            lambda_floor: d.lambda_floor,
            decay_exponent: d.decay_exponent,
            tol: d.tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub r_start: f64,
    pub r_end: f64,
    pub ratio_r_end: f64,
    pub positive_r_end: f64,
    pub delta: f64,
    pub eigen: bool,
}

impl Default for ScanSection {
    fn default() -> Self {
        let d = ClassifyOptions::default();
        ScanSection {
            r_start: d.r_start,
            r_end: d.r_end,
            ratio_r_end: d.ratio_r_end,
            positive_r_end: d.positive_r_end,
            delta: d.delta,
            eigen: d.eigen,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AsymptoticsSection {
    pub u0: [f64; 2],
    pub r_start: f64,
    pub r_end: f64,
    /// Projection windows; octaves from `4 r_start` when absent.
    pub windows: Option<Vec<[f64; 2]>>,
    pub amplitude: radial_dirac::asymptotics::Amplitude,
    /// Strides of the second-order defect study, each half the previous.
    pub strides: Vec<f64>,
    /// Right end of the defect study.
    pub defect_r_end: f64,
}

impl Default for AsymptoticsSection {
    fn default() -> Self {
        AsymptoticsSection {
            u0: [1.0, 0.3],
            r_start: 1.0,
            r_end: 200.0,
            windows: None,
            amplitude: Default::default(),
            strides: vec![0.02, 0.01, 0.005, 0.0025],
            defect_r_end: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BvSection {
    /// Random piecewise-smooth instances for the inequality checks.
    pub instances: usize,
    pub grid_points: usize,
    /// Tail start of the energy trichotomy ladder.
    pub tail_start: f64,
}

impl Default for BvSection {
    fn default() -> Self {
        BvSection {
            instances: 200,
            grid_points: 2000,
            tail_start: 25.0,
        }
    }
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("at `{path}`: {}", e.inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.k_set.is_empty() {
            return bad("`k_set` must be nonempty".into());
        }
        if self.k_set.contains(&0) {
            return bad("`k_set` must not contain 0".into());
        }
        if self.lambda_grid.is_empty() {
            return bad("`lambda_grid` must be nonempty".into());
        }
        if let Some(l) = self.lambda_grid.iter().find(|l| !l.is_finite()) {
            return bad(format!("`lambda_grid` contains non-finite value {l}"));
        }
        self.solver.validate().map_err(|e| CliError::Config(format!("`solver`: {e}")))?;
        self.ladder.validate().map_err(|e| CliError::Config(format!("`ladder`: {e}")))?;
        if self.workers == Some(0) {
            return bad("`workers` must be positive".into());
        }
        if let Some([a, b]) = self.expect_ac {
            if !(a <= b) {
                return bad(format!("`expect_ac` must satisfy lo <= hi, got [{a}, {b}]"));
            }
        }
        if let Some([a, b]) = self.eigen.bracket {
            if !(a < b) {
                return bad(format!("`eigen.bracket` must satisfy lo < hi, got [{a}, {b}]"));
            }
        }
        if self.asymptotics.strides.windows(2).any(|w| !(w[1] < w[0])) {
            return bad("`asymptotics.strides` must decrease".into());
        }
        if self.boundedness.grid_points < 2 {
            return bad("`boundedness.grid_points` must be at least 2".into());
        }
        if self.bv.grid_points < 2 {
            return bad("`bv.grid_points` must be at least 2".into());
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(p) = &o.out {
            self.output_dir = Some(p.clone());
        }
        if let Some(w) = o.workers {
            self.workers = Some(w);
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.tolerance {
            self.solver = self.solver.with_tolerances(t, t * 1e-2);
        }
        self.validate()
    }

    pub fn check_options(&self) -> CheckOptions {
        CheckOptions {
            ladder: self.ladder.clone(),
            thresholds: self.thresholds,
        }
    }

    pub fn classify_options(&self) -> ClassifyOptions {
        ClassifyOptions {
            solve: self.solver,
            r_start: self.scan.r_start,
            r_end: self.scan.r_end,
            ratio_r_end: self.scan.ratio_r_end,
            positive_r_end: self.scan.positive_r_end,
            delta: self.scan.delta,
            seed: self.seed,
            eigen: self.scan.eigen,
        }
    }

    pub fn eigen_options(&self) -> EigenOptions {
        EigenOptions {
            solve: self.solver,
            lambda_floor: self.eigen.lambda_floor,
            decay_exponent: self.eigen.decay_exponent,
            tol: self.eigen.tol,
            ..EigenOptions::default()
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Sorted, deduplicated `k_set`.
    pub fn ks(&self) -> Vec<i32> {
        let mut v = self.k_set.clone();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Sorted, deduplicated `lambda_grid`.
    pub fn lambdas(&self) -> Vec<f64> {
        let mut v = self.lambda_grid.clone();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    pub fn expects_ac(&self, lambda: f64) -> bool {
        self.expect_ac.is_some_and(|[a, b]| a <= lambda && lambda <= b)
    }
}
