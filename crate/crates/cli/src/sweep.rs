//! Parameter sweeps: ε-scaling of the negative parts and mode convergence.
//!
//! A sweep spec is a scenario configuration with an extra section
//!
//! ```text
//! [sweep]
//! variable = eps          # or modes
//! values = 0.1, 0.03, 0.01
//! # summary = summary.csv
//! ```
//!
//! Each value gets its own run directory `<variable>_<index>` below the
//! sweep's output directory. Runs execute on the current rayon pool; the
//! summary is assembled afterwards in the order of `values`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thinfilm_core::basis::default_cells;
use thinfilm_core::{uniform_grid, SpectralBasis, SystemParams};

use crate::config::{Document, ScenarioConfig, SweepSection};
use crate::error::{CliError, CliResult};
use crate::output::{fmt_real, hash_line, write_file};
use crate::simulate::{run_scenario, RunOutcome};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const EPS_SUMMARY_HEADER: &str =
    "eps,status,chi_f,chi_g,min_f,min_g,energy,chi_f_over_eps,chi_g_over_sqrt_eps";
pub const MODES_SUMMARY_HEADER: &str = "n_coarse,n_fine,status,profile_diff,coeff_diff";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Eps,
    Modes,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Eps => "eps",
            SweepVariable::Modes => "modes",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub base: ScenarioConfig,
    pub summary: Option<PathBuf>,
}

impl SweepSpec {
    pub fn load(path: &Path, expected: SweepVariable) -> CliResult<Self> {
        let doc = Document::load(path)?;
        Self::from_document(&doc, expected)
    }

    pub fn parse(text: &str, base: &Path, expected: SweepVariable) -> CliResult<Self> {
        Self::from_document(&Document::parse(text, base)?, expected)
    }

    fn from_document(doc: &Document, expected: SweepVariable) -> CliResult<Self> {
        let SweepSection {
            variable,
            values,
            summary,
        } = doc.sweep()?;
        if variable != expected.name() {
            return Err(CliError::Config(format!(
                "[sweep] variable is `{variable}`, this command sweeps `{}`",
                expected.name()
            )));
        }
        validate_values(expected, &values)?;
        Ok(Self {
            variable: expected,
            values,
            base: doc.scenario()?,
            summary,
        })
    }

    /// The scenario for one sweep value.
    pub fn scenario(&self, value: f64) -> ScenarioConfig {
        let mut c = self.base.clone();
        match self.variable {
            SweepVariable::Eps => c.params.eps = value,
            SweepVariable::Modes => {
                // Keep the quadrature tied to the resolution unless it was
                // pinned; the default rule is the only one that scales.
                if c.cells == default_cells(c.modes) {
                    c.cells = default_cells(value as usize);
                }
                c.modes = value as usize;
            }
        }
        c
    }

    pub fn hash(&self) -> String {
        let mut text = self.base.canonical();
        let values: Vec<String> = self.values.iter().map(|v| format!("{v:?}")).collect();
        let _ = write!(text, "\n[sweep]\nvariable = {}\nvalues = {}\n", self.variable.name(), values.join(", "));
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// ε lists must be strictly monotone; mode lists non-decreasing integers
/// (repeating a value is the determinism check).
fn validate_values(variable: SweepVariable, values: &[f64]) -> CliResult<()> {
    let increasing = values.windows(2).all(|w| w[1] > w[0]);
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    match variable {
        SweepVariable::Eps => {
            if !(increasing || decreasing) {
                return Err(CliError::Config("[sweep] eps values must be strictly monotone".into()));
            }
            if let Some(v) = values.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
                return Err(CliError::Config(format!("[sweep] eps value {v} outside (0, 1]")));
            }
        }
        SweepVariable::Modes => {
            if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.fract() == 0.0)) {
                return Err(CliError::Config(format!("[sweep] mode count {v} is not a non-negative integer")));
            }
            if !values.windows(2).all(|w| w[1] >= w[0]) {
                return Err(CliError::Config("[sweep] mode counts must be non-decreasing".into()));
            }
        }
    }
    Ok(())
}

/// One sub-run: its value and the outcome (or the error that prevented it
/// from starting).
pub struct SweepRun {
    pub value: f64,
    pub dir: PathBuf,
    pub outcome: CliResult<RunOutcome>,
}

impl SweepRun {
    pub fn status(&self) -> String {
        match &self.outcome {
            Ok(o) => o.status(),
            Err(e) => format!("failed ({e})"),
        }
        .replace(',', ";")
    }

    fn completed(&self) -> Option<&RunOutcome> {
        self.outcome.as_ref().ok().filter(|o| o.failure.is_none())
    }
}

pub struct SweepResult {
    pub runs: Vec<SweepRun>,
    pub summary_path: PathBuf,
    pub summary: String,
}

fn run_all(spec: &SweepSpec, dir: &Path) -> Vec<SweepRun> {
    spec.values
        .par_iter()
        .enumerate()
        .map(|(i, &value)| {
            let sub = dir.join(format!("{}_{i}", spec.variable.name()));
            let outcome = run_scenario(&spec.scenario(value), &sub);
            SweepRun {
                value,
                dir: sub,
                outcome,
            }
        })
        .collect()
}

fn summary_path(spec: &SweepSpec, dir: &Path) -> PathBuf {
    spec.summary.clone().unwrap_or_else(|| dir.join(SUMMARY_FILE))
}

/// ε sweep; one summary row per value in spec order.
pub fn sweep_eps(spec: &SweepSpec, dir: &Path) -> CliResult<SweepResult> {
    let runs = run_all(spec, dir);
    let mut s = format!("{}\n{EPS_SUMMARY_HEADER}\n", hash_line(&spec.hash()));
    for run in &runs {
        let eps = run.value;
        let values = match run.completed() {
            Some(o) => {
                let r = o.final_row();
                [r.chi_f, r.chi_g, r.min_f, r.min_g, r.energy, r.chi_f / eps, r.chi_g / eps.sqrt()]
            }
            None => [f64::NAN; 7],
        };
        let cells: Vec<String> = values.iter().map(|v| fmt_real(*v)).collect();
        let _ = writeln!(s, "{},{},{}", fmt_real(eps), run.status(), cells.join(","));
    }
    let path = summary_path(spec, dir);
    write_file(&path, &s)?;
    Ok(SweepResult {
        runs,
        summary_path: path,
        summary: s,
    })
}

/// Max-norm differences between the final profiles of consecutive
/// resolutions, on the uniform output grid, and between their shared
/// coefficients.
pub fn profile_differences(
    coarse: &RunOutcome,
    fine: &RunOutcome,
    params: &SystemParams,
    points: usize,
) -> CliResult<(f64, f64)> {
    let grid = uniform_grid(params.length, points);
    let eval = |o: &RunOutcome| -> CliResult<(Vec<f64>, Vec<f64>)> {
        let basis = SpectralBasis::with_quadrature(o.final_state.modes(), params.length, 1, 1)?;
        Ok((
            basis.evaluate(&o.final_state.f, &grid, 0)?,
            basis.evaluate(&o.final_state.g, &grid, 0)?,
        ))
    };
    let ((fa, ga), (fb, gb)) = (eval(coarse)?, eval(fine)?);
    let max_diff = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let profile = max_diff(&fa, &fb).max(max_diff(&ga, &gb));
    let (a, b) = (&coarse.final_state, &fine.final_state);
    let coeff = max_diff(&a.f, &b.f).max(max_diff(&a.g, &b.g));
    Ok((profile, coeff))
}

/// Mode-convergence study; one row per consecutive pair of resolutions.
pub fn converge_modes(spec: &SweepSpec, dir: &Path) -> CliResult<SweepResult> {
    let runs = run_all(spec, dir);
    let mut s = format!("{}\n{MODES_SUMMARY_HEADER}\n", hash_line(&spec.hash()));
    for pair in runs.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let (status, diffs) = match (a.completed(), b.completed()) {
            (Some(x), Some(y)) => {
                let d = profile_differences(x, y, &spec.base.params, spec.base.snapshot_points)?;
                ("completed".to_string(), [d.0, d.1])
            }
            _ => {
                let bad = if a.completed().is_none() { a } else { b };
                (bad.status(), [f64::NAN; 2])
            }
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            a.value as usize,
            b.value as usize,
            status,
            fmt_real(diffs[0]),
            fmt_real(diffs[1])
        );
    }
    let path = summary_path(spec, dir);
    write_file(&path, &s)?;
    Ok(SweepResult {
        runs,
        summary_path: path,
        summary: s,
    })
}
