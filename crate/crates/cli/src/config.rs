//! Scenario configuration files.
//!
//! A configuration is a sectioned `key = value` file:
//!
//! ```text
//! [params]
//! R = 1
//! mu = 1
//! L = 1
//! eps = 0.01
//!
//! [discretization]
//! modes = 16
//! # cells = 136            (default 8 (modes + 1))
//!
//! [time]
//! t_final = 0.1
//! # rel_tol = 1e-8, abs_tol = 1e-10, dt_init = 1e-6, dt_min = 1e-14,
//! # energy_slack = <1e-10 max(1, E(0))>, snapshot_every = 0.01,
//! # scheme = rodas3 | dopri5, max_steps = 10000000
//!
//! [initial]
//! f = cosine-bump
//! f.mean = 0.5
//! f.amp = 0.3
//! f.mode = 1
//! g = cosine-bump
//! g.mean = 0.5
//! g.amp = 0.2
//! g.mode = 2
//! # seed = 0
//! # checkpoint = path/to/checkpoint.txt   (start from a saved state)
//!
//! [output]
//! # dir = runs/reference
//! # snapshot_points = 256
//! # checkpoint_at = 0.05, 0.08
//! ```
//!
//! Everything after `#` or `;` at the start of a line is a comment. Unknown
//! sections and keys are rejected so that typos do not silently fall back to
//! defaults. Relative paths are resolved against the directory of the file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ini::Ini;
use sha2::{Digest, Sha256};
use thinfilm_core::basis::default_cells;
use thinfilm_core::{IntegratorControls, Scheme, SystemParams};

use crate::error::{CliError, CliResult};
use crate::profiles::Profile;

pub const DEFAULT_SNAPSHOT_POINTS: usize = 256;

/// A fully resolved scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub params: SystemParams,
    pub modes: usize,
    pub cells: usize,
    pub controls: IntegratorControls,
    pub initial_f: Profile,
    pub initial_g: Profile,
    pub seed: u64,
    /// Start from a saved state instead of the profiles.
    pub resume_from: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub snapshot_points: usize,
    pub checkpoint_at: Vec<f64>,
}

/// Values of a `[sweep]` section.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub variable: String,
    pub values: Vec<f64>,
    pub summary: Option<PathBuf>,
}

const KNOWN: &[(&str, &[&str])] = &[
    ("params", &["R", "mu", "L", "eps"]),
    ("discretization", &["modes", "cells"]),
    (
        "time",
        &[
            "t_final",
            "rel_tol",
            "abs_tol",
            "dt_init",
            "dt_min",
            "energy_slack",
            "snapshot_every",
            "scheme",
            "max_steps",
        ],
    ),
    ("initial", &["f", "g", "seed", "checkpoint"]),
    ("output", &["dir", "snapshot_points", "checkpoint_at"]),
    ("sweep", &["variable", "values", "summary"]),
];

/// Parsed file contents with lookup helpers that produce precise messages.
pub(crate) struct Document {
    ini: Ini,
    base: PathBuf,
}

impl Document {
    pub(crate) fn parse(text: &str, base: &Path) -> CliResult<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| CliError::Config(format!("parse error: {e}")))?;
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if let Some((key, _)) = props.iter().next() {
                    return Err(CliError::Config(format!(
                        "key `{key}` appears before any section header"
                    )));
                }
                continue;
            };
            let Some((_, keys)) = KNOWN.iter().find(|(name, _)| *name == section) else {
                return Err(CliError::Config(format!("unknown section [{section}]")));
            };
            for (key, _) in props.iter() {
                let profile_key = section == "initial"
                    && ["f.", "g."].iter().any(|p| key.starts_with(p));
                if !keys.contains(&key) && !profile_key {
                    return Err(CliError::Config(format!("unknown key `{key}` in [{section}]")));
                }
            }
        }
        Ok(Self {
            ini,
            base: base.to_path_buf(),
        })
    }

    pub(crate) fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    pub(crate) fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.ini.get_from(Some(section), key).map(str::trim)
    }

    fn require(&self, section: &str, key: &str) -> CliResult<&str> {
        self.get(section, key).ok_or_else(|| {
            CliError::Config(format!("missing required key `{key}` in section [{section}]"))
        })
    }

    pub(crate) fn number(&self, section: &str, key: &str) -> CliResult<Option<f64>> {
        self.get(section, key)
            .map(|v| {
                v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| {
                    CliError::Config(format!("[{section}] {key}: `{v}` is not a finite number"))
                })
            })
            .transpose()
    }

    fn required_number(&self, section: &str, key: &str) -> CliResult<f64> {
        self.require(section, key)?;
        Ok(self.number(section, key)?.expect("present"))
    }

    pub(crate) fn integer(&self, section: &str, key: &str) -> CliResult<Option<u64>> {
        self.get(section, key)
            .map(|v| {
                v.parse::<u64>().map_err(|_| {
                    CliError::Config(format!(
                        "[{section}] {key}: `{v}` is not a non-negative integer"
                    ))
                })
            })
            .transpose()
    }

    pub(crate) fn list(&self, section: &str, key: &str) -> CliResult<Option<Vec<f64>>> {
        self.get(section, key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| {
                            CliError::Config(format!(
                                "[{section}] {key}: `{s}` is not a finite number"
                            ))
                        })
                    })
                    .collect()
            })
            .transpose()
    }

    pub(crate) fn path(&self, section: &str, key: &str) -> Option<PathBuf> {
        self.get(section, key).map(|p| self.resolve(p))
    }

    pub(crate) fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub(crate) fn scenario(&self) -> CliResult<ScenarioConfig> {
        let r = self.required_number("params", "R")?;
        let mu = self.required_number("params", "mu")?;
        let length = self.required_number("params", "L")?;
        let eps = self.required_number("params", "eps")?;
        let params = SystemParams::new(r, mu, length, eps)?;

        self.require("discretization", "modes")?;
        let modes = self.integer("discretization", "modes")?.expect("present") as usize;
        let cells = self
            .integer("discretization", "cells")?
            .map_or(default_cells(modes), |c| c as usize);
        if cells == 0 {
            return Err(CliError::Config("[discretization] cells must be positive".into()));
        }

        let defaults = IntegratorControls::default();
        let scheme = match self.get("time", "scheme") {
            Some(s) => Scheme::parse(s).ok_or_else(|| {
                CliError::Config(format!("[time] scheme: unknown scheme `{s}` (use rodas3 or dopri5)"))
            })?,
            None => defaults.scheme,
        };
        let num = |key, default| -> CliResult<f64> { Ok(self.number("time", key)?.unwrap_or(default)) };
        let controls = IntegratorControls {
            t_final: self.required_number("time", "t_final")?,
            rel_tol: num("rel_tol", defaults.rel_tol)?,
            abs_tol: num("abs_tol", defaults.abs_tol)?,
            dt_init: num("dt_init", defaults.dt_init)?,
            dt_min: num("dt_min", defaults.dt_min)?,
            energy_slack: self.number("time", "energy_slack")?,
            snapshot_every: num("snapshot_every", defaults.snapshot_every)?,
            scheme,
            max_steps: self
                .integer("time", "max_steps")?
                .map_or(defaults.max_steps, |v| v as usize),
        };
        controls.validate()?;
        if controls.t_final < 0.0 {
            return Err(CliError::Config("[time] t_final must be non-negative".into()));
        }

        let resume_from = self.path("initial", "checkpoint");
        let (initial_f, initial_g) = if resume_from.is_some() {
            (
                self.optional_profile("f")?.unwrap_or(Profile::Checkpoint),
                self.optional_profile("g")?.unwrap_or(Profile::Checkpoint),
            )
        } else {
            (self.profile("f")?, self.profile("g")?)
        };

        let snapshot_points = self
            .integer("output", "snapshot_points")?
            .map_or(DEFAULT_SNAPSHOT_POINTS, |v| v as usize);
        if snapshot_points < 2 {
            return Err(CliError::Config("[output] snapshot_points must be at least 2".into()));
        }
        let mut checkpoint_at = self.list("output", "checkpoint_at")?.unwrap_or_default();
        checkpoint_at.sort_by(f64::total_cmp);
        checkpoint_at.dedup();

        Ok(ScenarioConfig {
            params,
            modes,
            cells,
            controls,
            initial_f,
            initial_g,
            seed: self.integer("initial", "seed")?.unwrap_or(0),
            resume_from,
            output_dir: self.path("output", "dir"),
            snapshot_points,
            checkpoint_at,
        })
    }

    fn optional_profile(&self, field: &str) -> CliResult<Option<Profile>> {
        if self.get("initial", field).is_none() {
            return Ok(None);
        }
        self.profile(field).map(Some)
    }

    fn profile(&self, field: &str) -> CliResult<Profile> {
        let name = self.require("initial", field)?;
        let param = |key: &str| self.number("initial", &format!("{field}.{key}"));
        Profile::from_parts(name, &param, |p| self.resolve(p))
            .map_err(|e| CliError::Config(format!("[initial] {field}: {e}")))
    }

    pub(crate) fn sweep(&self) -> CliResult<SweepSection> {
        let variable = self.require("sweep", "variable")?.to_string();
        self.require("sweep", "values")?;
        let values = self.list("sweep", "values")?.expect("present");
        if values.is_empty() {
            return Err(CliError::Config("[sweep] values must not be empty".into()));
        }
        Ok(SweepSection {
            variable,
            values,
            summary: self.path("sweep", "summary"),
        })
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        Document::load(path)?.scenario()
    }

    pub fn parse(text: &str, base: &Path) -> CliResult<Self> {
        Document::parse(text, base)?.scenario()
    }

    /// Canonical rendering of every resolved setting that influences the
    /// numbers produced. The output location is deliberately excluded.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        let c = &self.controls;
        let _ = writeln!(s, "[params]\nR = {:?}\nmu = {:?}\nL = {:?}\neps = {:?}", p.r, p.mu, p.length, p.eps);
        let _ = writeln!(s, "\n[discretization]\nmodes = {}\ncells = {}", self.modes, self.cells);
        let _ = writeln!(
            s,
            "\n[time]\nt_final = {:?}\nrel_tol = {:?}\nabs_tol = {:?}\ndt_init = {:?}\ndt_min = {:?}",
            c.t_final, c.rel_tol, c.abs_tol, c.dt_init, c.dt_min
        );
        if let Some(slack) = c.energy_slack {
            let _ = writeln!(s, "energy_slack = {slack:?}");
        }
        let _ = writeln!(
            s,
            "snapshot_every = {:?}\nscheme = {}\nmax_steps = {}",
            c.snapshot_every,
            c.scheme.name(),
            c.max_steps
        );
        let _ = writeln!(s, "\n[initial]");
        self.initial_f.render("f", &mut s);
        self.initial_g.render("g", &mut s);
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(path) = &self.resume_from {
            let _ = writeln!(s, "checkpoint = {}", path.display());
        }
        let _ = writeln!(s, "\n[output]\nsnapshot_points = {}", self.snapshot_points);
        if !self.checkpoint_at.is_empty() {
            let list: Vec<String> = self.checkpoint_at.iter().map(|t| format!("{t:?}")).collect();
            let _ = writeln!(s, "checkpoint_at = {}", list.join(", "));
        }
        s
    }

    /// SHA-256 of [`ScenarioConfig::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}
