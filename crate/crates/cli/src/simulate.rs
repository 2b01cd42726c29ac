//! Single scenario runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thinfilm_core::integrator::{integrate_system, StartPoint, Termination};
use thinfilm_core::{
    diagnostics_row, uniform_grid, DiagnosticsRow, GalerkinState, GalerkinSystem, MollifierFamily,
    Observer, OdeSystem, SpectralBasis, SystemParams,
};

use crate::checkpoint::Checkpoint;
use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult};
use crate::output::{fmt_real, write_file, write_snapshot, DiagnosticsWriter, CODE_VERSION};
use crate::profiles::{project_profile, Profile};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const FINAL_CHECKPOINT_FILE: &str = "checkpoint_final.txt";
pub const SNAPSHOT_DIR: &str = "snapshots";

/// File name of the checkpoint written at time `t`.
pub fn checkpoint_file(t: f64) -> String {
    format!("checkpoint_t{t}.txt")
}

/// Everything a caller needs from a finished (or aborted) run.
#[derive(Debug)]
pub struct RunOutcome {
    pub config_hash: String,
    pub output_dir: PathBuf,
    pub initial_state: GalerkinState,
    pub final_state: GalerkinState,
    pub rows: Vec<DiagnosticsRow>,
    pub accepted: usize,
    pub rejected: usize,
    pub energy_rejections: usize,
    pub checkpoints: Vec<PathBuf>,
    /// Set when the integration stopped before `t_final`.
    pub failure: Option<CliError>,
}

impl RunOutcome {
    pub fn final_row(&self) -> &DiagnosticsRow {
        self.rows.last().expect("every run records its initial state")
    }

    pub fn status(&self) -> String {
        match &self.failure {
            None => "completed".to_string(),
            Some(e) => format!("aborted ({e})"),
        }
    }
}

/// Picks the run directory: explicit override, then `[output] dir`, then
/// `$THINFILM_OUTPUT_ROOT/<config stem>`, then `runs/<config stem>`.
pub fn resolve_output_dir(
    override_dir: Option<&Path>,
    config: &ScenarioConfig,
    config_path: &Path,
) -> PathBuf {
    if let Some(dir) = override_dir {
        return dir.to_path_buf();
    }
    if let Some(dir) = &config.output_dir {
        return dir.clone();
    }
    let stem = config_path
        .file_stem()
        .map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
    let root = std::env::var_os(crate::OUTPUT_ROOT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
    root.join(stem)
}

/// Builds the starting state and controller state of a run.
pub fn initial_conditions(
    config: &ScenarioConfig,
    basis: &SpectralBasis,
) -> CliResult<(GalerkinState, Option<f64>, Option<f64>)> {
    match &config.resume_from {
        Some(path) => {
            if config.initial_f != Profile::Checkpoint || config.initial_g != Profile::Checkpoint {
                return Err(CliError::Config(
                    "[initial] checkpoint cannot be combined with f or g profiles".into(),
                ));
            }
            let ckpt = Checkpoint::load(path)
                .map_err(|e| CliError::Config(format!("checkpoint {}: {e}", path.display())))?;
            check_params_match(&ckpt.params, &config.params)?;
            let ckpt = ckpt
                .promote(config.modes)
                .map_err(|e| CliError::Config(format!("checkpoint {}: {e}", path.display())))?;
            Ok((ckpt.state, Some(ckpt.dt_next), Some(ckpt.energy_slack)))
        }
        None => {
            let points = config.snapshot_points;
            let f = project_profile(&config.initial_f, "f", basis, config.seed, points)?;
            let g = project_profile(&config.initial_g, "g", basis, config.seed, points)?;
            Ok((GalerkinState::new(f, g, 0.0)?, None, None))
        }
    }
}

fn check_params_match(saved: &SystemParams, wanted: &SystemParams) -> CliResult<()> {
    for (name, a, b) in [
        ("R", saved.r, wanted.r),
        ("mu", saved.mu, wanted.mu),
        ("L", saved.length, wanted.length),
        ("eps", saved.eps, wanted.eps),
    ] {
        if a != b {
            return Err(CliError::Config(format!(
                "checkpoint has {name} = {a} but the configuration asks for {b}"
            )));
        }
    }
    Ok(())
}

struct Recorder<'a> {
    basis: &'a SpectralBasis,
    params: &'a SystemParams,
    hash: &'a str,
    dir: &'a Path,
    grid: Vec<f64>,
    writer: DiagnosticsWriter,
    rows: Vec<DiagnosticsRow>,
    snapshots: usize,
    skip_next: bool,
    error: Option<CliError>,
}

impl Recorder<'_> {
    fn record(&mut self, t: f64, y: &[f64]) -> CliResult<()> {
        let state = GalerkinState::from_vector(y, t)?;
        let row = diagnostics_row(&state, self.params, self.basis, MollifierFamily::canonical())?;
        self.writer.row(&row)?;
        self.rows.push(row);
        let f = self.basis.evaluate(&state.f, &self.grid, 0)?;
        let g = self.basis.evaluate(&state.g, &self.grid, 0)?;
        let path = self
            .dir
            .join(SNAPSHOT_DIR)
            .join(format!("snapshot_{:05}.csv", self.snapshots));
        self.snapshots += 1;
        write_snapshot(&path, self.hash, t, &self.grid, &f, &g)
    }
}

impl Observer for Recorder<'_> {
    fn on_snapshot(&mut self, t: f64, y: &[f64]) {
        // A new segment starts with the state the previous one ended on.
        if std::mem::take(&mut self.skip_next) || self.error.is_some() {
            return;
        }
        if let Err(e) = self.record(t, y) {
            self.error = Some(e);
        }
    }
}

/// Runs one scenario and writes its outputs into `dir`.
///
/// Configuration and initial-data errors are returned as `Err`; a run that
/// starts but stops early returns `Ok` with [`RunOutcome::failure`] set and
/// all outputs written so far retained.
pub fn run_scenario(config: &ScenarioConfig, dir: &Path) -> CliResult<RunOutcome> {
    let basis = SpectralBasis::with_quadrature(
        config.modes,
        config.params.length,
        config.cells,
        thinfilm_core::basis::DEFAULT_GAUSS_POINTS,
    )?;
    let (state0, dt0, slack0) = initial_conditions(config, &basis)?;
    let hash = config.hash();
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    log::info!("run {} -> {}", &hash[..12], dir.display());

    let system = GalerkinSystem::new(config.params, &basis)?;
    let mut recorder = Recorder {
        basis: &basis,
        params: &config.params,
        hash: &hash,
        dir,
        grid: uniform_grid(config.params.length, config.snapshot_points),
        writer: DiagnosticsWriter::create(&dir.join(DIAGNOSTICS_FILE), &hash)?,
        rows: Vec::new(),
        snapshots: 0,
        skip_next: false,
        error: None,
    };

    let t_final = config.controls.t_final;
    let mut stops: Vec<f64> = config
        .checkpoint_at
        .iter()
        .copied()
        .filter(|&c| c > state0.t && c < t_final)
        .collect();
    stops.push(t_final);

    let mut start = StartPoint {
        y: state0.to_vector(),
        t: state0.t,
        dt: dt0,
        energy_slack: slack0,
    };
    let mut slack = slack0.unwrap_or_else(|| {
        config.controls.resolved_slack(system.energy(&start.y))
    });
    let mut dt_next = dt0.unwrap_or(config.controls.dt_init);
    let (mut accepted, mut rejected, mut energy_rejections) = (0, 0, 0);
    let mut checkpoints = Vec::new();
    let mut failure = None;

    for (i, &stop) in stops.iter().enumerate() {
        let controls = thinfilm_core::IntegratorControls {
            t_final: stop,
            ..config.controls.clone()
        };
        recorder.skip_next = i > 0;
        let record = match integrate_system(&system, start.clone(), &controls, &mut recorder) {
            Ok(r) => r,
            Err(e) => {
                failure = Some(e.into());
                break;
            }
        };
        accepted += record.accepted;
        rejected += record.rejected;
        energy_rejections += record.energy_rejections;
        dt_next = record.dt_next;
        slack = record.energy_slack;
        let last = record.final_snapshot();
        start = StartPoint {
            y: last.y.clone(),
            t: last.t,
            dt: Some(dt_next),
            energy_slack: Some(slack),
        };
        if let Some(e) = recorder.error.take() {
            failure = Some(e);
            break;
        }
        if let Termination::Aborted(e) = &record.termination {
            failure = Some(e.clone().into());
            break;
        }
        if stop < t_final {
            let path = dir.join(checkpoint_file(stop));
            save_checkpoint(&path, &start, dt_next, slack, config, &hash)?;
            checkpoints.push(path);
        }
    }
    recorder.writer.finish()?;

    let final_state = GalerkinState::from_vector(&start.y, start.t)?;
    let final_path = dir.join(FINAL_CHECKPOINT_FILE);
    save_checkpoint(&final_path, &start, dt_next, slack, config, &hash)?;
    checkpoints.push(final_path);

    let outcome = RunOutcome {
        config_hash: hash.clone(),
        output_dir: dir.to_path_buf(),
        initial_state: state0,
        final_state,
        rows: recorder.rows,
        accepted,
        rejected,
        energy_rejections,
        checkpoints,
        failure,
    };
    write_manifest(config, &outcome)?;
    Ok(outcome)
}

fn save_checkpoint(
    path: &Path,
    start: &StartPoint,
    dt_next: f64,
    energy_slack: f64,
    config: &ScenarioConfig,
    hash: &str,
) -> CliResult<()> {
    let ckpt = Checkpoint {
        state: GalerkinState::from_vector(&start.y, start.t)?,
        params: config.params,
        dt_next,
        energy_slack,
        config_hash: hash.to_string(),
    };
    ckpt.save(path)
        .map_err(|e| CliError::io(path, std::io::Error::other(e.to_string())))
}

fn write_manifest(config: &ScenarioConfig, outcome: &RunOutcome) -> CliResult<()> {
    let mut s = String::new();
    let _ = writeln!(s, "# thinfilm run manifest");
    let _ = writeln!(s, "code_version = {CODE_VERSION}");
    let _ = writeln!(s, "config_sha256 = {}", outcome.config_hash);
    let _ = writeln!(s, "status = {}", outcome.status());
    let _ = writeln!(s, "t_end = {}", fmt_real(outcome.final_state.t));
    let _ = writeln!(s, "accepted_steps = {}", outcome.accepted);
    let _ = writeln!(s, "rejected_steps = {}", outcome.rejected);
    let _ = writeln!(s, "energy_rejections = {}", outcome.energy_rejections);
    let _ = writeln!(s, "snapshots = {}", outcome.rows.len());
    let _ = writeln!(s, "\n# resolved configuration\n{}", config.canonical());
    write_file(&outcome.output_dir.join(MANIFEST_FILE), &s)
}
