use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::checkpoint::Checkpoint;
use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult};
use crate::plot::{self, PlotSpec};
use crate::simulate::{resolve_output_dir, run_scenario};
use crate::sweep::{self, SweepSpec, SweepVariable};

#[derive(Debug, Parser)]
#[command(name = "thinfilm", version, about = "Spectral-Galerkin two-phase thin-film solver")]
pub struct Cli {
    /// Directory for run outputs (overrides the config and THINFILM_OUTPUT_ROOT).
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,

    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario.
    Simulate { config: PathBuf },
    /// Run a scenario for a list of regularization parameters.
    SweepEps { spec: PathBuf },
    /// Run a scenario for a list of mode counts and compare consecutive results.
    ConvergeModes { spec: PathBuf },
    /// Draw CSV columns as an SVG line chart.
    Plot { csv: PathBuf, plotspec: PathBuf },
    /// Inspect or convert checkpoint files.
    #[command(subcommand)]
    Checkpoint(CheckpointCommand),
}

#[derive(Debug, Subcommand)]
pub enum CheckpointCommand {
    /// Print the header of a checkpoint.
    Inspect { path: PathBuf },
    /// Zero-pad a checkpoint to a larger mode count.
    Promote {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        modes: usize,
    },
}

pub fn run(cli: &Cli) -> CliResult<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        // Fails only if a pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let out = cli.output_dir.as_deref();
    match &cli.command {
        Command::Simulate { config } => simulate(config, out),
        Command::SweepEps { spec } => run_sweep(spec, out, SweepVariable::Eps),
        Command::ConvergeModes { spec } => run_sweep(spec, out, SweepVariable::Modes),
        Command::Plot { csv, plotspec } => {
            let spec = PlotSpec::load(plotspec)?;
            let path = plot::plot(csv, &spec, out)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Checkpoint(CheckpointCommand::Inspect { path }) => {
            let c = load_checkpoint(path)?;
            println!("modes = {}", c.state.modes());
            println!("t = {}", c.state.t);
            println!("L = {}\neps = {}\nR = {}\nmu = {}", c.params.length, c.params.eps, c.params.r, c.params.mu);
            println!("dt_next = {:e}\nenergy_slack = {:e}", c.dt_next, c.energy_slack);
            println!("config_sha256 = {}", c.config_hash);
            Ok(())
        }
        Command::Checkpoint(CheckpointCommand::Promote { input, output, modes }) => {
            let c = load_checkpoint(input)?
                .promote(*modes)
                .map_err(|e| CliError::Config(e.to_string()))?;
            c.save(output).map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

fn load_checkpoint(path: &Path) -> CliResult<Checkpoint> {
    Checkpoint::load(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn simulate(path: &Path, out: Option<&Path>) -> CliResult<()> {
    let config = ScenarioConfig::load(path)?;
    let dir = resolve_output_dir(out, &config, path);
    let outcome = run_scenario(&config, &dir)?;
    println!(
        "{}: {} accepted steps, t = {}, outputs in {}",
        outcome.status(),
        outcome.accepted,
        outcome.final_state.t,
        dir.display()
    );
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn run_sweep(path: &Path, out: Option<&Path>, variable: SweepVariable) -> CliResult<()> {
    let spec = SweepSpec::load(path, variable)?;
    let dir = resolve_output_dir(out, &spec.base, path);
    let result = match variable {
        SweepVariable::Eps => sweep::sweep_eps(&spec, &dir)?,
        SweepVariable::Modes => sweep::converge_modes(&spec, &dir)?,
    };
    print!("{}", result.summary);
    for run in &result.runs {
        if let Err(e) | Ok(crate::RunOutcome { failure: Some(e), .. }) = &run.outcome {
            log::warn!("{} = {}: {e}", variable.name(), run.value);
        }
    }
    Ok(())
}
