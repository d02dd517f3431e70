//! `tsca`: run single simulations, parameter sweeps and grid renders.
//!
//! Exit codes: 0 on success (a run reached a homogeneous grid), 2 when a
//! single run hit `max_steps`, 1 on any usage, configuration or I/O error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use tsca_core::experiments::{run_experiment, write_csv, OutcomeTally};
use tsca_core::render::write_pgm;
use tsca_core::{load_grid, preset, Config, Engine, Outcome, Preset, RawConfig};

#[derive(Parser, Debug)]
#[command(name = "tsca", version, about = "Temporally stochastic 2D cellular automaton")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one simulation and print `outcome iterations final_density`.
    Run {
        /// Config file; defaults apply when omitted.
        config: Option<PathBuf>,
        /// Override a config key, e.g. `--set rho=0.3`. Repeatable.
        #[arg(short, long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run every combination of listed K, p and initial values and write a CSV.
    Sweep {
        spec: PathBuf,
        #[arg(short, long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Render a grid file as a plain-text PGM image.
    Render { grid: PathBuf, out: PathBuf },
    /// Print the config text of a named preset.
    Preset { name: String },
}

fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<Config> {
    let (text, origin) = match path {
        Some(p) => (
            fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            p.display().to_string(),
        ),
        None => (String::new(), "config".to_string()),
    };
    let mut raw = RawConfig::parse(&text).with_context(|| origin.clone())?;
    for pair in overrides {
        raw.set_override_pair(pair)?;
    }
    raw.validate().with_context(|| origin)
}

fn cmd_run(path: Option<&Path>, overrides: &[String]) -> Result<Outcome> {
    let config = load_config(path, overrides)?;
    config.require_single()?;
    let spec = config.experiment_specs()?.remove(0);
    let initial = spec.initial.generate(spec.width, spec.height, config.seed)?;
    let engine = Engine::with_workers(spec.params.clone(), config.seed, config.workers);

    let result = match (&config.out_dir, config.snapshot_every) {
        (Some(dir), Some(_)) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let mut failure = None;
            let result = engine.run_observed(&initial, &spec.engine, |t, grid| {
                if failure.is_none() {
                    let path = dir.join(format!("step_{t:08}.pgm"));
                    if let Err(e) = write_pgm(grid, &path) {
                        failure = Some(anyhow::Error::new(e).context(format!("writing {}", path.display())));
                    }
                }
            });
            if let Some(e) = failure {
                return Err(e);
            }
            result
        }
        (None, Some(_)) => bail!("`snapshot_every` needs `out_dir`"),
        _ => engine.run(&initial, &spec.engine),
    };

    let mut out = io::stdout().lock();
    writeln!(
        out,
        "{} {} {:.6}",
        result.outcome,
        result.iterations,
        result.final_grid.density()
    )?;
    Ok(result.outcome)
}

fn cmd_sweep(path: &Path, overrides: &[String]) -> Result<()> {
    let config = load_config(Some(path), overrides)?;
    let Some(out_csv) = config.out_csv.clone() else {
        bail!("{}: `out_csv`: required for sweeps", path.display());
    };
    let specs = config.experiment_specs()?;
    let total = specs.len();
    let mut records = Vec::with_capacity(total * config.trials);
    for (i, spec) in specs.iter().enumerate() {
        let batch = run_experiment(spec)?;
        eprintln!("[{}/{}] {}: {}", i + 1, total, spec.name, OutcomeTally::of(&batch));
        records.extend(batch);
    }
    write_csv(&records, &out_csv)?;
    eprintln!("wrote {} rows to {}", records.len(), out_csv.display());
    Ok(())
}

fn cmd_render(grid: &Path, out: &Path) -> Result<()> {
    let grid = load_grid(grid)?;
    write_pgm(&grid, out).with_context(|| format!("writing {}", out.display()))
}

fn cmd_preset(name: &str) -> Result<()> {
    let which: Preset = name.parse()?;
    let template = preset(which);
    let config = Config::from_experiment(&template).context("preset has no config form")?;
    print!("{}", config.to_text());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match &cli.command {
        Command::Run { config, set } => cmd_run(config.as_deref(), set).map(|o| match o {
            Outcome::Timeout => ExitCode::from(2),
            _ => ExitCode::SUCCESS,
        }),
        Command::Sweep { spec, set } => cmd_sweep(spec, set).map(|()| ExitCode::SUCCESS),
        Command::Render { grid, out } => cmd_render(grid, out).map(|()| ExitCode::SUCCESS),
        Command::Preset { name } => cmd_preset(name).map(|()| ExitCode::SUCCESS),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })
}
