use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use relaybf::harness::{run_to_dir, Experiment, ScenarioConfig};

#[derive(Parser)]
#[command(name = "relaybf", version, about = "Robust distributed relay beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its CSV and plot data.
    Run {
        #[arg(long, value_parser = parse_experiment)]
        experiment: Experiment,
        /// Scenario file applied on top of the experiment's defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// List experiments with a one-line description.
    List,
    /// Parse and validate a scenario file.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_experiment(name: &str) -> Result<Experiment, String> {
    Experiment::from_name(name).ok_or_else(|| {
        let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
        format!("unknown experiment `{name}`; expected one of {}", names.join(", "))
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> relaybf::Result<()> {
    match cli.command {
        Command::Run {
            experiment,
            config,
            seed,
            trials,
            out,
        } => {
            let mut cfg = match config {
                Some(path) => ScenarioConfig::from_file(&path, experiment.default_config())?,
                None => experiment.default_config(),
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(trials) = trials {
                cfg.trials = trials;
            }
            for path in run_to_dir(experiment, &cfg, &out)? {
                println!("{}", path.display());
            }
        }
        Command::List => {
            for e in Experiment::ALL {
                println!("{:<15} {}", e.name(), e.analogue());
            }
        }
        Command::Validate { config } => {
            ScenarioConfig::from_file(&config, ScenarioConfig::default())?;
            println!("{}: ok", config.display());
        }
    }
    Ok(())
}
