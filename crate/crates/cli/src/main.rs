use clap::{Parser, Subcommand};
use shared_effort::IsfpConfig;
use shared_effort_cli::{analyze, load_game, load_spec, sweep, CliError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "shared-effort", version, about = "Analyze shared effort games and run parameter sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report predictions, verified witnesses and a fictitious-play run for one game.
    Analyze {
        /// Game file: {"theta": .., "budgets": [..], "alphas": [..]}
        game: PathBuf,
    },
    /// Run a two-axis sweep and write sweep.csv, simulation.svg and theory.svg.
    Sweep {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long = "grid-resolution")]
        grid_resolution: Option<u64>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze { game } => {
            let game = load_game(&game)?;
            print!("{}", analyze::analyze(&game, &IsfpConfig::default()));
        }
        Command::Sweep {
            spec,
            out,
            seed,
            restarts,
            iters,
            grid_resolution,
        } => {
            let mut spec = load_spec(&spec)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(r) = restarts {
                spec.isfp.restarts = r;
            }
            if let Some(k) = iters {
                spec.isfp.max_iterations = k;
            }
            if let Some(g) = grid_resolution {
                spec.grid_resolution = g;
            }
            spec.validate()
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let cells = sweep::run_sweep(&spec)?;
            sweep::write_outputs(&spec, &cells, &out)?;
            let found = cells.iter().filter(|c| c.ne_found).count();
            println!(
                "{} cells, equilibrium found in {}, written to {}",
                cells.len(),
                found,
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
