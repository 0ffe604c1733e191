//! `greenshape`: level-set optimization of dielectric shapes for resonance
//! energy transfer between two point dipoles.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::Failure;

#[derive(Parser)]
#[command(name = "greenshape", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SweepParameter {
    Resolution,
    StepSize,
}

#[derive(Subcommand)]
enum Command {
    /// Run the optimization loop and write a run directory.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overwrite an existing run directory.
        #[arg(long)]
        force: bool,
        /// Where free-space reference rates are cached.
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long, short)]
        quiet: bool,
    },
    /// Compare FDTD Green's tensors with the analytic free-space result.
    Validate {
        #[arg(long, default_value_t = 20)]
        resolution: u32,
        #[arg(long, default_value_t = 2.0)]
        wavelength: f64,
        #[arg(long, default_value_t = 4.0)]
        separation: f64,
    },
    /// One run per parameter value plus a combined sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        parameter: SweepParameter,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Number of runs executed concurrently as child processes.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        force: bool,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Evaluate gamma, gamma0 and Q of a saved shape.
    Rate {
        /// Level-set (.gshl) or material (.gshm) snapshot.
        #[arg(long)]
        phi: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Convert a binary snapshot to CSV.
    Export {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// For level sets: write the zero contour as polylines instead.
        #[arg(long)]
        contour: bool,
        #[arg(long)]
        force: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Optimize {
            config,
            out,
            force,
            cache_dir,
            quiet,
        } => commands::optimize(&config, &out, force, cache_dir, quiet),
        Command::Validate {
            resolution,
            wavelength,
            separation,
        } => commands::validate(resolution, wavelength, separation),
        Command::Sweep {
            config,
            parameter,
            values,
            out,
            jobs,
            force,
            cache_dir,
        } => commands::sweep(&config, parameter, &values, &out, jobs, force, cache_dir),
        Command::Rate {
            phi,
            config,
            cache_dir,
        } => commands::rate(&phi, &config, cache_dir),
        Command::Export {
            input,
            output,
            contour,
            force,
        } => commands::export(&input, &output, contour, force),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
