//! `shellflow`: classify shell steady states, sweep the bifurcation diagram,
//! tabulate kernels and pair energies, and run radial simulations.

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::sweep::SweepArgs;
use commands::tables::TablePotential;
use error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "shellflow", version, about = "Spherical shells of the aggregation equation")]
struct Cli {
    /// Directory for CSV output (created if missing).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify the shell steady state of |x|^a/a - |x|^b/b in R^N.
    Classify {
        #[arg(allow_negative_numbers = true)]
        a: f64,
        #[arg(allow_negative_numbers = true)]
        b: f64,
        n: usize,
    },
    /// Classify a grid of (a, b) points and sample the stability boundary.
    Sweep {
        #[arg(long, default_value_t = 2.1)]
        a_min: f64,
        #[arg(long, default_value_t = 6.0)]
        a_max: f64,
        #[arg(long, default_value_t = 40)]
        a_steps: usize,
        #[arg(long, default_value_t = 40)]
        b_steps: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    /// Run a scenario file, or one of the bundled scenarios fig1, fig2, fig3.
    Simulate {
        #[arg(required_unless_present = "dump_defaults")]
        config: Option<PathBuf>,
        /// Print the default scenario (or CONFIG, normalised) as TOML and exit.
        #[arg(long)]
        dump_defaults: bool,
    },
    /// Tabulate the kernel and its partial derivatives.
    KernelTable(TableArgs),
    /// Tabulate the energy of pairs of shells.
    EnergyLandscape(TableArgs),
}

#[derive(Args, Debug)]
struct TableArgs {
    #[arg(long, allow_negative_numbers = true, requires = "b", conflicts_with = "attractive")]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "a")]
    b: Option<f64>,
    /// Pure attraction |x|^q/q instead of the power-law pair.
    #[arg(long, value_name = "Q", allow_negative_numbers = true)]
    attractive: Option<f64>,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Radii as start:stop:count or a comma list; `rab` is the shell radius.
    #[arg(long, default_value = "0.05:1.5:30", allow_hyphen_values = true)]
    r: String,
    #[arg(long, default_value = "rab", allow_hyphen_values = true)]
    eta: String,
}

fn run(cli: Cli) -> CliResult<()> {
    let out = cli.out.as_deref();
    let here = Path::new(".");
    match cli.command {
        Command::Classify { a, b, n } => commands::classify::run(a, b, n),
        Command::Sweep { a_min, a_max, a_steps, b_steps, dim } => {
            commands::sweep::run(&SweepArgs { a_min, a_max, a_steps, b_steps, dim }, out.unwrap_or(here))
        }
        Command::Simulate { config, dump_defaults: true } => commands::simulate::dump_defaults(config.as_deref()),
        Command::Simulate { config, dump_defaults: false } => {
            let config = config.ok_or_else(|| CliError::usage("simulate needs a CONFIG"))?;
            commands::simulate::run(&config, out)
        }
        Command::KernelTable(t) => {
            let pot = TablePotential::new(t.a, t.b, t.attractive, t.dim)?;
            commands::tables::kernel_table(&pot, &t.r, &t.eta, out.unwrap_or(here))
        }
        Command::EnergyLandscape(t) => {
            let pot = TablePotential::new(t.a, t.b, t.attractive, t.dim)?;
            commands::tables::energy_landscape(&pot, &t.r, &t.eta, out.unwrap_or(here))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
