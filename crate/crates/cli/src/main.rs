mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use error::CliError;

/// Rolling efficiency diagnostics and time-varying AR/GARCH estimation for
/// monthly index closes (`date,close` CSV).
#[derive(Debug, Parser)]
#[command(name = "amh", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Tvar,
    Garch,
    Garchm,
    Tgarch,
    Agarch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Summary statistics, autocorrelations and Ljung-Box tests of log returns.
    Stats {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Level for the "rejected up to lag 20" verdict.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Rolling lag-l autocorrelation with bounds and rolling Ljung-Box p-values.
    Rolling {
        input: PathBuf,
        #[arg(long, default_value_t = 80)]
        window: usize,
        #[arg(long, default_value_t = 1)]
        lag: usize,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Fits one model; prints the result as JSON and writes the smoothed beta path.
    Fit {
        input: PathBuf,
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long, default_value_t = 1)]
        ar_order: usize,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Also write filtered/smoothed states to `<stem>_states.csv`.
        #[arg(long)]
        states: bool,
    },
    /// Fits all five models and ranks them by AIC.
    Compare {
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        ar_order: usize,
        /// Write the ranking here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulates a model at given parameters.
    Simulate {
        #[arg(long, value_enum)]
        model: ModelArg,
        /// Parameters as a JSON object keyed by parameter name.
        #[arg(long)]
        theta: String,
        #[arg(long, default_value_t = 1)]
        ar_order: usize,
        #[arg(long)]
        length: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Initial AR coefficient.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        beta0: f64,
        /// Also write a synthetic `date,close` price file starting at 100.
        #[arg(long)]
        prices_out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Stats { input, format, alpha } => commands::stats(&input, format, alpha),
        Command::Rolling {
            input,
            window,
            lag,
            alpha,
            out_dir,
        } => commands::rolling(&input, window, lag, alpha, &out_dir),
        Command::Fit {
            input,
            model,
            ar_order,
            out_dir,
            states,
        } => commands::fit(&input, model, ar_order, &out_dir, states),
        Command::Compare { input, ar_order, out } => commands::compare(&input, ar_order, out.as_deref()),
        Command::Simulate {
            model,
            theta,
            ar_order,
            length,
            seed,
            out,
            beta0,
            prices_out,
        } => commands::simulate(model, &theta, ar_order, length, seed, beta0, &out, prices_out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("AMH_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
