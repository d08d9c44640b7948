use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qorder::cli::{self, CliError, Experiment, Format, Overrides};
use qorder::eraser::CircuitMode;

#[derive(Parser)]
#[command(name = "qorder", version, about = "Projective measurement experiments")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Shared {
    /// TOML config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Paper,
    Unitary,
}

#[derive(Subcommand)]
enum Command {
    /// Singlet joint distribution in both measurement orders
    Epr(Shared),
    /// Delayed-choice quantum eraser screen table
    Eraser {
        #[command(flatten)]
        shared: Shared,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Two-slit screen pattern or telescope probabilities
    Wheeler(Shared),
    /// Seeded interleaving-invariance campaign
    Orderprop(Shared),
    /// Premeasurement branch ledger
    Everett(Shared),
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (experiment, shared, mode) = match args.command {
        Command::Epr(s) => (Experiment::Epr, s, None),
        Command::Eraser { shared, mode } => (Experiment::Eraser, shared, mode),
        Command::Wheeler(s) => (Experiment::Wheeler, s, None),
        Command::Orderprop(s) => (Experiment::Orderprop, s, None),
        Command::Everett(s) => (Experiment::Everett, s, None),
    };
    let overrides = Overrides {
        seed: shared.seed,
        output: shared.out,
        format: shared.format.map(|f| match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }),
        mode: mode.map(|m| match m {
            ModeArg::Paper => CircuitMode::Paper,
            ModeArg::Unitary => CircuitMode::Unitary,
        }),
    };
    let text = match &shared.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => Some(t),
            Err(e) => return fail(CliError::Io(format!("{}: {e}", path.display()))),
        },
        None => None,
    };
    match cli::load_config(experiment, text.as_deref(), &overrides) {
        Ok(config) => ExitCode::from(cli::execute(&config)),
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("qorder: {e}");
    ExitCode::from(e.exit_code())
}
