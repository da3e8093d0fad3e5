//! `meridian` — batch front door for the ceremony engine. Five subcommands:
//! bootstrap a currency, run scenario files, dry-run an assignment, validate
//! a meetup transcript, print the analytic supply curve. Exit codes: 0 ok,
//! 1 invariant violation, 2 input error (clap usage errors are also 2).

mod assign;
mod manifest;
mod new_currency;
mod run;
mod supply_curve;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "meridian", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Master seed. Wins over a seed in the input file; when neither is
    /// given one is drawn from entropy and recorded in the manifest.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory. Commands that default to stdout write files
    /// (plus manifest.json) only when this is set.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for running several scenarios at once.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Bootstrap a currency from a founders file and a site list.
    NewCurrency(new_currency::NewCurrencyArgs),
    /// Run scenario files; write report.json, supply.csv and manifest.json.
    Run(run::RunArgs),
    /// Seat a registrant file into meetups and audit the result.
    AssignDryRun(assign::AssignArgs),
    /// Re-validate a meetup transcript; one JSON verdict per participant.
    Validate(validate::ValidateArgs),
    /// Print the closed-form supply recurrence as CSV.
    SupplyCurve(supply_curve::SupplyCurveArgs),
}

/// Failures that terminate a subcommand, split by whose fault they are:
/// bad input earns exit 2, a broken engine guarantee earns exit 1.
#[derive(Debug)]
pub enum CmdError {
    Input(String),
    Invariant(String),
}

impl CmdError {
    fn exit_code(&self) -> u8 {
        match self {
            CmdError::Input(_) => 2,
            CmdError::Invariant(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CmdError::Input(m) | CmdError::Invariant(m) => m,
        }
    }
}

/// Shorthand for wrapping library errors as input failures.
pub fn input(context: &str, err: impl std::fmt::Display) -> CmdError {
    CmdError::Input(format!("{context}: {err}"))
}

/// Writes one line to stdout, reporting whether anyone is still reading.
/// A closed pipe (`meridian … | head`) means the consumer has seen enough:
/// callers stop emitting and exit cleanly instead of panicking mid-stream.
pub fn emit(line: &str) -> bool {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).and_then(|()| out.write_all(b"\n")).is_ok()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::NewCurrency(args) => new_currency::cmd(args, cli.out),
        Command::Run(args) => run::cmd(args, cli.seed, cli.out, cli.jobs),
        Command::AssignDryRun(args) => assign::cmd(args, cli.seed, cli.out),
        Command::Validate(args) => validate::cmd(args, cli.out),
        Command::SupplyCurve(args) => supply_curve::cmd(args, cli.out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
