use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qfluid::commands::{self, Action};
use qfluid::config::Loaded;
use qfluid::CliError;

/// Spectral quantum-fluid runs, Gronwall certificates and viscosity sweeps.
#[derive(Parser)]
#[command(name = "qfluid", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one system (mode reg_nslk, aug_nslk, elk or sl).
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run against a manufactured reference and evaluate the certificate.
    Certify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Vanishing viscosity sweep over `nu_list`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare the inviscid fluid run with the split-step wave solver.
    OracleCompare {
        #[arg(long)]
        config: PathBuf,
    },
    /// Summarize a run directory.
    Report { run_dir: PathBuf },
}

fn dispatch(command: Command) -> Result<String, CliError> {
    let (action, path) = match command {
        Command::Report { run_dir } => return commands::report(&run_dir),
        Command::Run { config } => (Action::Run, config),
        Command::Certify { config } => (Action::Certify, config),
        Command::Sweep { config } => (Action::Sweep, config),
        Command::OracleCompare { config } => (Action::OracleCompare, config),
    };
    commands::execute(action, &Loaded::from_path(&path)?)
}

fn final_line(status: &str, reason: &str) {
    eprintln!("{}", serde_json::json!({ "status": status, "reason": reason }));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            final_line("config_error", "invalid command line");
            return ExitCode::from(2);
        }
    };
    match dispatch(cli.command) {
        Ok(text) => {
            if !text.is_empty() {
                println!("{text}");
            }
            final_line("ok", "completed");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            final_line(e.status(), &e.to_string());
            ExitCode::from(e.exit_code())
        }
    }
}
