use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use schauder_cli::{exit, run, CliError, Flags};

#[derive(Parser)]
#[command(name = "schauder", version, about = "Schauder spectra and deflation certificates for structured operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analysis named in a spec file and write report.json.
    Run(RunArgs),
    /// Check a spec file; exits 0 iff it is valid.
    Validate { spec: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    spec: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Size of the audited and dumped truncation (default 64).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=512))]
    truncation: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=4096))]
    grid_moduli: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=4096))]
    grid_phases: Option<u64>,
    /// Blow-up bound a witness must exceed (default 1e12).
    #[arg(long)]
    bound: Option<f64>,
    /// Recurrence steps allowed per certificate (default 1e5).
    #[arg(long)]
    step_cap: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Also write matrix.csv, certificates.csv and eigenvalues.csv.
    #[arg(long)]
    csv: bool,
}

fn report_error(e: &CliError) -> ExitCode {
    let block = e.block();
    eprintln!("{}", serde_json::to_string_pretty(&block).expect("error block serializes"));
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { spec } => match schauder_cli::read(&spec) {
            Ok(_) => {
                println!("{}: valid", spec.display());
                ExitCode::from(exit::OK as u8)
            }
            Err(e) => report_error(&e),
        },
        Command::Run(args) => {
            let spec = match schauder_cli::read(&args.spec) {
                Ok(s) => s,
                Err(e) => return report_error(&e),
            };
            let flags = Flags {
                truncation: args.truncation.map(|n| n as usize),
                grid_moduli: args.grid_moduli.map(|n| n as usize),
                grid_phases: args.grid_phases.map(|n| n as usize),
                bound: args.bound,
                step_cap: args.step_cap,
                epsilon: args.epsilon,
                csv: args.csv,
            };
            match run(&spec, &flags, &args.out) {
                Ok(report) => {
                    println!(
                        "wrote {} ({:.3} s)",
                        args.out.join("report.json").display(),
                        report.wall_time_seconds
                    );
                    ExitCode::from(exit::OK as u8)
                }
                Err(e) => report_error(&e),
            }
        }
    }
}
