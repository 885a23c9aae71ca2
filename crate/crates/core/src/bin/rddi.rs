use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{info, warn};

use rddi::cli::run::{run, RunOptions, VERSION};
use rddi::cli::scenario::{load_scenario, Format, SCHEMA};
use rddi::cli::selftest::{selftest, DEFAULT_CASES, DEFAULT_SEED};

#[derive(Parser)]
#[command(name = "rddi", version, about = "Resonant dipole-dipole interaction of two atoms")]
struct Cli {
    /// Suppress progress and warning output.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analyses listed in a scenario file.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long, value_parser = parse_format)]
        format: Option<Format>,
        /// Overwrite existing output files.
        #[arg(long)]
        force: bool,
    },
    /// Check invariants on seeded random configurations.
    Selftest {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_CASES)]
        cases: usize,
    },
    /// Print the documented scenario schema.
    Schema,
    /// Print the version.
    Version,
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        _ => Err(format!("unknown format '{s}' (csv or json)")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match cli.command {
        Command::Run { scenario, output_dir, format, force } => {
            let result = load_scenario(&scenario).and_then(|s| run(&s, &RunOptions { output_dir, format, force }));
            match result {
                Ok(summary) => {
                    for w in &summary.warnings {
                        warn!("{w}");
                    }
                    for f in &summary.files {
                        info!("wrote {}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(if e.is_config() { 2 } else { 3 })
                }
            }
        }
        Command::Selftest { seed, cases } => {
            let report = selftest(seed, cases);
            print!("{}", report.to_text());
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Command::Schema => {
            print!("{SCHEMA}");
            ExitCode::SUCCESS
        }
        Command::Version => {
            println!("rddi {VERSION}");
            ExitCode::SUCCESS
        }
    }
}
