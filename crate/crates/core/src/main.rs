use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use varfrac::cli_io::{self, RunOptions};

#[derive(Parser)]
#[command(
    name = "varfrac",
    version,
    about = "Phase-field fracture with plasticity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a quasi-static evolution described by a configuration file.
    Run {
        config: PathBuf,
        /// Preset used as the base configuration.
        #[arg(long)]
        preset: Option<String>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_backtracking: bool,
        /// Audit the trace after the run.
        #[arg(long)]
        audit: bool,
    },
    /// Audit a finished run directory.
    Audit { trace_dir: PathBuf },
    /// List the available presets.
    Presets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            preset,
            out,
            no_backtracking,
            audit,
        } => {
            let opts = RunOptions {
                preset,
                out,
                no_backtracking,
                audit,
            };
            cli_io::load_config(&config, &opts)
                .and_then(|cfg| cli_io::run_config(&cfg))
                .map(|summary| {
                    let steps = summary.trace.steps.len().saturating_sub(1);
                    println!("{} steps written to {}", steps, summary.dir.display());
                    summary.audit.is_none_or(|report| {
                        print!("{}", cli_io::audit_summary(&report));
                        report.dissipation_ok
                    })
                })
        }
        Command::Audit { trace_dir } => cli_io::audit_dir(&trace_dir).map(|report| {
            print!("{}", cli_io::audit_summary(&report));
            report.dissipation_ok
        }),
        Command::Presets => {
            for p in cli_io::PRESETS {
                println!("{p}");
            }
            Ok(true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
