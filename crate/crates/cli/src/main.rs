use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use slns::experiment;

/// Run a stochastic Lagrangian Navier–Stokes experiment from a config file.
#[derive(Parser, Debug)]
#[command(name = "slns", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// Experiment config (TOML).
    config: Option<PathBuf>,

    /// Output directory; overrides `output` in the config.
    #[arg(short, long)]
    output: Option<PathBuf>,

    /// Seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads; 0 uses every core.
    #[arg(short = 'j', long)]
    workers: Option<usize>,

    /// More output; repeat for the full summary.
    #[arg(short, long, action = ArgAction::Count)]
    verbose: u8,

    /// Print nothing on success.
    #[arg(short, long, conflicts_with = "verbose")]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List registered experiments.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(Command::List) = cli.command {
        let mut out = std::io::stdout().lock();
        return match experiment::print_registry(&mut out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("slns: {e}");
                ExitCode::from(2)
            }
        };
    }
    let Some(config) = cli.config else {
        eprintln!("slns: missing config path (or use `slns list`)");
        return ExitCode::from(2);
    };
    if cli.verbose > 0 {
        eprintln!("slns: running {}", config.display());
    }
    match experiment::run_file(&config, cli.output.as_deref(), cli.seed, cli.workers) {
        Ok(outcome) => {
            if !cli.quiet {
                if cli.verbose > 0 || !outcome.passed {
                    print!("{}", outcome.summary);
                } else {
                    println!("{}", outcome.summary.lines().next().unwrap_or_default());
                }
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("slns: {e}");
            ExitCode::from(2)
        }
    }
}
