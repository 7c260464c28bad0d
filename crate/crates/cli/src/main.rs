use std::io::{self, BufReader};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gai_cli::{cmd_elicit, cmd_plan, cmd_serve, cmd_simulate, cmd_validate, CliResult, ElicitArgs, SimulateArgs};
use gai_core::session::SessionMode;

#[derive(Parser)]
#[command(name = "gai", version, about = "Preference elicitation for GAI utility models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Evoi,
}

#[derive(Subcommand)]
enum Command {
    /// Check a problem file.
    Validate {
        #[arg(long)]
        problem: PathBuf,
    },
    /// Print the GAI graph, canonical plan and query counts.
    Plan {
        #[arg(long)]
        problem: PathBuf,
    },
    /// Run a simulation experiment and write CSV results.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        budget: Option<usize>,
        /// Run only this strategy (evoi, random or direct).
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Run the session service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        listen: Option<String>,
    },
    /// Elicit in the terminal; answers come from stdin or --answers.
    Elicit {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        #[arg(long)]
        answers: Option<PathBuf>,
        #[arg(long, default_value = "session.jsonl")]
        transcript: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Ask random queries once no query has positive EVOI.
        #[arg(long)]
        fallback: bool,
        /// Record wall-clock timestamps in the transcript.
        #[arg(long)]
        timestamps: bool,
    },
}

fn run(cli: Cli) -> CliResult {
    let stdout = &mut io::stdout().lock();
    match cli.command {
        Command::Validate { problem } => cmd_validate(&problem, stdout),
        Command::Plan { problem } => cmd_plan(&problem, stdout),
        Command::Simulate { config, seed, trials, budget, strategy, out } => {
            cmd_simulate(&SimulateArgs { config, seed, trials, budget, strategy, out }, stdout)
        }
        Command::Serve { config, listen } => cmd_serve(config.as_deref(), listen),
        Command::Elicit { problem, mode, answers, transcript, seed, fallback, timestamps } => {
            let mode = match mode {
                Mode::Exact => SessionMode::Exact,
                Mode::Evoi => SessionMode::Evoi,
            };
            let args = ElicitArgs { problem, mode, seed, fallback, transcript, timestamps };
            let stderr = &mut io::stderr();
            match answers {
                Some(path) => {
                    let file = std::fs::File::open(&path)
                        .map_err(|e| gai_cli::CliError::Runtime(anyhow::anyhow!("cannot read {}: {e}", path.display())))?;
                    cmd_elicit(&args, &mut BufReader::new(file), stdout, stderr)
                }
                None => cmd_elicit(&args, &mut io::stdin().lock(), stdout, stderr),
            }
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
