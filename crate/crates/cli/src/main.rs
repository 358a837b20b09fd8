use std::path::PathBuf;
use std::process::ExitCode;

use chronorule::commands::{self, ConsultArgs, RunArgs};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chronorule", version, about = "Temporal production-rule inference engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a knowledge base.
    Check { kb: PathBuf },
    /// Run a scenario and write a trace.
    Run {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        ticks: u64,
        #[arg(long)]
        trace: PathBuf,
        /// JSON file overriding engine configuration.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Re-run a trace and compare it record by record.
    Verify {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Interactive backward-chaining consultation on standard input.
    Consult {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        goal: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the question log and result as JSON.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Serve the HTTP session API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mut out, mut err) = (std::io::stdout().lock(), std::io::stderr().lock());
    let code = match cli.command {
        Command::Check { kb } => commands::check(&kb, &mut err),
        Command::Run { kb, scenario, ticks, trace, config } => {
            let args = RunArgs { kb: &kb, scenario: &scenario, ticks, trace: &trace, config: config.as_deref() };
            commands::run(&args, &mut out, &mut err)
        }
        Command::Verify { kb, scenario, trace } => commands::verify(&kb, &scenario, &trace, &mut out, &mut err),
        Command::Consult { kb, goal, config, transcript } => {
            let args =
                ConsultArgs { kb: &kb, goal: &goal, config: config.as_deref(), transcript: transcript.as_deref() };
            commands::consult(&args, &mut std::io::stdin().lock(), &mut out, &mut err)
        }
        Command::Serve { port, static_dir } => {
            let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
            match rt.block_on(chronorule::service::serve(port, static_dir.as_deref())) {
                Ok(()) => 0,
                Err(e) => {
                    eprintln!("{e}");
                    1
                }
            }
        }
    };
    ExitCode::from(code as u8)
}
