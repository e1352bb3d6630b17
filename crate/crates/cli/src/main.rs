use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use naeq_cli::{run_scenario, RunOptions};

#[derive(Parser)]
#[command(name = "naeq", version, about = "Equilibria of games with biased demand analytics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the task named in a scenario config.
    Run(Common),
    /// Run a config whose task is a parameter sweep.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario config (JSON).
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for stochastic tasks; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps and replications.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NAEQ_LOG", "warn")).init();
    let cli = Cli::parse();
    let (args, require_sweep) = match cli.command {
        Command::Run(a) => (a, false),
        Command::Sweep(a) => (a, true),
    };
    let opts = RunOptions {
        out: args.out,
        seed: args.seed,
        workers: args.workers,
        require_sweep,
    };
    match run_scenario(&args.config, &opts) {
        Ok(m) => {
            for w in &m.warnings {
                log::warn!("{w}");
            }
            println!("{}: wrote {} files", m.name, m.outputs.len() + 1);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
