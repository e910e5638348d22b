use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use duovortex_cli::config::DumpField;
use duovortex_cli::{cmd_check, cmd_oracle, cmd_solve, CliError, Outcome, RunConfig, Status};

/// BPS vortex-antivortex solver for the dually gauged harmonic map model.
#[derive(Debug, Parser)]
#[command(name = "duovortex", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration (`key = value` lines).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print feasibility, predicted fluxes and decay rates without solving.
    Check {
        #[command(flatten)]
        common: Common,
        /// Echo the parsed configuration first.
        #[arg(long)]
        echo: bool,
    },
    /// Solve the configured problem and write the summary and field dumps.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Solve even if the torus constraint fails.
        #[arg(long)]
        force: bool,
        /// Comma-separated fields to dump; overrides `output.dump`.
        #[arg(long, value_delimiter = ',')]
        dump: Option<Vec<DumpField>>,
    },
    /// Solve the radially symmetric problem for coincident points.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Directory holding `u1.csv` and `u2.csv` from a plane solve.
        #[arg(long)]
        compare: Option<PathBuf>,
    },
}

fn load(common: &Common) -> anyhow::Result<RunConfig> {
    let text = fs::read_to_string(&common.config).with_context(|| format!("reading {}", common.config.display()))?;
    let mut cfg = RunConfig::parse(&text).with_context(|| format!("parsing {}", common.config.display()))?;
    if let Some(dir) = &common.out {
        cfg.output.dir = Some(dir.clone());
    }
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Check { common, echo } => Ok(cmd_check(&load(&common)?, echo)?),
        Command::Solve { common, force, dump } => {
            let mut cfg = load(&common)?;
            cfg.solver.force |= force;
            if let Some(dump) = dump {
                cfg.output.dump = dump;
            }
            Ok(cmd_solve(&cfg)?)
        }
        Command::Oracle { common, compare } => Ok(cmd_oracle(&load(&common)?, compare.as_deref())?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(Status::ConfigError.code()) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(outcome) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(outcome.stdout.as_bytes()).is_err() {
                return ExitCode::from(Status::ConfigError.code());
            }
            if outcome.status == Status::NotConverged {
                eprintln!("warning: solver did not converge");
            }
            ExitCode::from(outcome.status.code())
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let status = e.downcast_ref::<CliError>().map_or(Status::ConfigError, CliError::status);
            ExitCode::from(status.code())
        }
    }
}
