use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use memwave::commands::{self, Suite};
use memwave::{CliError, RunConfig};

#[derive(Parser)]
#[command(name = "memwave", version, about = "Wave equation with a memory term: runs, checks and sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation into a fresh output directory.
    Run {
        config: PathBuf,
        /// Also evaluate the multiplier identity (needs the full history).
        #[arg(long)]
        check_identity: bool,
    },
    /// Run a verification suite and write a verdict.
    Verify { suite: Suite, config: PathBuf },
    /// Run the template once per value of one config key.
    Sweep {
        config: PathBuf,
        /// Config key, optionally indexed, e.g. `kernel.params[1]`.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Print a gnuplot script for a run directory.
    Plot {
        dir: PathBuf,
        /// Write the script here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn load(path: &Path) -> memwave::Result<RunConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::invalid(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::parse(&text).map_err(|e| match e {
        CliError::Invalid(m) => CliError::Invalid(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn dispatch(cmd: Command) -> memwave::Result<()> {
    match cmd {
        Command::Run { config, check_identity } => {
            let cfg = load(&config)?;
            let out = commands::cmd_run(&cfg, check_identity)?;
            println!("{}", out.dir.display());
        }
        Command::Verify { suite, config } => {
            let cfg = load(&config)?;
            let out = commands::cmd_verify(suite, &cfg)?;
            for c in &out.verdict.checks {
                let status = match (c.passed, c.required) {
                    (true, _) => "pass",
                    (false, true) => "FAIL",
                    (false, false) => "info",
                };
                eprintln!("{status:>4}  {}: {}", c.name, c.detail);
            }
            println!("{}", out.dir.display());
            if let Some(name) = out.verdict.first_failure {
                return Err(CliError::CheckFailed(name));
            }
        }
        Command::Sweep { config, axis, values, jobs } => {
            let cfg = load(&config)?;
            let values = commands::split_values(&values);
            let out = commands::cmd_sweep(&cfg, &axis, &values, jobs)?;
            println!("{}", out.dir.display());
            let failed = out.failed();
            if failed > 0 {
                return Err(CliError::CheckFailed(format!("{failed} of {} sweep runs failed", out.rows.len())));
            }
        }
        Command::Plot { dir, output } => {
            let out = commands::cmd_plot(&dir)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            match output {
                Some(p) => std::fs::write(&p, &out.script).map_err(|e| CliError::io(p, e))?,
                None => print!("{}", out.script),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
