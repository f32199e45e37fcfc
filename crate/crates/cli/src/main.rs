use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use outflow_cli::{
    cmd_evolve, cmd_stationary, cmd_sweep, cmd_verify, list_checks, CliError, RunConfig, SweepConfig,
};

#[derive(Parser)]
#[command(
    name = "outflow",
    version,
    about = "Outflow boundary layers for 1-D compressible Navier-Stokes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Io {
    /// JSON configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out_dir` in the config)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the stationary profile and report its decay
    Stationary(Io),
    /// Evolve a perturbed profile and record diagnostics
    Evolve(Io),
    /// Run a family of evolve configs and aggregate them
    Sweep {
        #[command(flatten)]
        io: Io,
        /// Reuse runs whose stored config matches
        #[arg(long)]
        reuse: bool,
    },
    /// Run the invariant battery
    Verify {
        #[arg(long, required_unless_present = "list")]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print check names and exit
        #[arg(long)]
        list: bool,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Stationary(io) => {
            let cfg = RunConfig::load(&io.config)?;
            let out = cfg.output_dir(io.out.as_deref())?;
            let s = cmd_stationary(&cfg, &out)?;
            println!(
                "{:?} profile, delta {:.3e}, {} nodes -> {}",
                s.regime.kind,
                s.delta,
                s.nodes,
                out.display()
            );
        }
        Command::Evolve(io) => {
            let cfg = RunConfig::load(&io.config)?;
            let out = cfg.output_dir(io.out.as_deref())?;
            let s = cmd_evolve(&cfg, &out)?;
            println!(
                "completed {} steps to t = {}, final/initial sup-norm {:.3e} -> {}",
                s.steps,
                s.t_final,
                s.decay.final_ratio,
                out.display()
            );
        }
        Command::Sweep { io, reuse } => {
            let sweep = SweepConfig::load(&io.config)?;
            let out = sweep.base.output_dir(io.out.as_deref())?;
            let rows = cmd_sweep(&sweep, &out, reuse)?;
            for r in &rows {
                println!(
                    "{} = {}: converged {}, final ratio {:.3e}",
                    r.axis, r.value, r.converged, r.final_ratio
                );
            }
        }
        Command::Verify { config, out, list } => {
            let mut stdout = std::io::stdout();
            if list {
                list_checks(&mut stdout)?;
                return Ok(());
            }
            let cfg = RunConfig::load(&config.expect("clap enforces --config"))?;
            let out = out.or_else(|| cfg.out_dir.clone());
            let results = cmd_verify(&cfg, out.as_deref(), &mut stdout)?;
            let failed: Vec<&str> = results.iter().filter(|c| !c.passed).map(|c| c.name).collect();
            if !failed.is_empty() {
                return Err(CliError::Check(failed.join(", ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
