use std::path::PathBuf;
use std::process::ExitCode;

use blowup_lab::verify::{run_suite, VerifyOptions};
use blowup_lab::{run_experiment, run_sweep, runner, ExperimentConfig, LabError};
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "blowup-lab", version, about = "Blow-up experiments for exp(u^p) heat problems")]
struct Cli {
    /// Output root (overrides the config's out_dir).
    #[arg(long, global = true, env = "BLOWUP_LAB_OUT")]
    out: Option<PathBuf>,
    /// Parallel runs (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Only print errors and the final status.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the base configuration once.
    Run { config: PathBuf },
    /// Run the cartesian product of the sweep axes.
    Sweep { config: PathBuf },
    /// Run the acceptance suite; exits nonzero if any criterion fails.
    Verify {
        /// Override σ in the reference runs (values above 1 are unstable).
        #[arg(long)]
        cfl_safety: Option<f64>,
    },
}

fn run(cli: Cli) -> Result<bool, LabError> {
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = runner::resolve_out_root(cli.out.as_deref(), &cfg);
            let outcome = run_experiment(&cfg, &out)?;
            if !cli.quiet {
                let s = outcome.summary();
                println!(
                    "{}: stop {:?}, blew_up {}, t_hat {}, slope {} -> {}",
                    config.display(),
                    s.stop_reason,
                    s.blew_up,
                    s.t_hat.map_or("n/a".into(), |t| format!("{t:.9}")),
                    s.rate.as_ref().map_or("n/a".into(), |r| format!("{:.4}", r.slope)),
                    out.display()
                );
            }
            Ok(true)
        }
        Command::Sweep { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = runner::resolve_out_root(cli.out.as_deref(), &cfg);
            let report = run_sweep(&cfg, &out, cli.jobs)?;
            let failed = report.rows.iter().filter(|r| r.result.is_err()).count();
            if !cli.quiet {
                for row in &report.rows {
                    match &row.result {
                        Ok(s) => println!(
                            "{} p={} M={} amplitude={}: blew_up {}, t_hat {}",
                            row.dir,
                            row.point.p,
                            row.point.num_cells,
                            row.point.amplitude,
                            s.blew_up,
                            s.t_hat.map_or("n/a".into(), |t| format!("{t:.9}"))
                        ),
                        Err(e) => println!("{} failed: {e}", row.dir),
                    }
                }
            }
            println!("{} runs, {failed} failed -> {}", report.rows.len(), out.display());
            Ok(true)
        }
        Command::Verify { cfl_safety } => {
            let report = run_suite(VerifyOptions { cfl_safety, jobs: cli.jobs });
            if cli.quiet {
                for c in report.criteria.iter().filter(|c| c.gating && !c.passed) {
                    println!("{}", c.line());
                }
            } else {
                print!("{}", report.table());
            }
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
