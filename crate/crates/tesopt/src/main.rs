//! `tesopt`: scenario-driven electrode-current optimization.
//!
//! Exit codes: 0 converged, 1 config or pipeline error, 2 completed but not
//! converged (artifacts are still written, flagged in iterations.log).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tesopt::config::ScenarioConfig;
use tesopt::scenario::{parse_orientation, run_scenario, sweep};

#[derive(Parser)]
#[command(
    name = "tesopt",
    version,
    about = "Multi-electrode stimulation protocol optimization on synthetic phantoms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario: mesh -> transfer matrix -> ADMM -> rescale ->
    /// metrics, writing protocol.csv, metrics.csv, field.vtk and
    /// iterations.log.
    Run {
        /// Scenario config (TOML).
        config: PathBuf,
        /// Output directory; defaults to the config's outputs.directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for randomized test utilities; the optimization pipeline
        /// itself is deterministic and ignores it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Optimize a ring of K targets and write per-target delta, iterations
    /// and protocol norm plus averages to sweep.csv.
    Sweep {
        /// Scenario config (TOML); its target section is ignored.
        config: PathBuf,
        /// Number of ring targets (K).
        #[arg(long, default_value_t = 8)]
        targets: usize,
        /// Target orientation: tangential or radial.
        #[arg(long)]
        orientation: String,
        /// Output directory; defaults to the config's outputs.directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for randomized test utilities; the sweep itself is
        /// deterministic and ignores it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, seed } => {
            let _ = seed;
            let cfg = match ScenarioConfig::from_path(&config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let out_dir = out.unwrap_or_else(|| PathBuf::from(&cfg.outputs.directory));
            let name = config
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".into());
            match run_scenario(&cfg, &name, &out_dir) {
                Ok(outcome) => {
                    for m in &outcome.methods {
                        println!(
                            "{name} {}: cd_a={:.6e} nontarget={:.6e} cd_t={:.6e} par={}",
                            m.method,
                            m.metrics.cd_a,
                            m.metrics.nontarget_mean,
                            m.metrics.cd_t,
                            m.metrics
                                .par
                                .map(|v| format!("{v:.2}"))
                                .unwrap_or_else(|| "n/a".into()),
                        );
                    }
                    println!(
                        "{name}: iterations={} norm_m={:.4} mA delta={} converged={}",
                        outcome.iterations,
                        outcome.norm_m,
                        outcome
                            .delta
                            .map(|v| format!("{v:.6e} A/m^2"))
                            .unwrap_or_else(|| "n/a".into()),
                        outcome.converged
                    );
                    if outcome.converged {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("warning: not converged within optimizer.max_iter");
                        ExitCode::from(2)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Sweep {
            config,
            targets,
            orientation,
            out,
            seed,
        } => {
            let _ = seed;
            let cfg = match ScenarioConfig::from_path(&config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let orientation = match parse_orientation(&orientation) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let out_dir = out.unwrap_or_else(|| PathBuf::from(&cfg.outputs.directory));
            match sweep(&cfg, targets, orientation, &out_dir) {
                Ok(outcome) => {
                    let failed = outcome.rows.iter().filter(|r| r.error.is_some()).count();
                    let nonconverged = outcome.rows.iter().filter(|r| !r.converged).count();
                    println!(
                        "sweep: {} targets, {} failed, mean delta {}, mean iterations {}, mean norm {}",
                        outcome.rows.len(),
                        failed,
                        outcome
                            .mean_delta
                            .map(|v| format!("{v:.6e}"))
                            .unwrap_or_else(|| "n/a".into()),
                        outcome
                            .mean_iterations
                            .map(|v| format!("{v:.1}"))
                            .unwrap_or_else(|| "n/a".into()),
                        outcome
                            .mean_norm_m
                            .map(|v| format!("{v:.4} mA"))
                            .unwrap_or_else(|| "n/a".into()),
                    );
                    println!("sweep: wrote {}", outcome.csv_path.display());
                    if nonconverged > 0 {
                        eprintln!("warning: {nonconverged} targets not converged");
                        ExitCode::from(2)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
