use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pnsk_lab::effective::run_effective;
use pnsk_lab::lab::report::{write_detailed, write_effective, SCHEMA_VERSION};
use pnsk_lab::lab::{run_convergence, weak_residual, Equation, RunConfig, TestFunction, TrajectoryView};
use pnsk_lab::pnsk::run_pnsk;
use pnsk_lab::{Error, Result};

#[derive(Parser)]
#[command(
    name = "pnsk-lab",
    version,
    about = "Oscillating-density experiments for the PNSK two-phase model"
)]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Recorded in reports; runs are deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detailed run from the first ladder entry.
    RunPnsk {
        config: PathBuf,
        /// Number of macro-blocks (overrides the ladder).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Effective run from the configured initial measure.
    RunEffective { config: PathBuf },
    /// Ladder of detailed runs against one effective run.
    Convergence { config: PathBuf },
    /// Weak-form residuals of a fresh run against the standard test functions.
    Residuals {
        config: PathBuf,
        #[arg(long)]
        equation: String,
        #[arg(long, value_enum, default_value_t = Model::Pnsk)]
        model: Model,
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Pnsk,
    Effective,
}

#[derive(Serialize)]
struct ResidualReport {
    schema_version: u32,
    seed: u64,
    equation: String,
    model: String,
    test_functions: Vec<TestFunction>,
    residuals: Vec<f64>,
}

fn ladder_head(cfg: &RunConfig, n: Option<usize>) -> Result<usize> {
    n.or_else(|| cfg.study.n_ladder.first().copied())
        .ok_or_else(|| Error::Validation("study.n_ladder is empty".into()))
}

fn load(path: &Path) -> Result<RunConfig> {
    let cfg = RunConfig::from_path(path)?;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::Validation(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::RunPnsk { config, n } => {
            let cfg = load(&config)?;
            let grid = cfg.grid()?;
            let law = cfg.law()?;
            let init = cfg.detailed_initial(&grid, ladder_head(&cfg, n)?)?;
            let traj = run_pnsk(&grid, &init, &law, &cfg.params(), &cfg.output_times())?;
            write_detailed(&cli.out, &traj)?;
            println!("pnsk: {} steps, mass drift {:.3e}", traj.steps, traj.max_mass_drift());
        }
        Command::RunEffective { config } => {
            let cfg = load(&config)?;
            let grid = cfg.grid()?;
            let law = cfg.law()?;
            let init = cfg.effective_initial(&grid, &law)?;
            let traj = run_effective(&grid, &init, &law, &cfg.params(), &cfg.output_times())?;
            write_effective(&cli.out, &traj)?;
            println!("effective: {} steps, max atoms {}", traj.steps, traj.max_atoms_seen);
        }
        Command::Convergence { config } => {
            let cfg = load(&config)?;
            let report = run_convergence(&cfg, cli.seed)?;
            report.write(&cli.out)?;
            for row in &report.rows {
                match &row.error {
                    Some(e) => println!("n={:<4} failed: {e}", row.n),
                    None => println!(
                        "n={:<4} {} evf_gap={:.4e}",
                        row.n,
                        row.distances
                            .iter()
                            .map(|(k, v)| format!("{k}={v:.4e}"))
                            .collect::<Vec<_>>()
                            .join(" "),
                        row.evf_gap.unwrap_or(f64::NAN)
                    ),
                }
            }
            if let Some(e) = &report.effective_error {
                return Err(Error::Aborted(format!("effective run: {e}")));
            }
            let failed = report.rows.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                return Err(Error::Aborted(format!(
                    "{failed} detailed run(s) failed; see report.json"
                )));
            }
        }
        Command::Residuals {
            config,
            equation,
            model,
            n,
        } => {
            let cfg = load(&config)?;
            let eq = Equation::parse(&equation)?;
            let grid = cfg.grid()?;
            let law = cfg.law()?;
            let params = cfg.params();
            let times = cfg.output_times();
            let phis = TestFunction::standard_set(grid.length());
            let residuals = match model {
                Model::Pnsk => {
                    let init = cfg.detailed_initial(&grid, ladder_head(&cfg, n)?)?;
                    let traj = run_pnsk(&grid, &init, &law, &params, &times)?;
                    phis.iter()
                        .map(|phi| {
                            weak_residual(&grid, TrajectoryView::Detailed(&traj.snapshots), &law, &params, eq, phi)
                        })
                        .collect::<Result<Vec<_>>>()?
                }
                Model::Effective => {
                    let init = cfg.effective_initial(&grid, &law)?;
                    let traj = run_effective(&grid, &init, &law, &params, &times)?;
                    phis.iter()
                        .map(|phi| {
                            weak_residual(
                                &grid,
                                TrajectoryView::Effective(&traj.snapshots),
                                &law,
                                &params,
                                eq,
                                phi,
                            )
                        })
                        .collect::<Result<Vec<_>>>()?
                }
            };
            for (phi, r) in phis.iter().zip(&residuals) {
                println!("{} x0={} width={}: {r:.6e}", eq.name(), phi.x0, phi.width);
            }
            let report = ResidualReport {
                schema_version: SCHEMA_VERSION,
                seed: cli.seed,
                equation: eq.name().into(),
                model: match model {
                    Model::Pnsk => "pnsk".into(),
                    Model::Effective => "effective".into(),
                },
                test_functions: phis.to_vec(),
                residuals,
            };
            std::fs::create_dir_all(&cli.out)?;
            std::fs::write(cli.out.join("residuals.json"), serde_json::to_string_pretty(&report)?)?;
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
