use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sparsecert_cli::commands::{
    cmd_certify, cmd_mp_localization, cmd_phase_fresnel, cmd_phase_gauss, cmd_recover, cmd_simulate,
    FresnelPhaseSpec, GaussPhaseSpec, MpSpec,
};
use sparsecert_cli::{CliError, ExperimentConfig};
use sparsecert_core::SupportSize;

#[derive(Parser)]
#[command(name = "sparsecert", version, about = "Sparse deconvolution with OMP and recovery certificates")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write clean and noisy data and the true support.
    Simulate,
    /// Run OMP on the simulated data and write report.json.
    Recover {
        /// Include wall-clock timings (makes the report non-reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Evaluate the recovery conditions a priori.
    Certify {
        /// Noise-to-signal ratio; defaults to solver.epsilon over the weakest component.
        #[arg(long)]
        ratio: Option<f64>,
    },
    /// Boundary curves of the separation conditions.
    PhaseDiagram(PhaseArgs),
    /// Localization error of the first matching pursuit step.
    MpLocalization {
        #[arg(long, default_value_t = 2.0)]
        alpha0: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha1: f64,
        #[arg(long, default_value_t = 1.0)]
        x1: f64,
        #[arg(long, default_value_t = 0.1)]
        sigma_min: f64,
        #[arg(long, default_value_t = 10f64.powf(-0.5))]
        sigma_max: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PhaseModel {
    Gaussian,
    Fresnel,
}

#[derive(Args)]
struct PhaseArgs {
    #[arg(value_enum)]
    model: PhaseModel,
    /// Support size; omit for an unbounded support.
    #[arg(long)]
    count: Option<usize>,
    /// Noise ratios for the boundary table.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    ratios: Vec<f64>,
    // gaussian
    #[arg(long, default_value_t = 9)]
    max_rho: u64,
    #[arg(long, default_value_t = 0.01)]
    sigma_min: f64,
    #[arg(long, default_value_t = 2.3)]
    sigma_max: f64,
    #[arg(long, default_value_t = 230)]
    steps: usize,
    // fresnel, lengths in micrometres
    #[arg(long, default_value_t = 0.6328)]
    lambda: f64,
    #[arg(long, default_value_t = 200_000.0)]
    z: f64,
    #[arg(long, value_delimiter = ',', default_value = "5,15,25,35,50,75")]
    radii: Vec<f64>,
    #[arg(long, default_value_t = 1500.0)]
    max_separation: f64,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required for this command".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let out = &cli.out_dir;
    match &cli.command {
        Command::Simulate => {
            let sim = cmd_simulate(&load(cli)?, out)?;
            println!("wrote {} samples, {} true atoms", sim.noisy.len(), sim.problem.truth.len());
        }
        Command::Recover { timings } => {
            let rep = cmd_recover(&load(cli)?, out, *timings)?;
            println!(
                "exact_recovery={} certified={} l1_error={:e}",
                rep.exact_recovery,
                rep.certified(),
                rep.l1_error
            );
        }
        Command::Certify { ratio } => {
            let rep = cmd_certify(&load(cli)?, out, *ratio)?;
            println!("{}", serde_json::to_string_pretty(&rep).expect("report serializes"));
        }
        Command::PhaseDiagram(a) => {
            let support = a.count.map_or(SupportSize::Infinite, SupportSize::Finite);
            match a.model {
                PhaseModel::Gaussian => {
                    let spec = GaussPhaseSpec {
                        max_rho: a.max_rho,
                        sigma_min: a.sigma_min,
                        sigma_max: a.sigma_max,
                        steps: a.steps,
                        support,
                        ratios: a.ratios.clone(),
                    };
                    for (rho, s) in cmd_phase_gauss(&spec, out)? {
                        println!("rho={rho} max_sigma={s:.4}");
                    }
                }
                PhaseModel::Fresnel => {
                    let spec = FresnelPhaseSpec {
                        lambda: a.lambda,
                        z: a.z,
                        radii: a.radii.clone(),
                        max_rho: a.max_separation,
                        support,
                        ratios: a.ratios.clone(),
                    };
                    for (r, curve) in cmd_phase_fresnel(&spec, out)? {
                        println!("r={r} points={}", curve.len());
                    }
                }
            }
        }
        Command::MpLocalization {
            alpha0,
            alpha1,
            x1,
            sigma_min,
            sigma_max,
            steps,
        } => {
            let spec = MpSpec {
                alpha0: *alpha0,
                alpha1: *alpha1,
                x1: *x1,
                sigma_min: *sigma_min,
                sigma_max: *sigma_max,
                steps: *steps,
            };
            let curve = cmd_mp_localization(&spec, out)?;
            println!("wrote {} points", curve.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
