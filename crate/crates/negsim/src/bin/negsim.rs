//! Command-line front end: ensemble runs, sweeps, Porter-Thomas statistics,
//! and the analytic phase classifier.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use negsim::ensemble::{
    load, persist, run_ensemble, sweep, sweep_summary_csv, PartitionSpec, RunConfig, RunResult,
    SweepAxis,
};
use negsim::error::NegsimError;
use negsim::theory::{classify_phase, predict_avg_log_negativity, semicircle_edge_sign};

#[derive(Parser)]
#[command(
    name = "negsim",
    version,
    about = "Entanglement-negativity phase structure of pseudo-random quantum states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for summary.json and CSV tables.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread count.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Depolarizing probability per layer (overrides the config).
    #[arg(long)]
    noise: Option<f64>,
    /// Enable the tomography path with this many shots per setting
    /// (0 = exact-expectation mode).
    #[arg(long)]
    tomography: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one ensemble and report its negativity spectrum statistics.
    Spectrum(CommonOpts),
    /// Sweep the environment size N_B at a fixed (N_A1, N_A2) split.
    SweepEnv {
        #[command(flatten)]
        common: CommonOpts,
        /// N_B values, e.g. "9,8,7,6,5,4,3,2,1".
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<usize>>,
    },
    /// Sweep the split N_A1 at fixed N and N_B.
    SweepSplit {
        #[command(flatten)]
        common: CommonOpts,
        /// N_A1 values, e.g. "0,1,2,3,4,5,6".
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<usize>>,
    },
    /// Porter-Thomas convergence: KL divergence over a depth sweep.
    PtStats {
        #[command(flatten)]
        common: CommonOpts,
        /// Depth values, e.g. "1,2,3,4,5,6".
        #[arg(long, value_delimiter = ',')]
        depths: Option<Vec<usize>>,
    },
    /// Analytic phase classification and prediction only; no simulation.
    Phase {
        /// TOML run configuration supplying the partition.
        #[arg(long, conflicts_with_all = ["n_a1", "n_a2", "n_b"])]
        config: Option<PathBuf>,
        #[arg(long)]
        n_a1: Option<usize>,
        #[arg(long)]
        n_a2: Option<usize>,
        #[arg(long)]
        n_b: Option<usize>,
    },
    /// Reload a persisted run directory and reprint its summary.
    Show {
        /// Directory previously written with --out.
        dir: PathBuf,
    },
}

fn read_config(path: &std::path::Path) -> Result<RunConfig, NegsimError> {
    RunConfig::from_path(path).map_err(|err| match err {
        NegsimError::Io(e) => {
            NegsimError::Config(format!("cannot read {}: {e}", path.display()))
        }
        other => other,
    })
}

fn load_config(common: &CommonOpts) -> Result<RunConfig, NegsimError> {
    let mut cfg = match &common.config {
        Some(path) => read_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(noise) = common.noise {
        cfg.noise.depolarizing_per_layer = noise;
    }
    if let Some(shots) = common.tomography {
        cfg.tomography.enabled = true;
        cfg.tomography.shots_per_setting = shots;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_result(result: &RunResult) {
    let failed = result.instances.iter().filter(|r| r.error.is_some()).count();
    println!(
        "phase {}  predicted E {:.4}  mean E {:.6} +/- {:.6}  instances {} (failed {})",
        result.phase,
        result.predicted_log_negativity,
        result.mean_log_negativity,
        result.stderr_log_negativity,
        result.instances.len(),
        failed
    );
    if let Some(kl) = result.mean_kl {
        println!(
            "mean D_KL {kl:.6} +/- {:.6}",
            result.stderr_kl.unwrap_or(0.0)
        );
    }
    let pooled_min = result
        .instances
        .iter()
        .flat_map(|r| r.spectrum.iter().copied())
        .fold(f64::INFINITY, f64::min);
    println!("pooled spectrum minimum {pooled_min:.6}");
}

fn run_sweep(
    common: &CommonOpts,
    axis: SweepAxis,
    values: Vec<usize>,
) -> Result<(), NegsimError> {
    let cfg = load_config(common)?;
    let results = sweep(&cfg, axis, &values, common.workers)?;
    let table = sweep_summary_csv(&values, &results);
    print!("{table}");
    if let Some(out) = &common.out {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("sweep_summary.csv"), &table)?;
        for (v, r) in values.iter().zip(&results) {
            persist(r, &out.join(format!("point_{v:02}")))?;
        }
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn real_main() -> Result<(), NegsimError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Spectrum(common) => {
            let cfg = load_config(&common)?;
            let result = run_ensemble(&cfg, common.workers)?;
            print_result(&result);
            if let Some(out) = &common.out {
                persist(&result, out)?;
                println!("wrote {}", out.display());
            }
            Ok(())
        }
        Command::SweepEnv { common, values } => {
            let values = values.unwrap_or_else(|| (1..=9).rev().collect());
            run_sweep(&common, SweepAxis::EnvironmentSize, values)
        }
        Command::SweepSplit { common, values } => {
            let values = match values {
                Some(v) => v,
                None => {
                    let cfg = load_config(&common)?;
                    let p = cfg.partition()?;
                    (0..=p.n_a()).collect()
                }
            };
            run_sweep(&common, SweepAxis::SplitRatio, values)
        }
        Command::PtStats { common, depths } => {
            let depths = depths.unwrap_or_else(|| (1..=6).collect());
            run_sweep(&common, SweepAxis::Depth, depths)
        }
        Command::Phase { config, n_a1, n_a2, n_b } => {
            let partition = match (config, n_a1, n_a2, n_b) {
                (Some(path), _, _, _) => read_config(&path)?.partition()?,
                (None, Some(a1), Some(a2), Some(b)) => {
                    PartitionSpec::Counts { n_a1: a1, n_a2: a2, n_b: b }.to_partition()?
                }
                _ => {
                    return Err(NegsimError::Config(
                        "phase needs --config or all of --n-a1/--n-a2/--n-b".into(),
                    ))
                }
            };
            println!(
                "partition (N_A1, N_A2, N_B) = ({}, {}, {})",
                partition.n_a1(),
                partition.n_a2(),
                partition.n_b()
            );
            println!("phase {}", classify_phase(&partition));
            println!("predicted E {:.4}", predict_avg_log_negativity(&partition));
            println!("semicircle lower edge sign {:?}", semicircle_edge_sign(&partition));
            Ok(())
        }
        Command::Show { dir } => {
            let result = load(&dir)?;
            print_result(&result);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                NegsimError::Config(_) | NegsimError::Domain(_) | NegsimError::Validation(_) => {
                    ExitCode::from(1)
                }
                _ => ExitCode::from(2),
            }
        }
    }
}
