//! `extload`: extreme load estimation for wind turbines from 10-minute
//! load/wind statistics.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use extload_core::extreme::BandAxis;
use extload_core::Error;

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "extload",
    version,
    about = "Extreme load estimation for wind turbines: spline method, binning baseline, scoring and simulation"
)]
struct Cli {
    /// Flat key=value configuration file; CLI flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Use the reference-scale iteration counts instead of the desk-scale
    /// defaults.
    #[arg(long, global = true)]
    paper_scale: bool,

    #[arg(long, global = true)]
    burn_in: Option<usize>,

    /// Posterior draws of the load model.
    #[arg(long, global = true)]
    m_l: Option<usize>,

    /// Outer wind-sampling repetitions.
    #[arg(long, global = true)]
    m_w: Option<usize>,

    /// Speeds drawn per wind repetition.
    #[arg(long, global = true)]
    n_w: Option<usize>,

    /// Loads drawn per short-term distribution.
    #[arg(long, global = true)]
    n_l: Option<usize>,

    #[arg(long, global = true)]
    k_max: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Aggregate a raw t,v,y stream into 10-minute records.
    Ingest {
        /// Raw input file; stdin when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Record output file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Block length in seconds.
        #[arg(long)]
        block_len: Option<f64>,
    },
    /// Select the wind-speed family by SIC and fit the turbulence model.
    FitWind {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Full spline pipeline: wind submodel, load chain, extreme load levels.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Comma-separated service times in years.
        #[arg(long)]
        t_years: Option<String>,
        /// Basis type codes for the location model (e.g. 1,2,3).
        #[arg(long)]
        allowed_mu: Option<String>,
        /// Basis type codes for the scale model (e.g. 1,2).
        #[arg(long)]
        allowed_sigma: Option<String>,
        /// Write a per-iteration chain trace to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Binning baseline pipeline with its confidence procedure.
    EstimateBinned {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Reuse a wind-pair file from a previous run instead of
        /// regenerating.
        #[arg(long)]
        wind_pairs: Option<PathBuf>,
        #[arg(long)]
        t_years: Option<String>,
        #[arg(long)]
        grid_v: Option<usize>,
        #[arg(long)]
        grid_s: Option<usize>,
    },
    /// Repeated train/test quantile-score comparison of the two methods.
    Score {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Comma-separated quantile levels.
        #[arg(long)]
        taus: Option<String>,
        /// Comma-separated power parameters.
        #[arg(long)]
        bs: Option<String>,
        #[arg(long)]
        repeats: Option<usize>,
        /// Training fraction of each split.
        #[arg(long)]
        split: Option<f64>,
        #[arg(long)]
        grid_v: Option<usize>,
        #[arg(long)]
        grid_s: Option<usize>,
        /// Posterior draws pooled per test-point quantile.
        #[arg(long)]
        score_draws: Option<usize>,
    },
    /// Generate the synthetic training set and reference quantiles.
    Simulate {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        n_blocks: Option<usize>,
        #[arg(long)]
        block_size: Option<usize>,
        #[arg(long)]
        ref_datasets: Option<usize>,
        #[arg(long)]
        ref_size: Option<usize>,
        /// Comma-separated target probabilities.
        #[arg(long)]
        probs: Option<String>,
    },
    /// One-command simulation replication: generate, estimate with both
    /// methods, compare against the reference quantiles.
    ReplicateSim {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        n_blocks: Option<usize>,
        #[arg(long)]
        block_size: Option<usize>,
        #[arg(long)]
        ref_datasets: Option<usize>,
        #[arg(long)]
        ref_size: Option<usize>,
        #[arg(long)]
        probs: Option<String>,
        #[arg(long)]
        grid_v: Option<usize>,
    },
    /// Point-wise 95% predictive bands over a covariate sweep.
    CredibleBand {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Sweep axis: v or s.
        #[arg(long)]
        axis: String,
        #[arg(long)]
        start: Option<f64>,
        #[arg(long)]
        stop: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        halfwidth: Option<f64>,
        /// Posterior draws behind the bands.
        #[arg(long, default_value_t = 200)]
        draws: usize,
    },
}

fn build_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.merge_file(path)?;
    }
    if cli.paper_scale {
        cfg.apply_paper_scale();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(x) = cli.burn_in {
        cfg.burn_in = x;
    }
    if let Some(x) = cli.m_l {
        cfg.m_l = x;
    }
    if let Some(x) = cli.m_w {
        cfg.m_w = x;
    }
    if let Some(x) = cli.n_w {
        cfg.n_w = x;
    }
    if let Some(x) = cli.n_l {
        cfg.n_l = x;
    }
    if let Some(x) = cli.k_max {
        cfg.k_max = x;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut cfg = build_config(&cli)?;
    match cli.command {
        Command::Ingest {
            input,
            output,
            block_len,
        } => {
            if let Some(b) = block_len {
                cfg.block_len_secs = b;
            }
            commands::cmd_ingest(input, output, &cfg)
        }
        Command::FitWind { input, out_dir } => commands::cmd_fit_wind(input, out_dir, &cfg),
        Command::Estimate {
            input,
            out_dir,
            t_years,
            allowed_mu,
            allowed_sigma,
            trace,
        } => {
            if let Some(v) = t_years {
                cfg.set("t_years", &v)?;
            }
            if let Some(v) = allowed_mu {
                cfg.set("allowed_mu", &v)?;
            }
            if let Some(v) = allowed_sigma {
                cfg.set("allowed_sigma", &v)?;
            }
            commands::cmd_estimate(input, out_dir, trace, &cfg)
        }
        Command::EstimateBinned {
            input,
            out_dir,
            wind_pairs,
            t_years,
            grid_v,
            grid_s,
        } => {
            if let Some(v) = t_years {
                cfg.set("t_years", &v)?;
            }
            if let Some(v) = grid_v {
                cfg.grid_v = v;
            }
            if let Some(v) = grid_s {
                cfg.grid_s = v;
            }
            commands::cmd_estimate_binned(input, out_dir, wind_pairs, &cfg)
        }
        Command::Score {
            input,
            out_dir,
            taus,
            bs,
            repeats,
            split,
            grid_v,
            grid_s,
            score_draws,
        } => {
            if let Some(v) = taus {
                cfg.set("taus", &v)?;
            }
            if let Some(v) = bs {
                cfg.set("bs", &v)?;
            }
            if let Some(v) = repeats {
                cfg.score_repeats = v;
            }
            if let Some(v) = split {
                cfg.split_frac = v;
            }
            if let Some(v) = grid_v {
                cfg.grid_v = v;
            }
            if let Some(v) = grid_s {
                cfg.grid_s = v;
            }
            if let Some(v) = score_draws {
                cfg.score_draws = v;
            }
            commands::cmd_score(input, out_dir, &cfg)
        }
        Command::Simulate {
            out_dir,
            n_blocks,
            block_size,
            ref_datasets,
            ref_size,
            probs,
        } => {
            if let Some(v) = n_blocks {
                cfg.sim_blocks = v;
            }
            if let Some(v) = block_size {
                cfg.sim_block_size = v;
            }
            if let Some(v) = ref_datasets {
                cfg.ref_datasets = v;
            }
            if let Some(v) = ref_size {
                cfg.ref_size = v;
            }
            if let Some(v) = probs {
                cfg.set("sim_probs", &v)?;
            }
            commands::cmd_simulate(out_dir, &cfg)
        }
        Command::ReplicateSim {
            out_dir,
            n_blocks,
            block_size,
            ref_datasets,
            ref_size,
            probs,
            grid_v,
        } => {
            if let Some(v) = n_blocks {
                cfg.sim_blocks = v;
            }
            if let Some(v) = block_size {
                cfg.sim_block_size = v;
            }
            if let Some(v) = ref_datasets {
                cfg.ref_datasets = v;
            }
            if let Some(v) = ref_size {
                cfg.ref_size = v;
            }
            if let Some(v) = probs {
                cfg.set("sim_probs", &v)?;
            }
            if let Some(v) = grid_v {
                cfg.grid_v = v;
            }
            commands::cmd_replicate_sim(out_dir, &cfg)
        }
        Command::CredibleBand {
            input,
            out_dir,
            axis,
            start,
            stop,
            step,
            halfwidth,
            draws,
        } => {
            let axis = match axis.to_ascii_lowercase().as_str() {
                "v" => BandAxis::V,
                "s" => BandAxis::S,
                other => {
                    return Err(Error::invalid_argument(format!(
                        "axis must be 'v' or 's', got '{other}'"
                    )))
                }
            };
            commands::cmd_credible_band(
                input, out_dir, axis, start, stop, step, halfwidth, draws, &cfg,
            )
        }
    }
}

fn error_class(e: &Error) -> (&'static str, u8) {
    match e {
        Error::InvalidArgument(_)
        | Error::InvalidState(_)
        | Error::IllegalMove(_)
        | Error::EmptySlab { .. }
        | Error::Ingest { .. } => ("precondition", 2),
        Error::Numeric(_) | Error::ChainStall(_) => ("numeric", 3),
        Error::Io(_) => ("io", 4),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (class, code) = error_class(&e);
            eprintln!("error[{class}]: {e}");
            ExitCode::from(code)
        }
    }
}
