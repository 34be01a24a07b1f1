use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spl_cli::commands;
use spl_cli::config::{ExperimentConfig, OutputFormat, SigmaMode};
use spl_cli::{init_parallelism, CliError};

/// Spectra of graph Laplacians on Poisson point clouds: percolation probes,
/// homogenized-coefficient estimation, discrete spectra, and convergence
/// sweeps against the continuum reference.
#[derive(Parser, Debug)]
#[command(name = "spl", version, about)]
struct Cli {
    /// Path to a TOML config file; flags override file values.
    #[arg(long, global = true)]
    config: Option<String>,

    #[arg(long, global = true)]
    dim: Option<usize>,

    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Dilation exponent; repeatable (box side is 3^m).
    #[arg(long = "m", global = true)]
    m: Vec<u32>,

    #[arg(long = "k-max", global = true)]
    k_max: Option<usize>,

    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Master seed; per-trial seeds are split deterministically.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Relative residual for the conjugate-gradient solver.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Output directory.
    #[arg(long = "out", global = true)]
    out: Option<String>,

    /// Output format for tabular results.
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    format: Option<String>,

    /// Emit a log-log SVG rate plot (converge).
    #[arg(long, global = true)]
    svg: bool,

    /// Fix the homogenized coefficient instead of estimating it.
    #[arg(long = "sigma", global = true)]
    sigma: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Empirical spanning fraction of the largest component over an
    /// intensity grid.
    Probe {
        /// Comma-separated intensity grid.
        #[arg(long, default_value = "0.25,0.5,0.75,1.0,1.25,1.5,2.0,3.0,4.0")]
        alphas: String,
        /// Box side length.
        #[arg(long, default_value_t = 81.0)]
        side: f64,
    },
    /// Estimate the homogenized coefficient along each axis.
    Homogenize,
    /// Discrete spectrum of one sample with the continuum comparison.
    Spectrum,
    /// Full convergence sweep over scales and trials.
    Converge,
    /// Monte-Carlo concentration checks for restricted eigenfunctions.
    McCheck,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(d) = cli.dim {
        cfg.dim = d;
    }
    if let Some(a) = cli.alpha {
        cfg.alpha = a;
    }
    if !cli.m.is_empty() {
        cfg.m_list = cli.m.clone();
    }
    if let Some(k) = cli.k_max {
        cfg.k_max = k;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(t) = cli.tol {
        cfg.tol_solver = t;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if let Some(f) = &cli.format {
        cfg.format = match f.as_str() {
            "json" => OutputFormat::Json,
            _ => OutputFormat::Csv,
        };
    }
    if cli.svg {
        cfg.svg = true;
    }
    if let Some(s) = cli.sigma {
        cfg.sigma_mode = SigmaMode::Fixed { fixed: s };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = build_config(cli)?;
    match &cli.command {
        Command::Probe { alphas, side } => {
            let grid: Result<Vec<f64>, _> =
                alphas.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let grid =
                grid.map_err(|e| CliError::Config(format!("cannot parse --alphas: {e}")))?;
            commands::cmd_probe(&cfg, &grid, *side)?;
        }
        Command::Homogenize => {
            commands::cmd_homogenize(&cfg)?;
        }
        Command::Spectrum => {
            let m = cfg.m_list[0];
            commands::cmd_spectrum(&cfg, m, cfg.master_seed)?;
        }
        Command::Converge => {
            commands::cmd_converge(&cfg)?;
        }
        Command::McCheck => {
            commands::cmd_mc_check(&cfg)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    init_parallelism();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ CliError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(e @ CliError::Runtime(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
