//! Experiment runner for the multiscale spectral GFEM solver.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use msgfem::experiments::{
    self, parse_list, ExperimentConfig, SChoice,
};

#[derive(Parser)]
#[command(name = "msgfem", version, about = "Multiscale spectral GFEM experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Flat key=value config file; CLI flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fine mesh cells per axis (default 100; the benchmark scale is 400).
    #[arg(long)]
    mesh_n: Option<usize>,
    /// Coefficient example: random-field | high-contrast.
    #[arg(long)]
    example: Option<String>,
    /// Seed of the random coefficient field.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Subdomains per axis (M = m^2).
    #[arg(long)]
    m: Option<usize>,
    /// Overlap layers of the subdomains (default 2).
    #[arg(long)]
    overlap: Option<usize>,
    /// Oversampling layers, e.g. "0,4,8" or "0..12".
    #[arg(long)]
    ell_list: Option<String>,
    /// Local space dimensions, e.g. "2..16".
    #[arg(long)]
    nloc_list: Option<String>,
    /// Harmonic basis sizes, e.g. "20,40,80", or "auto".
    #[arg(long)]
    s_list: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Error vs local space dimension, per oversampling size.
    NlocSweep(CommonArgs),
    /// Error vs oversampling ratio H/H*, per local space dimension.
    RhoSweep(CommonArgs),
    /// Error vs harmonic basis size at fixed (ell, n_loc).
    SSweep(CommonArgs),
    /// Solve one configuration and dump solution/error/coefficient fields.
    FieldDump(CommonArgs),
    /// Run quick end-to-end property checks.
    Selftest,
}

fn build_config(args: &CommonArgs) -> msgfem::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(n) = args.mesh_n {
        cfg.mesh_n = n;
    }
    if let Some(example) = &args.example {
        cfg.example = example.parse()?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(m) = args.m {
        cfg.m = m;
    }
    if let Some(overlap) = args.overlap {
        cfg.overlap_layers = overlap;
    }
    if let Some(list) = &args.ell_list {
        cfg.ell_list = parse_list(list)?;
    }
    if let Some(list) = &args.nloc_list {
        cfg.nloc_list = parse_list(list)?;
    }
    if let Some(list) = &args.s_list {
        cfg.s_list = if list.eq_ignore_ascii_case("auto") {
            SChoice::Auto
        } else {
            SChoice::List(parse_list(list)?)
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_sweep(
    args: &CommonArgs,
    file_name: &str,
    sweep: impl Fn(&ExperimentConfig) -> msgfem::Result<(Vec<experiments::SweepRecord>, usize)>,
) -> ExitCode {
    let cfg = match build_config(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(1);
        }
    };
    match sweep(&cfg) {
        Ok((records, failures)) => {
            let path = cfg.out_dir.join(file_name);
            if let Err(e) = experiments::write_records_csv(&path, &records) {
                eprintln!("write error: {e}");
                return ExitCode::from(2);
            }
            println!("{} records -> {}", records.len(), path.display());
            if failures > 0 {
                eprintln!("{failures} sweep points failed");
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("config error: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::NlocSweep(args) => run_sweep(&args, "nloc_sweep.csv", experiments::run_nloc_sweep),
        Command::RhoSweep(args) => run_sweep(&args, "rho_sweep.csv", experiments::run_rho_sweep),
        Command::SSweep(args) => run_sweep(&args, "s_sweep.csv", experiments::run_s_sweep),
        Command::FieldDump(args) => {
            let cfg = match build_config(&args) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(1);
                }
            };
            match experiments::run_field_dump(&cfg) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("field dump failed: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Selftest => {
            let failures = experiments::run_selftest();
            if failures == 0 {
                ExitCode::SUCCESS
            } else {
                eprintln!("{failures} selftest checks failed");
                ExitCode::from(2)
            }
        }
    }
}
