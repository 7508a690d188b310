use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use aosa_cli::commands::{self, ArraySource};
use aosa_cli::config::RunConfig;
use aosa_cli::{exit_code, with_threads, EXIT_CONFIG};

/// Sparse array-of-subarrays design and evaluation toolbox.
#[derive(Parser)]
#[command(name = "aosa", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores). Outputs do not depend on this.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct ArrayArg {
    /// Array configuration file (`cx cy pose` per line).
    #[arg(long, conflicts_with = "benchmark")]
    array: Option<PathBuf>,
    /// Built-in benchmark array.
    #[arg(long, value_enum)]
    benchmark: Option<Benchmark>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Benchmark {
    Compact,
    Naive,
}

impl ArrayArg {
    fn source(&self) -> Result<ArraySource, String> {
        match (&self.array, self.benchmark) {
            (Some(p), None) => Ok(ArraySource::File(p.clone())),
            (None, Some(Benchmark::Compact)) => Ok(ArraySource::Compact),
            (None, Some(Benchmark::Naive)) => Ok(ArraySource::Naive),
            _ => Err("exactly one of --array or --benchmark is required".into()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a subarray placement and write the design plus cost trace.
    Design {
        #[command(flatten)]
        common: Common,
    },
    /// Beam attributes and pattern dumps for an array.
    Attrs {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        array: ArrayArg,
    },
    /// CRB/ZZB curves over the configured SNR sweep.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        array: ArrayArg,
    },
    /// Monte-Carlo DoA estimation sweep (RMSE and CCDF).
    Montecarlo {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        array: ArrayArg,
    },
    /// Compressive-measurement diagnostics and estimation sweep.
    Compressive {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        array: ArrayArg,
    },
}

fn load_config(common: &Common) -> Result<RunConfig, aosa_core::Error> {
    let mut cfg = RunConfig::from_file(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    cfg.threads = common.threads;
    Ok(cfg)
}

fn run() -> Result<(), (i32, String)> {
    let cli = Cli::parse();
    let (common, action): (
        &Common,
        Box<dyn FnOnce(&RunConfig) -> Result<String, aosa_core::Error> + Send>,
    ) = match &cli.command {
        Command::Design { common } => (
            common,
            Box::new(|cfg: &RunConfig| {
                let out = commands::cmd_design(cfg)?;
                Ok(format!(
                    "design: |C| = {}, cost {:.4} -> {:.4}, {} -> {}",
                    out.dictionary_size,
                    out.initial_cost,
                    out.final_cost,
                    commands::describe_attrs(&out.attrs),
                    out.array_path.display()
                ))
            }),
        ),
        Command::Attrs { common, array } => {
            let source = array.source().map_err(|m| (EXIT_CONFIG, m))?;
            (
                common,
                Box::new(move |cfg: &RunConfig| {
                    let attrs = commands::cmd_attrs(cfg, &source)?;
                    Ok(format!("attrs: {}", commands::describe_attrs(&attrs)))
                }),
            )
        }
        Command::Bounds { common, array } => {
            let source = array.source().map_err(|m| (EXIT_CONFIG, m))?;
            (
                common,
                Box::new(move |cfg: &RunConfig| {
                    let curve = commands::cmd_bounds(cfg, &source)?;
                    Ok(format!(
                        "bounds: {} SNR points, threshold {:?} dB",
                        curve.snr_db.len(),
                        curve.threshold_snr_db
                    ))
                }),
            )
        }
        Command::Montecarlo { common, array } => {
            let source = array.source().map_err(|m| (EXIT_CONFIG, m))?;
            (
                common,
                Box::new(move |cfg: &RunConfig| {
                    let rows = commands::cmd_montecarlo(cfg, &source)?;
                    Ok(format!("montecarlo: {} SNR points", rows.len()))
                }),
            )
        }
        Command::Compressive { common, array } => {
            let source = array.source().map_err(|m| (EXIT_CONFIG, m))?;
            (
                common,
                Box::new(move |cfg: &RunConfig| {
                    let rows = commands::cmd_compressive(cfg, &source)?;
                    Ok(format!("compressive: {} SNR points", rows.len()))
                }),
            )
        }
    };

    let cfg = load_config(common).map_err(|e| (exit_code(&e), e.to_string()))?;
    let summary =
        with_threads(cfg.threads, || action(&cfg)).map_err(|e| (exit_code(&e), e.to_string()))?;
    println!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code as u8)
        }
    }
}
