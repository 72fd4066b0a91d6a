use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sparsecheb_cli::config::{RawConfig, RealList};
use sparsecheb_cli::{ExperimentConfig, Harness, HarnessError};

/// Sparse Chebyshev detection experiments driven by `key = value` config files.
#[derive(Parser)]
#[command(name = "sparsecheb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (falls back to BOPB_WORKERS, then the available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for detection, evaluation and refitting; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Extra `key=value` config entries, applied after the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Detect an index set and coefficients.
    Detect(ConfigArg),
    /// Error statistics of a stored approximant.
    Eval {
        #[command(flatten)]
        config: ConfigArg,
        /// Approximant CSV; defaults to `index_set.csv` in the output directory.
        #[arg(long)]
        approximant: Option<PathBuf>,
    },
    /// Refit on the extended Poisson index set and evaluate it.
    Extend(ConfigArg),
    /// Sample the oracle at one point given in [-1,1] coordinates.
    OracleProbe {
        #[command(flatten)]
        config: ConfigArg,
        /// Comma-separated coordinates, spatial ones first.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
}

#[derive(Args)]
struct ConfigArg {
    /// Experiment config file.
    config: PathBuf,
}

fn load(path: &PathBuf, cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.clone(),
        source,
    })?;
    let mut raw = RawConfig::parse(&text)?;
    for o in &cli.overrides {
        raw.set(o)?;
    }
    let mut config = ExperimentConfig::from_raw(&raw)?;
    if let Some(seed) = cli.seed {
        if let Some(d) = config.detection.as_mut() {
            d.seed = seed;
        }
        if let Some(e) = config.extend.as_mut() {
            e.seed = seed;
        }
        config.evaluation.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn workers(flag: Option<usize>) -> Result<usize, HarnessError> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var("BOPB_WORKERS") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| HarnessError::Usage(format!("BOPB_WORKERS must be a positive integer, got `{v}`")))?,
            Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        },
    };
    if n == 0 {
        return Err(HarnessError::Usage("worker count must be positive".into()));
    }
    Ok(n)
}

fn run(cli: &Cli) -> Result<(), HarnessError> {
    let n = workers(cli.workers)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| HarnessError::Usage(format!("cannot start worker pool: {e}")))?;
    match &cli.command {
        Command::Detect(c) => {
            let h = Harness::new(load(&c.config, cli)?, n);
            let res = h.run_detect()?;
            println!(
                "detected {} indices from {} samples -> {}",
                res.index_set.len(),
                res.sample_count,
                h.config.output_dir.display()
            );
        }
        Command::Eval { config, approximant } => {
            let h = Harness::new(load(&config.config, cli)?, n);
            let path = approximant
                .clone()
                .unwrap_or_else(|| h.config.output_dir.join("index_set.csv"));
            let s = h.run_eval(&path)?;
            println!("relative error: min {:.3e} lq {:.3e} med {:.3e} uq {:.3e} max {:.3e}", s.lw, s.lq, s.med, s.uq, s.uw);
        }
        Command::Extend(c) => {
            let h = Harness::new(load(&c.config, cli)?, n);
            let s = h.run_extend()?;
            println!("relative error: med {:.3e} max {:.3e}", s.med, s.uw);
        }
        Command::OracleProbe { config, point } => {
            let h = Harness::new(load(&config.config, cli)?, n);
            let p: RealList = point
                .parse()
                .map_err(|e| HarnessError::Usage(format!("bad --point `{point}`: {e}")))?;
            let v = h.probe(&p.0)?;
            println!("{:.16e} {:.16e}", v.re, v.im);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
