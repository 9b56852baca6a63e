use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use dgm_cli::config::{ConfigError, PipelineConfig};
use dgm_cli::experiment::{run_dummy, run_experiment, ExperimentPreset};
use dgm_cli::run::{run_eval, run_synth};
use dgm_core::dummy::DummySpec;

/// Disjoint generative models for tabular synthetic data: partition a
/// table column-wise, synthesize each partition independently, rejoin by
/// concatenation or a validator loop, and evaluate utility and privacy.
#[derive(Parser)]
#[command(name = "dgm", version, about)]
struct Cli {
    /// Parallel worker cap (also capped by the DGM_JOBS env var).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write the synthetic table plus reports.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate an existing synthetic CSV against real train/holdout data.
    Eval {
        #[arg(long)]
        real: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        synth: PathBuf,
        #[arg(long)]
        holdout: PathBuf,
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate controlled Gaussian benchmark tables.
    Dummy {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        k1: usize,
        #[arg(long, default_value_t = 3)]
        k2: usize,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit the full 21-gamma sweep instead of a single table.
        #[arg(long)]
        sweep: bool,
        /// Seeds per gamma in sweep mode.
        #[arg(long, default_value_t = 10)]
        repeats: usize,
    },
    /// Run a preset experiment sweep.
    Experiment {
        #[arg(value_enum)]
        preset: ExperimentPreset,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Repeats override.
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Check a pipeline config file and exit.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

fn effective_jobs(flag: Option<usize>) -> usize {
    let hardware = std::thread::available_parallelism().map_or(1, usize::from);
    let mut jobs = flag.unwrap_or(hardware).max(1);
    if let Ok(cap) = std::env::var("DGM_JOBS") {
        if let Ok(cap) = cap.parse::<usize>() {
            jobs = jobs.min(cap.max(1));
        }
    }
    jobs
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    rayon::ThreadPoolBuilder::new()
        .num_threads(effective_jobs(cli.jobs))
        .build_global()
        .ok();

    match cli.command {
        Command::Synth { config, out, seed } => {
            let config = PipelineConfig::load(&config)?;
            let csv = run_synth(&config, &out, seed)?;
            println!("synthetic table written to {}", csv.display());
        }
        Command::Eval {
            real,
            schema,
            synth,
            holdout,
            label,
            out,
        } => {
            let report = run_eval(&real, &schema, &synth, &holdout, label.as_deref(), &out)?;
            println!(
                "eps_identifiability {:.4} (below 9% level: {})",
                report.eps_identifiability, report.eps_below_threshold
            );
        }
        Command::Dummy {
            out,
            k1,
            k2,
            n,
            gamma,
            seed,
            sweep,
            repeats,
        } => {
            let spec = DummySpec::new(k1, k2, n, gamma, seed);
            let manifest = run_dummy(&out, &spec, sweep, repeats)?;
            println!("dummy tables listed in {}", manifest.display());
        }
        Command::Experiment {
            preset,
            config,
            out,
            repeats,
        } => {
            let config = PipelineConfig::load(&config)?;
            let csv = run_experiment(preset, &config, &out, repeats)?;
            println!("sweep written to {}", csv.display());
        }
        Command::ValidateConfig { config } => {
            PipelineConfig::load(&config)?;
            println!("config ok");
        }
    }
    Ok(())
}

fn main() {
    if let Err(error) = real_main() {
        eprintln!("error: {error:#}");
        let code = if error.downcast_ref::<ConfigError>().is_some() {
            2
        } else {
            3
        };
        std::process::exit(code);
    }
}
