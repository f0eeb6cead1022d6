use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{error, info};

use dsc_core::analysis::audit_trace;
use dsc_core::experiments::adult::{run_experiment_adult, AdultConfig};
use dsc_core::experiments::churn::{run_experiment_churn, ChurnConfig};
use dsc_core::io::config::RunConfig;
use dsc_core::run::{run_eval, run_train};
use dsc_core::trace::SolverTrace;
use dsc_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "dsc", version, about = "Train linear classifiers under dataset rate constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the solver seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = LogLevel::Info)]
    log_level: LogLevel,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model; writes model, trace and report files.
    Train,
    /// Evaluate a saved model on the configured data.
    Eval {
        #[arg(long)]
        model: PathBuf,
    },
    /// Adult fairness sweep.
    ExperimentAdult,
    /// Synthetic churn sweep (built-in defaults when no config is given).
    ExperimentChurn,
    /// Check the cutting-plane invariants recorded in a trace file.
    Audit {
        #[arg(long)]
        trace: PathBuf,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum LogLevel {
    Error,
    Warn,
    Info,
    Debug,
}

impl LogLevel {
    fn filter(self) -> log::LevelFilter {
        match self {
            LogLevel::Error => log::LevelFilter::Error,
            LogLevel::Warn => log::LevelFilter::Warn,
            LogLevel::Info => log::LevelFilter::Info,
            LogLevel::Debug => log::LevelFilter::Debug,
        }
    }
}

fn require_config(cli: &Cli) -> Result<&Path> {
    cli.config
        .as_deref()
        .ok_or_else(|| Error::config("this subcommand needs --config PATH"))
}

fn load_run_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(require_config(cli)?)?;
    if let Some(seed) = cli.seed {
        cfg.solver.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train => {
            let cfg = load_run_config(cli)?;
            let outcome = run_train(&cfg)?;
            info!("model written to {}", outcome.model_path.display());
            info!("trace written to {}", outcome.trace_path.display());
            info!("report written to {}", outcome.report_path.display());
            print!("{}", outcome.report);
        }
        Command::Eval { model } => {
            let cfg = load_run_config(cli)?;
            let report = run_eval(&cfg, model)?;
            if cli.out.is_some() {
                let path = cfg.output.dir.join("eval_report.txt");
                std::fs::create_dir_all(&cfg.output.dir).map_err(|e| Error::io(&cfg.output.dir, e))?;
                std::fs::write(&path, &report).map_err(|e| Error::io(&path, e))?;
                info!("report written to {}", path.display());
            }
            print!("{report}");
        }
        Command::ExperimentAdult => {
            let mut cfg = AdultConfig::load(require_config(cli)?)?;
            if let Some(seed) = cli.seed {
                cfg.solver.seed = seed;
            }
            if let Some(out) = &cli.out {
                cfg.output.dir = out.clone();
            }
            let rows = run_experiment_adult(&cfg)?;
            info!("{} rows written to {}", rows.len(), cfg.output.csv_path().display());
        }
        Command::ExperimentChurn => {
            let mut cfg = match &cli.config {
                Some(p) => ChurnConfig::load(p)?,
                None => ChurnConfig::default(),
            };
            if let Some(seed) = cli.seed {
                cfg.solver.seed = seed;
            }
            if let Some(out) = &cli.out {
                cfg.output.dir = out.clone();
            }
            let rows = run_experiment_churn(&cfg)?;
            info!("{} rows written to {}", rows.len(), cfg.output.csv_path().display());
        }
        Command::Audit { trace } => {
            let text = std::fs::read_to_string(trace).map_err(|e| Error::io(trace, e))?;
            let report = audit_trace(&SolverTrace::from_csv(&text, trace)?);
            print!("{report}");
            report.ensure()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level.filter())
        .format_timestamp(None)
        .init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
