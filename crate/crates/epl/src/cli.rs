use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{error::ErrorKind, Args, Parser, Subcommand};
use epl_core::data::{simulate_dataset, solve_equilibrium};
use epl_core::diagnostics::{error_bound_report, DENSE_LIMIT, ErrorBoundOptions, RhsColumn};
use epl_core::estimators::{estimate, initialize, Method};
use epl_core::game::ValueFunction;

use crate::config::ExperimentConfig;
use crate::dataset_io::{read_dataset_file, write_dataset, write_dataset_file};
use crate::error::{HarnessError, Result};
use crate::montecarlo::{run_monte_carlo, write_records_file, MonteCarloConfig};
use crate::record::ResultRecord;
use crate::summary::{summarize_all, Summary};

const DEFAULT_REPS: usize = 100;

#[derive(Debug, Parser)]
#[command(
    name = "epl",
    version,
    about = "Efficient pseudo-likelihood estimation of dynamic entry/exit games",
    after_help = "Exit status: 0 on success, 1 on usage or input errors, 2 on numerical failure."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a dataset from the equilibrium of the configured game.
    Simulate(SimulateArgs),
    /// Estimate the parameters from a dataset and print a result record.
    Estimate(EstimateArgs),
    /// Run simulated replications and write records plus summaries.
    Montecarlo(MonteCarloArgs),
    /// Check the forward error bound of the Jacobian-free linear solves.
    Diagnose(DiagnoseArgs),
    /// Print the summary tables of a Monte Carlo run.
    Summarize(SummarizeArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Experiment configuration (`key = value` lines); defaults to the standard design.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Dataset CSV to write; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Overrides `seed` from the configuration.
    #[arg(long, value_name = "INT")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Dataset CSV to estimate from.
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,
    /// epl-anal, epl-krylov, epl-jf or nfxp-jf.
    #[arg(long, value_name = "NAME", default_value = "epl-jf")]
    pub method: Method,
    /// Result record to write; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MonteCarloArgs {
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory for records.csv, summary.csv, summary.txt and config.txt.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Base seed; replication r uses seed + r.
    #[arg(long, value_name = "INT")]
    pub seed: Option<u64>,
    /// Comma-separated methods; overrides `methods` from the configuration.
    #[arg(long, value_name = "NAME", value_delimiter = ',')]
    pub method: Vec<Method>,
    #[arg(long, value_name = "INT", default_value_t = DEFAULT_REPS)]
    pub reps: usize,
    /// Worker threads; all cores when omitted.
    #[arg(long, value_name = "INT")]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Evaluate at the starting values estimated from this dataset instead
    /// of at the true parameters and their equilibrium.
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
    /// Seed of the random probe directions.
    #[arg(long, value_name = "INT", default_value_t = 0)]
    pub seed: u64,
    /// Report file; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// Monte Carlo output directory or records CSV.
    #[arg(value_name = "PATH")]
    pub path: PathBuf,
    /// Summary CSV to write; `summary.csv` next to the records when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// Parses `argv`, runs the command and returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::from_path(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| HarnessError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| HarnessError::io("<stdout>", e))
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Simulate(a) => {
            let mut cfg = load_config(a.config.as_deref())?;
            if let Some(seed) = a.seed {
                cfg.seed = seed;
            }
            let ds = simulate_dataset(&cfg.game, &cfg.theta, cfg.n_obs, cfg.seed)?;
            match &a.out {
                Some(p) => write_dataset_file(p, &cfg.game, &ds)?,
                None => write_dataset(std::io::stdout().lock(), &cfg.game, &ds)?,
            }
            Ok(0)
        }
        Command::Estimate(a) => {
            let cfg = load_config(a.config.as_deref())?;
            let ds = read_dataset_file(&a.data, &cfg.game)?;
            let res = estimate(&cfg.game, &ds, a.method, None)?;
            write_text(a.out.as_deref(), &ResultRecord::from(&res).to_text())?;
            if let Some(msg) = &res.message {
                eprintln!("warning: {msg}");
            }
            Ok(if res.converged { 0 } else { 2 })
        }
        Command::Montecarlo(a) => {
            let mut cfg = load_config(a.config.as_deref())?;
            if let Some(seed) = a.seed {
                cfg.seed = seed;
            }
            if !a.method.is_empty() {
                cfg.methods = a.method.clone();
            }
            let mc = MonteCarloConfig::from_experiment(&cfg, a.reps);
            std::fs::create_dir_all(&a.out).map_err(|e| HarnessError::io(&a.out, e))?;
            let records = run_monte_carlo(&mc, a.threads)?;
            write_records_file(&a.out.join("records.csv"), &records)?;
            std::fs::write(a.out.join("config.txt"), cfg.to_text()).map_err(|e| HarnessError::io(a.out.join("config.txt"), e))?;
            let summaries = summarize_all(&records)?;
            let text = write_summaries(&summaries, &a.out.join("summary.csv"))?;
            std::fs::write(a.out.join("summary.txt"), &text).map_err(|e| HarnessError::io(a.out.join("summary.txt"), e))?;
            print!("{text}");
            let failed = records.iter().filter(|r| !r.converged).count();
            eprintln!("{} records written to {} ({failed} not converged)", records.len(), a.out.display());
            Ok(0)
        }
        Command::Diagnose(a) => {
            let cfg = load_config(a.config.as_deref())?;
            if cfg.game.n_values() > DENSE_LIMIT {
                return Err(epl_core::Error::TooLarge {
                    size: cfg.game.n_values(),
                    limit: DENSE_LIMIT,
                }
                .into());
            }
            let (theta, v) = match &a.data {
                Some(path) => {
                    let ds = read_dataset_file(path, &cfg.game)?;
                    let init = initialize(&cfg.game, &ds)?;
                    (init.npl.theta, init.npl.v)
                }
                None => {
                    let v = solve_equilibrium(&cfg.game, &cfg.theta, &ValueFunction::zeros(&cfg.game))?;
                    (cfg.theta.clone(), v)
                }
            };
            let opts = ErrorBoundOptions {
                seed: a.seed,
                ..ErrorBoundOptions::default()
            };
            let report = error_bound_report(&cfg.game, &theta, &v, &RhsColumn::all(cfg.game.n_params()), &opts)?;
            write_text(a.out.as_deref(), &report.to_string())?;
            if report.holds() {
                Ok(0)
            } else {
                eprintln!("error: the error bound is violated for at least one column");
                Ok(2)
            }
        }
        Command::Summarize(a) => {
            let records_path = if a.path.is_dir() { a.path.join("records.csv") } else { a.path.clone() };
            let records = crate::montecarlo::read_records_file(&records_path)?;
            let summaries = summarize_all(&records)?;
            let out = a.out.unwrap_or_else(|| records_path.with_file_name("summary.csv"));
            let text = write_summaries(&summaries, &out)?;
            print!("{text}");
            Ok(0)
        }
    }
}

fn write_summaries(summaries: &[Summary], csv_path: &Path) -> Result<String> {
    let file = std::fs::File::create(csv_path).map_err(|e| HarnessError::io(csv_path, e))?;
    Summary::write_csv(summaries, std::io::BufWriter::new(file))?;
    Ok(summaries.iter().map(|s| s.to_text()).collect::<Vec<_>>().join("\n"))
}
