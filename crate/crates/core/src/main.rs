use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;
use treepca::bench::{output_name, run_experiment, table, BenchError, ExperimentConfig, OutputFormat, RunReport, TABLES};

const OUT_ENV: &str = "TREEPCA_OUT";

#[derive(Parser)]
#[command(name = "treepca", version, about = "Tree-based low-rank approximation of black-box functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Regenerate a named results table.
    Table {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(TABLES))]
        name: String,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args)]
struct Overrides {
    /// Base seed; run i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    /// Test samples for the Monte-Carlo error estimate.
    #[arg(long)]
    mc_samples: Option<usize>,
    /// Output directory. Falls back to the config, then to $TREEPCA_OUT.
    /// Without any, reports go to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Config { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Bench(#[from] BenchError),
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(runs) = self.runs {
            cfg.runs = runs;
        }
        if let Some(n) = self.mc_samples {
            cfg.mc_samples = n;
        }
        if let Some(f) = self.format {
            cfg.format = match f {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            };
        }
        if let Some(dir) = &self.out {
            cfg.out = Some(dir.clone());
        } else if cfg.out.is_none() {
            cfg.out = std::env::var_os(OUT_ENV).map(PathBuf::from);
        }
    }
}

fn extension(format: OutputFormat) -> &'static str {
    match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    }
}

/// Writes the report into the configured directory, or prints it.
fn emit(report: &RunReport, stem: &str) -> Result<(), CliError> {
    let cfg = &report.config;
    let body = report.render(cfg.format);
    let Some(dir) = &cfg.out else {
        print!("{body}");
        return Ok(());
    };
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let path = dir.join(format!("{stem}.{}", extension(cfg.format)));
    fs::write(&path, body).map_err(io(&path))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn run(config: &Path, overrides: &Overrides) -> Result<usize, CliError> {
    let text = fs::read_to_string(config).map_err(|source| CliError::Io {
        path: config.to_path_buf(),
        source,
    })?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|source| CliError::Config {
        path: config.to_path_buf(),
        source,
    })?;
    overrides.apply(&mut cfg);
    let report = run_experiment(&cfg)?;
    let stem = config.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    emit(&report, stem)?;
    eprintln!("{}", report.summary_line());
    Ok(report.summary.failures)
}

fn run_table(name: &str, overrides: &Overrides) -> Result<usize, CliError> {
    let mut failures = 0;
    for (index, (label, mut cfg)) in table(name)?.into_iter().enumerate() {
        overrides.apply(&mut cfg);
        let report = run_experiment(&cfg)?;
        emit(&report, &output_name(name, index))?;
        eprintln!("{label}: {}", report.summary_line());
        failures += report.summary.failures;
    }
    Ok(failures)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, overrides } => run(config, overrides),
        Command::Table { name, overrides } => run_table(name, overrides),
    };
    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            eprintln!("{n} run(s) failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
