use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use nsfde_cli::config::{parse_raw, validate, ConfigError, Violation, ValidationError, EXPERIMENT_NAMES};
use nsfde_cli::error::{CliError, CliResult, EXIT_OK};
use nsfde_cli::run::{execute, run_experiment};

/// Run an NSFDE large-deviation experiment from a JSON configuration.
#[derive(Debug, Parser)]
#[command(name = "nsfde", version)]
struct Args {
    /// One of: simulate, skeleton, rate, check-assumptions, ldp-verify, stroock, compare.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(EXPERIMENT_NAMES))]
    experiment: String,

    /// Configuration file.
    #[arg(long)]
    config: PathBuf,

    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Overrides the configured output path; without one the CSV goes to stdout.
    #[arg(long)]
    output: Option<PathBuf>,

    /// Worker threads (default: one per core).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
}

fn run(args: Args) -> CliResult<()> {
    let bytes = std::fs::read(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let mut raw = parse_raw(&bytes).map_err(ConfigError::from)?;
    match raw.experiment.as_deref() {
        Some(e) if e != args.experiment => {
            return Err(ConfigError::Validation(ValidationError {
                violations: vec![Violation {
                    field: "experiment".into(),
                    message: format!("config is for `{e}` but `{}` was requested", args.experiment),
                }],
            })
            .into())
        }
        _ => raw.experiment = Some(args.experiment.clone()),
    }
    if let Some(seed) = args.seed {
        raw.seed = Some(seed);
    }
    if let Some(out) = &args.output {
        raw.output_path = Some(out.to_string_lossy().into_owned());
    }
    let config = validate(raw).map_err(ConfigError::from)?;
    let threads = args.threads.map(|t| t as usize);
    if config.output_path.is_some() {
        let manifest = run_experiment(&config, threads)?;
        eprintln!(
            "wrote {} rows to {} (config {})",
            manifest.row_count,
            config.output_path.as_deref().unwrap_or_default(),
            &manifest.config_digest[..12]
        );
    } else {
        let out = execute(&config, threads)?;
        std::io::stdout()
            .write_all(out.csv.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("nsfde: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
