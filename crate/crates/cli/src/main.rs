#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod suites;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use commands::Outputs;
use error::CliError;
use suites::Suite;

/// Horofunction compactifications, shadows and Patterson-Sullivan
/// measures for finitely generated subgroups of SL(d, R).
#[derive(Parser, Debug)]
#[command(name = "horoflag", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Worker threads (defaults to all available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Overrides the seed from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate the word ball; writes orbit.csv and regularity.json.
    Orbit,
    /// Estimate the critical exponent; writes exponent.json.
    Exponent,
    /// Build the atomic measure; writes measure.csv and measure.json.
    Measure,
    /// Compare shadow masses with exp(-delta phi); writes shadow_lemma.{csv,json}.
    ShadowLemma,
    /// Run a verification suite; writes verify_<suite>.json.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
    },
    /// Sample the theta-regular limit set; writes limit_set.csv.
    LimitSet,
}

fn write_outputs(dir: &Path, outputs: &Outputs) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    for (name, bytes) in &outputs.files {
        std::fs::write(dir.join(name), bytes)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = config::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.raw.seed = seed;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))?;
    }
    let outputs = match &cli.command {
        Command::Orbit => commands::cmd_orbit(&cfg)?,
        Command::Exponent => commands::cmd_exponent(&cfg)?,
        Command::Measure => commands::cmd_measure(&cfg)?,
        Command::ShadowLemma => commands::cmd_shadow_lemma(&cfg)?,
        Command::LimitSet => commands::cmd_limit_set(&cfg)?,
        Command::Verify { suite } => {
            let report = suites::run(&cfg, *suite)?;
            let mut out = Outputs::default();
            out.add_json(
                &format!("verify_{}.json", suite.name()),
                &json!({ "seed": cfg.raw.seed, "report": report }),
            )?;
            write_outputs(&cli.out, &out)?;
            return if report.pass {
                Ok(())
            } else {
                Err(CliError::Verification(format!("suite {} did not pass", suite.name())))
            };
        }
    };
    write_outputs(&cli.out, &outputs)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("horoflag: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
