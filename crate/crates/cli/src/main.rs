use clap::Parser;
use magflow_cli::{parse_config, run, Command, ConfigError, RunError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Run a magflow experiment from a TOML config.
///
/// Exit codes: 0 success, 2 config error, 3 numerical precondition
/// failure, 4 a contact certificate came out Negative.
#[derive(Parser)]
#[command(version, about, long_about)]
struct Args {
    /// Experiment config (TOML); see the crate docs for the schema and defaults
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts and manifest.json
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Pipeline to run
    #[arg(long, value_enum)]
    command: Command,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = std::fs::read_to_string(&args.config)
        .map_err(|e| RunError::Config(ConfigError::Io(e.to_string())))
        .and_then(|text| {
            let mut cfg = parse_config(&text)?;
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            run(&cfg, &text, args.command, &args.out)
        });
    match result {
        Ok(m) => {
            for o in &m.outputs {
                println!("{}", args.out.join(&o.file).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
