use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use stablewave::harness::{run, ExperimentConfig, RawConfig};
use stablewave::Result;

/// Simulate linear fractional stable motion and estimate its stability index.
///
/// Modes: simulate, analyze, estimate, theory, mc. Settings come from the
/// key=value file given by --config; any `--key value` after it overrides
/// the file.
#[derive(Parser, Debug)]
#[command(name = "stablewave", version)]
struct Cli {
    /// simulate | analyze | estimate | theory | mc
    mode: String,

    /// key=value configuration file
    #[arg(long)]
    config: Option<PathBuf>,

    /// Overrides as `--key value` or `--key=value`
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

fn execute(cli: &Cli) -> Result<()> {
    let mut raw = match &cli.config {
        Some(path) => RawConfig::read(path)?,
        None => RawConfig::default(),
    };
    raw.set("mode", &cli.mode, "command line")?;
    raw.apply_overrides(&cli.overrides)?;
    let cfg = ExperimentConfig::from_raw(&raw)?;
    let outcome = run(&cfg)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    for f in &outcome.files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
