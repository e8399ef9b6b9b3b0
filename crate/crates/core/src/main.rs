use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use starkguide::lab::{exit_code, load_config, run_command, Command, RunConfig, RunContext};

/// Trapped modes and Stark resonances of curved quantum waveguides.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override a configuration key, e.g. `--set field.F=0.02`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Sweep table read by `fit-width` (default: `<output dir>/sweep_field.csv`).
    #[arg(long)]
    input: Option<PathBuf>,

    /// Root under which `output.dir` is created.
    #[arg(long, env = "STARKGUIDE_OUTPUT_ROOT", default_value = ".")]
    output_root: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(path) => load_config(path, &cli.overrides),
        None => RunConfig::from_toml_str("", &cli.overrides),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    let ctx = RunContext { out_root: cli.output_root, input: cli.input };
    match run_command(cli.command, &cfg, &ctx) {
        Ok(report) => {
            println!("{}", report.dir.display());
            print!("{}", toml::to_string(&report.summary).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
