use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use egt_cli::run::{preset_document, run_document, run_file, RunOptions, RunOutcome};
use egt_cli::{scenario, threads_from_env, CliError};
use egt_core::tournament::ScenarioPreset;

#[derive(Parser)]
#[command(name = "egt", version, about = "Run evolutionary game theory scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunFlags {
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the scenario's output_dir, else egt-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress the summary on stdout.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and report every problem found.
    Validate { file: PathBuf },
    /// Run a scenario file.
    Run {
        file: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run a named preset.
    Preset {
        name: String,
        /// Parameter override, repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_kv)]
        set: Vec<(String, String)>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// List the available presets.
    ListPresets,
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn report(outcome: &RunOutcome, quiet: bool) {
    if quiet {
        return;
    }
    println!("wrote {} to {}", outcome.artifacts.join(", "), outcome.out_dir.display());
    println!("{}", egt_cli::output::json_string(&outcome.summary).trim_end());
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate { file } => {
            let diags = scenario::validate_file(&file)?;
            if diags.is_empty() {
                println!("{}: ok", file.display());
                Ok(())
            } else {
                Err(CliError::Invalid(diags))
            }
        }
        Command::Run { file, flags } => {
            let opts = RunOptions { seed: flags.seed, out: flags.out };
            report(&run_file(&file, &opts)?, flags.quiet);
            Ok(())
        }
        Command::Preset { name, set, flags } => {
            let opts = RunOptions { seed: flags.seed, out: flags.out };
            report(&run_document(preset_document(&name, &set), &opts)?, flags.quiet);
            Ok(())
        }
        Command::ListPresets => {
            for p in ScenarioPreset::ALL {
                println!("{:<22} {}", p.name(), p.description());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = threads_from_env().and_then(|n| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
        pool.install(|| dispatch(cli.command))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("egt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
