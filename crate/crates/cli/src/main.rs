use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nlse::catalog::{self, CATALOG};
use nlse::config::parse_unvalidated;
use nlse::{run_config, CliError, RunOptions, ScenarioConfig};

#[derive(Parser)]
#[command(name = "nlse", version, about = "Nonlinear Schrödinger spin-dynamics scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config file.
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// List, print or run the shipped figure configs.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    List,
    /// Print a catalog config.
    Show { name: String },
    Run {
        name: String,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Maximum number of ensemble members run at once.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(mut cfg: ScenarioConfig, source: &str, args: RunArgs, default_out: &str) -> Result<ExitCode, CliError> {
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    let output = args
        .output
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(default_out));
    cfg.output = Some(output.clone());
    cfg.validate()?;
    let opts = RunOptions { output, jobs: args.jobs.map(|j| j as usize) };
    let report = run_config(&cfg, source, &opts)?;
    for row in &report.aggregate {
        println!(
            "{:<32} mean {:>+.6e}  stderr {:.2e}  (n = {})",
            row.observable, row.mean, row.std_error, row.n_members
        );
    }
    println!("outputs in {}", report.output.display());
    let failed = report.failed();
    if failed > 0 {
        let err = CliError::Divergence(format!("{failed} of {} members failed", report.members.len()));
        eprintln!("error: {err}");
        return Ok(ExitCode::from(err.exit_code()));
    }
    Ok(ExitCode::SUCCESS)
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Simulate { config, run } => {
            let text = std::fs::read_to_string(&config).map_err(|e| CliError::io(&config, e))?;
            let cfg = parse_unvalidated(&text)?;
            let name = config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            execute(cfg, &text, run, &name)
        }
        Command::Catalog { action: CatalogAction::List } => {
            for e in &CATALOG {
                println!("{:<8} {}", e.name, e.description);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Catalog { action: CatalogAction::Show { name } } => {
            print!("{}", catalog::find(&name)?.source);
            Ok(ExitCode::SUCCESS)
        }
        Command::Catalog { action: CatalogAction::Run { name, run } } => {
            let entry = catalog::find(&name)?;
            execute(parse_unvalidated(entry.source)?, entry.source, run, entry.name)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
