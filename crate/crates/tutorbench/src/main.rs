//! Command-line entry point: `run` executes the whole pipeline from a config
//! file, `stage` executes one stage of an existing run, `report` renders a
//! finished run in markdown, JSON, or CSV.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tutorbench::config::Config;
use tutorbench::pipeline::{build_manifest, RunContext, STAGES};
use tutorbench::report::{render_csv, render_json, render_markdown};

#[derive(Parser)]
#[command(name = "tutorbench", version, about = "Context-adaptivity benchmark for tutoring LLMs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute all stages, resuming a partial run if the directory exists.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the run directory from the config.
        #[arg(long)]
        run_dir: Option<PathBuf>,
    },
    /// Execute a single stage of an existing run.
    Stage {
        /// One of: validate, ablate, generate, embed, test, quality, pca, report.
        name: String,
        #[arg(long)]
        run: PathBuf,
    },
    /// Render the report of a finished run.
    Report {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Md)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Md,
    Json,
    Csv,
}

/// Resolves corpus/template paths relative to the config file's directory,
/// so a run directory keeps working from any working directory.
fn load_resolved_config(path: &PathBuf) -> Result<Config, String> {
    let mut config = Config::load(path).map_err(|e| e.to_string())?;
    let base = path.parent().unwrap_or_else(|| std::path::Path::new("."));
    let resolve = |p: &PathBuf| {
        if p.is_absolute() {
            p.clone()
        } else {
            base.join(p)
        }
    };
    config.corpus = resolve(&config.corpus);
    config.template = resolve(&config.template);
    config.run_dir = config.run_dir.as_ref().map(|p| resolve(p));
    Ok(config)
}

fn execute(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run { config, run_dir } => {
            let config = load_resolved_config(&config)?;
            let dir = match run_dir.or_else(|| config.run_dir.clone()) {
                Some(dir) => dir,
                None => {
                    let manifest = build_manifest(&config).map_err(|e| e.to_string())?;
                    PathBuf::from(format!("run_{}", &manifest.run_id[..12]))
                }
            };
            let ctx = RunContext::prepare(config, dir).map_err(|e| e.to_string())?;
            for stage in STAGES {
                if ctx.stage_done(stage) {
                    eprintln!("stage {stage}: already done, skipping");
                    continue;
                }
                eprintln!("stage {stage}: running");
                ctx.run_stage(stage).map_err(|e| e.to_string())?;
            }
            eprintln!("run complete: {}", ctx.run_dir.display());
            Ok(())
        }
        Command::Stage { name, run } => {
            let ctx = RunContext::open(run).map_err(|e| e.to_string())?;
            ctx.run_stage(&name).map_err(|e| e.to_string())
        }
        Command::Report { run, format } => {
            let ctx = RunContext::open(run).map_err(|e| e.to_string())?;
            let report = ctx.build_report().map_err(|e| e.to_string())?;
            let rendered = match format {
                Format::Md => render_markdown(&report),
                Format::Json => render_json(&report),
                Format::Csv => render_csv(&report),
            };
            print!("{rendered}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
