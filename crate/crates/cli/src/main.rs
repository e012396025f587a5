mod artifacts;
mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Config;
use crate::error::CliError;

/// Floorplan reconstruction from sparse panoramas.
///
/// Exit codes: 0 success, 1 usage or config error, 2 IO or parse error,
/// 3 numerical failure.
#[derive(Debug, Parser)]
#[command(name = "panoplan", version)]
struct Cli {
    /// Versioned TOML config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set pipeline.aggregation=spanning_tree`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic home and write it as a scene file.
    Generate {
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct poses and floorplan from a scene.
    Reconstruct {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a reconstruction against the scene's ground truth.
    Evaluate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        recon: PathBuf,
        /// Report path; defaults to report.json in the reconstruction directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a PNG bar chart of connected-component sizes.
        #[arg(long)]
        cc_histogram: Option<PathBuf>,
    },
    /// Render floorplan images and bird's-eye views of a reconstruction.
    Render {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        recon: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Pixels per floorplan cell.
        #[arg(long, default_value_t = 4)]
        scale: usize,
        /// Panorama ids whose floor and ceiling views to render.
        #[arg(long = "bev", value_name = "ID")]
        bev: Vec<u32>,
    },
    /// Print the resolved config as TOML.
    Config,
}

fn run(cli: Cli) -> Result<String, CliError> {
    let cfg = Config::load(cli.config.as_deref(), &cli.overrides)?;
    match cli.command {
        Command::Generate { out } => commands::generate(&cfg, &out),
        Command::Reconstruct { scene, out } => commands::reconstruct_cmd(&cfg, &scene, &out),
        Command::Evaluate { scene, recon, out, cc_histogram } => {
            commands::evaluate_cmd(&cfg, &scene, &recon, out.as_deref(), cc_histogram.as_deref())
        }
        Command::Render { scene, recon, out, scale, bev } => commands::render_cmd(&cfg, &scene, &recon, &out, scale, &bev),
        Command::Config => Ok(cfg.to_toml().trim_end().to_string()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
