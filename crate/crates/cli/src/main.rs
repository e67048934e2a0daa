//! `swaptest`: generate phantoms, train, explain and evaluate from one config file.
//!
//! Each command prints a one-line JSON summary on stdout. Failures print
//! `{"error": <kind>, "message": <text>}` on stderr and exit with status 1
//! (status 2 for command-line usage errors).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use swaptest_core::experiment::{self, ExperimentConfig, ExplainRequest};
use swaptest_core::model::Plane;
use swaptest_core::{Direction, Method};

#[derive(Parser)]
#[command(name = "swaptest", version, about = "Swap Test and Occlusion Test explanations on phantom volumes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the phantom dataset: manifest, volumes and masks.
    Generate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Train, calibrate and score the test split.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Heatmap and slice montage for one scan.
    Explain {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to model.vckpt in the output directory.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        scan: String,
        #[arg(long, value_enum, default_value_t = MethodArg::Swap)]
        method: MethodArg,
        /// Keep only the patch (occlusion) or swap everything but the patch (swap).
        #[arg(long)]
        reversed: bool,
        #[arg(long, value_enum, default_value_t = PlaneArg::Sagittal)]
        plane: PlaneArg,
        #[arg(long, default_value_t = 10)]
        slices: usize,
    },
    /// Continuity and selectivity for both methods.
    Axioms {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Print the default config as JSON.
    DefaultConfig,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Swap,
    Occlusion,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlaneArg {
    Sagittal,
    Coronal,
    Axial,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Swap => Method::Swap,
            MethodArg::Occlusion => Method::Occlusion,
        }
    }
}

impl From<PlaneArg> for Plane {
    fn from(p: PlaneArg) -> Plane {
        match p {
            PlaneArg::Sagittal => Plane::Sagittal,
            PlaneArg::Coronal => Plane::Coronal,
            PlaneArg::Axial => Plane::Axial,
        }
    }
}

fn checkpoint_or_default(cfg: &ExperimentConfig, checkpoint: Option<PathBuf>) -> PathBuf {
    checkpoint.unwrap_or_else(|| cfg.checkpoint_path())
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn run(command: Command) -> swaptest_core::Result<Value> {
    match command {
        Command::Generate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let manifest = experiment::cmd_generate(&cfg)?;
            Ok(json!({
                "command": "generate",
                "scans": manifest.scans.len(),
                "manifest": path_str(&cfg.out("manifest.json")),
                "config_hash": manifest.config_hash,
            }))
        }
        Command::Train { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = experiment::cmd_train(&cfg)?;
            Ok(json!({
                "command": "train",
                "checkpoint": path_str(&cfg.checkpoint_path()),
                "test_auc": out.metrics.test_auc,
                "temperature": out.metrics.temperature,
            }))
        }
        Command::Explain { config, checkpoint, scan, method, reversed, plane, slices } => {
            let cfg = ExperimentConfig::load(&config)?;
            let checkpoint = checkpoint_or_default(&cfg, checkpoint);
            let req = ExplainRequest {
                scan_id: scan,
                method: method.into(),
                direction: if reversed { Direction::Reversed } else { Direction::Standard },
                plane: plane.into(),
                slices,
            };
            let out = experiment::cmd_explain(&cfg, &checkpoint, &req)?;
            Ok(json!({
                "command": "explain",
                "heatmap": path_str(&out.heatmap_path),
                "montage": path_str(&out.montage_path),
                "baseline_prob": out.heatmap.baseline_prob,
            }))
        }
        Command::Axioms { config, checkpoint } => {
            let cfg = ExperimentConfig::load(&config)?;
            let checkpoint = checkpoint_or_default(&cfg, checkpoint);
            let report = experiment::cmd_axioms(&cfg, &checkpoint)?;
            Ok(json!({
                "command": "axioms",
                "csv": path_str(&cfg.out("axioms.csv")),
                "summary": path_str(&cfg.out("axioms.json")),
                "methods": report.methods,
            }))
        }
        Command::DefaultConfig => Ok(serde_json::to_value(ExperimentConfig::default())?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            eprintln!("{}", json!({ "error": "usage", "message": e.to_string().trim() }));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
