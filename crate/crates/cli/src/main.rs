//! Command-line front end: run odometry, render synthetic datasets and
//! score trajectories.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use edgevo::config::Config;
use edgevo::dataset::{read_dataset, write_dataset, Dataset};
use edgevo::metrics::{align_trajectory, ate, rpe_drift, Trajectory};
use edgevo::pipeline::{run_pipeline, synthetic_dataset};
use edgevo::sim::Preset;

#[derive(Parser)]
#[command(name = "edgevo", version, about = "Monocular edge visual odometry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track a sequence and write the estimated trajectory.
    Run {
        /// Dataset directory, or `synthetic:<preset>`.
        #[arg(long)]
        input: String,
        /// Flat `section.field = value` configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output trajectory (TUM format).
        #[arg(long)]
        out: PathBuf,
        /// Output report (JSON).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Render a synthetic dataset directory.
    Simulate {
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Synthetic rendering settings are read from the `pipeline` section.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Score an estimated trajectory against ground truth.
    Eval {
        #[arg(long)]
        est: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Frames per piecewise similarity alignment.
        #[arg(long, default_value_t = 200)]
        scale_interval: usize,
        /// Segment length (m) of the drift metric.
        #[arg(long, default_value_t = 1.0)]
        segment: f64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

enum Outcome {
    Ok,
    TrackingFailure,
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(Config::default()),
    }
}

fn load_input(input: &str, config: &Config) -> Result<Dataset> {
    if let Some(name) = input.strip_prefix("synthetic:") {
        let preset: Preset = name.parse()?;
        return Ok(synthetic_dataset(preset, &config.pipeline)?);
    }
    read_dataset(Path::new(input)).with_context(|| format!("reading dataset {input}"))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(input: &str, config: Option<&Path>, out: &Path, report: Option<&Path>) -> Result<Outcome> {
    let config = load_config(config)?;
    let data = load_input(input, &config)?;
    log::info!("{} frames, {}x{}", data.len(), data.intrinsics.width, data.intrinsics.height);
    let result = run_pipeline(&data, &config)?;
    result.trajectory.write_tum(out)?;
    let metrics = match data.truth_trajectory() {
        Some(truth) => Some(result.report(&truth, &config.pipeline)?),
        None => None,
    };
    if let Some(m) = &metrics {
        println!(
            "ate {:.4} m  drift {:.3} cm/m  {:.1} frames/s  failures {}",
            m.ate_rmse,
            m.drift_cm_per_m,
            m.frames_per_second,
            result.failures.len()
        );
    }
    if let Some(path) = report {
        let doc = json!({
            "input": input,
            "frames": data.len(),
            "keyframes": result.keyframes,
            "tracking_failures": result.failures,
            "wall_seconds": result.wall_seconds,
            "matches": result.matches,
            "metrics": metrics,
            "per_frame_ms": result.frame_ms,
            "config": config,
        });
        write_json(path, &doc)?;
    }
    Ok(if result.failures.is_empty() {
        Outcome::Ok
    } else {
        Outcome::TrackingFailure
    })
}

fn simulate(preset: &str, seed: u64, out: &Path, config: Option<&Path>) -> Result<Outcome> {
    let mut config = load_config(config)?;
    config.pipeline.seed = seed;
    let preset: Preset = preset.parse()?;
    let data = synthetic_dataset(preset, &config.pipeline)?;
    write_dataset(out, &data)?;
    println!("wrote {} frames to {}", data.len(), out.display());
    Ok(Outcome::Ok)
}

fn eval(est: &Path, gt: &Path, scale_interval: usize, segment: f64, report: Option<&Path>) -> Result<Outcome> {
    if scale_interval < 2 {
        bail!("--scale-interval must be at least 2");
    }
    let est = Trajectory::read_tum(est)?;
    let gt = Trajectory::read_tum(gt)?;
    let interval = Some(scale_interval);
    let aligned = align_trajectory(&est, &gt, interval)?;
    let drift = rpe_drift(&aligned, &gt, segment)?;
    let ate_rmse = ate(&est, &gt, interval)?;
    println!("ate {ate_rmse:.4} m  drift {:.3} cm/m", drift.drift_cm_per_m);
    if let Some(path) = report {
        write_json(
            path,
            &json!({
                "frames": est.len(),
                "ate_rmse": ate_rmse,
                "drift_cm_per_m": drift.drift_cm_per_m,
                "segments": drift.segments,
                "failure": drift.failure,
            }),
        )?;
    }
    Ok(if drift.failure { Outcome::TrackingFailure } else { Outcome::Ok })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match &cli.command {
        Command::Run {
            input,
            config,
            out,
            report,
        } => run(input, config.as_deref(), out, report.as_deref()),
        Command::Simulate {
            preset,
            seed,
            out,
            config,
        } => simulate(preset, *seed, out, config.as_deref()),
        Command::Eval {
            est,
            gt,
            scale_interval,
            segment,
            report,
        } => eval(est, gt, *scale_interval, *segment, report.as_deref()),
    };
    match outcome {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::TrackingFailure) => {
            log::warn!("tracking failed");
            ExitCode::from(2)
        }
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(1)
        }
    }
}
