use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use templar_demo::fc::run_fit_fc;
use templar_demo::pendulum::run_pendulum;
use templar_demo::plan::{run_plan_with, PlanConfig};
use templar_demo::plot::write_plan_svg;
use templar_demo::scene::SceneConfig;
use templar_demo::{select_backend, Result};

#[derive(Parser)]
#[command(name = "demo", about = "Gradient-based planning, model fitting and pendulum swing-up")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Optimize a collision-free drone path through a cuboid scene.
    Plan {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        #[arg(long, default_value_t = 2)]
        anchors: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0.1)]
        clearance: f64,
        #[arg(long, default_value_t = 1000)]
        max_iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Backend id; defaults to TEMPLAR_BACKEND, then autodiff.
        #[arg(long)]
        backend: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write an SVG of cost and min sdf per iteration.
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Print every iteration.
        #[arg(long)]
        verbose: bool,
    },
    /// Fit the one-unit tanh model to input 1, target 1.
    FitFc {
        #[arg(long, default_value_t = 1e-4)]
        lr: f64,
        #[arg(long, default_value_t = 100)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        backend: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gradient ascent on a torque sequence from the hanging position.
    Pendulum {
        #[arg(long, default_value_t = 50)]
        horizon: usize,
        #[arg(long, default_value_t = 200)]
        iters: usize,
        #[arg(long, default_value_t = 0.05)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        backend: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_out<T: serde::Serialize>(value: &T, out: Option<PathBuf>) -> Result<()> {
    if let Some(path) = out {
        let text = serde_json::to_string_pretty(value)?;
        std::fs::write(&path, text).map_err(|source| templar_demo::DemoError::Write { path, source })?;
    }
    Ok(())
}

/// `Ok(true)` when the command converged.
fn run(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Plan { scene, lr, anchors, samples, clearance, max_iters, seed, backend, out, plot, verbose } => {
            let f = select_backend(backend.as_deref())?;
            let scene = SceneConfig::load(&scene)?;
            let cfg = PlanConfig { lr, num_anchors: anchors, num_samples: samples, clearance, max_iters, seed };
            let report = run_plan_with(&scene, &cfg, f, |it, r| {
                if verbose {
                    match r.min_sdf {
                        Some(d) => println!("iteration {it}, cost = {:.6}, min_sdf - clearance = {:.6}", r.cost, d - clearance),
                        None => println!("iteration {it}, cost = {:.6}, no obstacles", r.cost),
                    }
                }
            })?;
            if report.converged {
                println!("collision-free path found after {} iterations", report.iterations_used);
            } else {
                println!(
                    "no collision-free path after {} iterations (min sdf {:.4}, clearance {clearance})",
                    report.iterations_used,
                    report.final_min_sdf().unwrap_or(f64::NAN)
                );
            }
            if let Some(p) = plot {
                write_plan_svg(&report, clearance, &p)?;
            }
            let converged = report.converged;
            write_out(&report, out)?;
            Ok(converged)
        }
        Cmd::FitFc { lr, iters, seed, backend, out } => {
            let report = run_fit_fc(lr, iters, seed, select_backend(backend.as_deref())?)?;
            if let (Some(a), Some(b)) = (report.losses.first(), report.losses.last()) {
                println!("loss {a:.9} -> {b:.9} over {iters} iterations");
            }
            let ok = report.non_increasing() && report.improved();
            write_out(&report, out)?;
            Ok(ok)
        }
        Cmd::Pendulum { horizon, iters, lr, seed, backend, out } => {
            let report = run_pendulum(horizon, iters, lr, seed, select_backend(backend.as_deref())?)?;
            println!(
                "cumulative reward {:.4} (zero-torque baseline {:.4}, improvement {:.1}%)",
                report.final_reward,
                report.baseline,
                100.0 * report.improvement()
            );
            let ok = report.final_reward > report.baseline;
            write_out(&report, out)?;
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
