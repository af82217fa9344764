use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use templar::bench::{emit_report, parse_ops, run_bench, BenchConfig, Format, Mode};
use templar::CodeGroup;
use templar_demo::{select_backend, Result};

#[derive(Parser)]
#[command(name = "bench", about = "Per-op overhead split into backend, compilable and eager time")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Time core ops on their fixtures.
    Ops {
        /// `all` or a comma-separated list of op names.
        #[arg(long, default_value = "all")]
        ops: String,
        #[arg(long, default_value_t = 1000)]
        repeats: usize,
        #[arg(long, default_value_t = 100)]
        warmup: usize,
        #[arg(long, default_value = "host")]
        backend: String,
        #[arg(long, default_value = "eager")]
        mode: String,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cmd: Cmd) -> Result<()> {
    let Cmd::Ops { ops, repeats, warmup, backend, mode, format, out } = cmd;
    let format: Format = format.parse()?;
    let cfg = BenchConfig {
        ops: parse_ops(&ops)?,
        repeats,
        warmup,
        backend: select_backend(Some(&backend))?,
        mode: mode.parse::<Mode>()?,
    };
    let timings = run_bench(&cfg)?;
    println!("{:<22} {:>12} {:>12} {:>12} {:>9}", "op", "backend_ns", "compile_ns", "eager_ns", "overhead");
    for t in &timings {
        println!(
            "{:<22} {:>12} {:>12} {:>12} {:>8.1}%",
            t.op,
            t.group(CodeGroup::Backend).median_ns,
            t.group(CodeGroup::IvyCompilable).median_ns,
            t.group(CodeGroup::IvyEager).median_ns,
            100.0 * t.overhead_fraction()
        );
    }
    emit_report(&timings, format, &out)?;
    Ok(())
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
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
