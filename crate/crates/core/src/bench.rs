//! Per-op overhead profiling.
//!
//! Each op runs on a fixed fixture, once per repeat, with wall time split
//! between the three [`CodeGroup`]s by the probe instrumentation. In replay
//! mode the op is first captured with [`compile_fn`] and the replay is
//! timed instead.

use std::fmt;
use std::hint::black_box;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::array::HostValue;
use crate::backend::{BackendRef, Reduction};
use crate::capture::compile_fn;
use crate::dtype::DType;
use crate::error::{invalid, Error, Result};
use crate::handler::DispatchContext;
use crate::parallel;
use crate::probe::{self, CodeGroup};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Eager,
    Replay,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Eager => "eager",
            Mode::Replay => "replay",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eager" => Ok(Mode::Eager),
            "replay" => Ok(Mode::Replay),
            _ => invalid(format!("unknown mode `{s}` (expected eager or replay)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => invalid(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

/// Median and spread of one group's per-repeat durations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub median_ns: u64,
    pub p10_ns: u64,
    pub p90_ns: u64,
}

impl GroupStats {
    fn from_samples(mut xs: Vec<u64>) -> Self {
        xs.sort_unstable();
        GroupStats {
            median_ns: percentile(&xs, 0.5),
            p10_ns: percentile(&xs, 0.1),
            p90_ns: percentile(&xs, 0.9),
        }
    }
}

fn percentile(sorted: &[u64], p: f64) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    let i = (p * (sorted.len() - 1) as f64).round() as usize;
    sorted[i]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpTiming {
    pub op: String,
    pub backend: String,
    pub mode: Mode,
    pub repeats: usize,
    pub warmup: usize,
    /// Indexed like [`CodeGroup::ALL`].
    pub groups: [GroupStats; 3],
    /// Statistics of the per-repeat sum over groups.
    pub total: GroupStats,
}

impl OpTiming {
    pub fn group(&self, g: CodeGroup) -> GroupStats {
        self.groups[g as usize]
    }

    /// `1 - backend / total` over medians.
    pub fn overhead_fraction(&self) -> f64 {
        if self.total.median_ns == 0 {
            return 0.0;
        }
        1.0 - self.group(CodeGroup::Backend).median_ns as f64 / self.total.median_ns as f64
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub ops: Vec<String>,
    pub repeats: usize,
    pub warmup: usize,
    pub backend: BackendRef,
    pub mode: Mode,
}

type OpFn = fn(BackendRef, &[Tensor]) -> Result<Vec<Tensor>>;

struct Fixture {
    inputs: Vec<Tensor>,
    run: OpFn,
}

/// Names accepted by [`run_bench`], in report order.
pub const BENCH_OPS: &[&str] = &[
    "zeros",
    "ones",
    "array",
    "linspace",
    "random_uniform",
    "cast",
    "reshape",
    "transpose",
    "expand_dims",
    "concatenate",
    "stack",
    "tile",
    "slice",
    "sin",
    "cos",
    "tanh",
    "neg",
    "abs",
    "sqrt",
    "exp",
    "log",
    "floor",
    "ceil",
    "round",
    "add",
    "sub",
    "mul",
    "div",
    "pow",
    "maximum",
    "minimum",
    "less",
    "greater",
    "equal",
    "select",
    "clip",
    "reduce_sum",
    "reduce_mean",
    "reduce_min",
    "reduce_max",
    "gather_nd",
    "scatter_nd",
    "matmul",
    "linear",
    "inv",
    "svd",
];

/// Side of the square 10^4-element default fixture.
const SIDE: usize = 100;
/// Side of the matrices used by inv and svd.
const LINALG_SIDE: usize = 16;

fn one(t: Tensor) -> Result<Vec<Tensor>> {
    Ok(vec![t])
}

/// Fixture inputs and the call under test for `op`.
fn fixture(f: BackendRef, op: &str) -> Result<Fixture> {
    let n = SIDE;
    let x = || f.random_uniform(0.1, 1.0, &[n, n], 1);
    let y = || f.random_uniform(0.1, 1.0, &[n, n], 2);
    let half = || f.random_uniform(0.1, 1.0, &[n / 2, n], 3);
    let (inputs, run): (Vec<Tensor>, OpFn) = match op {
        "zeros" => (vec![], |f, _| one(f.zeros(&[SIDE, SIDE], DType::Float64)?)),
        "ones" => (vec![], |f, _| one(f.ones(&[SIDE, SIDE], DType::Float64)?)),
        "array" => (vec![], |f, _| {
            let rows: Vec<HostValue> = (0..SIDE)
                .map(|i| HostValue::from((0..SIDE).map(|j| (i * SIDE + j) as f64).collect::<Vec<_>>()))
                .collect();
            one(f.array(HostValue::List(rows), DType::Float64)?)
        }),
        "linspace" => (
            vec![f.zeros(&[n], DType::Float64)?, f.ones(&[n], DType::Float64)?],
            |f, xs| one(f.linspace(&xs[0], &xs[1], SIDE)?),
        ),
        "random_uniform" => (vec![], |f, _| one(f.random_uniform(0.0, 1.0, &[SIDE, SIDE], 7)?)),
        "cast" => (vec![x()?], |f, xs| one(f.cast(&xs[0], "float32")?)),
        "reshape" => (vec![x()?], |f, xs| one(f.reshape(&xs[0], &[-1])?)),
        "transpose" => (vec![x()?], |f, xs| one(f.transpose(&xs[0], None)?)),
        "expand_dims" => (vec![x()?], |f, xs| one(f.expand_dims(&xs[0], 0)?)),
        "concatenate" => (vec![half()?, half()?], |f, xs| {
            one(f.concatenate(&[&xs[0], &xs[1]], 0)?)
        }),
        "stack" => (vec![half()?, half()?], |f, xs| one(f.stack(&[&xs[0], &xs[1]], 0)?)),
        "tile" => (vec![half()?], |f, xs| one(f.tile(&xs[0], &[2, 1])?)),
        "slice" => (vec![x()?], |f, xs| one(f.slice(&xs[0], 0, 0, SIDE / 2)?)),
        "sin" => (vec![x()?], |f, xs| one(f.sin(&xs[0])?)),
        "cos" => (vec![x()?], |f, xs| one(f.cos(&xs[0])?)),
        "tanh" => (vec![x()?], |f, xs| one(f.tanh(&xs[0])?)),
        "neg" => (vec![x()?], |f, xs| one(f.neg(&xs[0])?)),
        "abs" => (vec![x()?], |f, xs| one(f.abs(&xs[0])?)),
        "sqrt" => (vec![x()?], |f, xs| one(f.sqrt(&xs[0])?)),
        "exp" => (vec![x()?], |f, xs| one(f.exp(&xs[0])?)),
        "log" => (vec![x()?], |f, xs| one(f.log(&xs[0])?)),
        "floor" => (vec![x()?], |f, xs| one(f.floor(&xs[0])?)),
        "ceil" => (vec![x()?], |f, xs| one(f.ceil(&xs[0])?)),
        "round" => (vec![x()?], |f, xs| one(f.round(&xs[0])?)),
        "add" => (vec![x()?, y()?], |f, xs| one(f.add(&xs[0], &xs[1])?)),
        "sub" => (vec![x()?, y()?], |f, xs| one(f.sub(&xs[0], &xs[1])?)),
        "mul" => (vec![x()?, y()?], |f, xs| one(f.mul(&xs[0], &xs[1])?)),
        "div" => (vec![x()?, y()?], |f, xs| one(f.div(&xs[0], &xs[1])?)),
        "pow" => (vec![x()?, y()?], |f, xs| one(f.pow(&xs[0], &xs[1])?)),
        "maximum" => (vec![x()?, y()?], |f, xs| one(f.maximum(&xs[0], &xs[1])?)),
        "minimum" => (vec![x()?, y()?], |f, xs| one(f.minimum(&xs[0], &xs[1])?)),
        "less" => (vec![x()?, y()?], |f, xs| one(f.less(&xs[0], &xs[1])?)),
        "greater" => (vec![x()?, y()?], |f, xs| one(f.greater(&xs[0], &xs[1])?)),
        "equal" => (vec![x()?, y()?], |f, xs| one(f.equal(&xs[0], &xs[1])?)),
        "select" => {
            let (a, b) = (x()?, y()?);
            let cond = f.less(&a, &b)?;
            (vec![cond, a, b], |f, xs| one(f.select(&xs[0], &xs[1], &xs[2])?))
        }
        "clip" => (vec![x()?], |f, xs| one(f.clip(&xs[0], 0.25, 0.75)?)),
        "reduce_sum" => (vec![x()?], |f, xs| one(f.reduce_sum(&xs[0], Some(-1), false)?)),
        "reduce_mean" => (vec![x()?], |f, xs| one(f.reduce_mean(&xs[0], Some(-1), false)?)),
        "reduce_min" => (vec![x()?], |f, xs| one(f.reduce_min(&xs[0], Some(-1), true)?)),
        "reduce_max" => (vec![x()?], |f, xs| one(f.reduce_max(&xs[0], Some(-1), true)?)),
        "gather_nd" => {
            let idx: Vec<f64> = (0..n).rev().map(|i| i as f64).collect();
            (vec![x()?, f.from_vec(idx, &[n, 1], DType::Int64)?], |f, xs| {
                one(f.gather_nd(&xs[0], &xs[1])?)
            })
        }
        "scatter_nd" => {
            let idx: Vec<f64> = (0..n).map(|i| ((i * 7) % SIDE) as f64).collect();
            (vec![f.from_vec(idx, &[n, 1], DType::Int64)?, x()?], |f, xs| {
                one(f.scatter_nd(&xs[0], &xs[1], &[SIDE, SIDE], Reduction::Sum)?)
            })
        }
        "matmul" => (vec![x()?, y()?], |f, xs| one(f.matmul(&xs[0], &xs[1])?)),
        "linear" => (
            vec![x()?, y()?, f.random_uniform(0.0, 1.0, &[n], 4)?],
            |f, xs| one(f.linear(&xs[0], &xs[1], Some(&xs[2]))?),
        ),
        "inv" => {
            // diagonally dominant, hence well conditioned
            let m = LINALG_SIDE;
            let a = f.random_uniform(0.0, 1.0, &[m, m], 5)?;
            let eye: Vec<f64> = (0..m * m).map(|i| if i % (m + 1) == 0 { m as f64 } else { 0.0 }).collect();
            let a = f.add(&a, &f.from_vec(eye, &[m, m], DType::Float64)?)?;
            (vec![a], |f, xs| one(f.inv(&xs[0])?))
        }
        "svd" => (
            vec![f.random_uniform(0.0, 1.0, &[LINALG_SIDE, LINALG_SIDE], 6)?],
            |f, xs| {
                let (u, d, vt) = f.svd(&xs[0])?;
                Ok(vec![u, d, vt])
            },
        ),
        _ => return invalid(format!("unknown bench op `{op}`")),
    };
    Ok(Fixture { inputs, run })
}

/// Resolves `all` or a comma-separated list into validated op names.
pub fn parse_ops(spec: &str) -> Result<Vec<String>> {
    if spec.trim() == "all" {
        return Ok(BENCH_OPS.iter().map(|s| s.to_string()).collect());
    }
    let ops: Vec<String> = spec
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    if ops.is_empty() {
        return invalid("no ops selected");
    }
    for op in &ops {
        if !BENCH_OPS.contains(&op.as_str()) {
            return invalid(format!("unknown bench op `{op}`"));
        }
    }
    Ok(ops)
}

static BENCH_LOCK: Mutex<()> = Mutex::new(());

/// Restores the parallel switch on drop.
struct SequentialGuard(bool);

impl Drop for SequentialGuard {
    fn drop(&mut self) {
        parallel::set_enabled(self.0);
    }
}

/// Times every selected op. Runs single-threaded; concurrent calls within a
/// process are serialized.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<OpTiming>> {
    if cfg.repeats == 0 {
        return invalid("repeats must be at least 1");
    }
    for op in &cfg.ops {
        if !BENCH_OPS.contains(&op.as_str()) {
            return invalid(format!("unknown bench op `{op}`"));
        }
    }
    let _lock = BENCH_LOCK.lock();
    let _seq = SequentialGuard(parallel::enabled());
    parallel::set_enabled(false);

    cfg.ops
        .iter()
        .map(|op| bench_one(cfg, op))
        .collect()
}

fn bench_one(cfg: &BenchConfig, op: &str) -> Result<OpTiming> {
    let f = cfg.backend;
    let fx = fixture(f, op)?;
    let run = fx.run;
    let compiled = match cfg.mode {
        Mode::Eager => None,
        Mode::Replay => Some(compile_fn(|xs| run(f, xs), &fx.inputs)?),
    };
    let call = || -> Result<Vec<Tensor>> {
        match &compiled {
            None => run(f, &fx.inputs),
            Some(c) => c.call(&fx.inputs),
        }
    };
    for _ in 0..cfg.warmup {
        black_box(call()?);
    }
    let mut samples: [Vec<u64>; 3] = Default::default();
    let mut totals = Vec::with_capacity(cfg.repeats);
    for _ in 0..cfg.repeats {
        let (out, t) = probe::measure(call);
        black_box(out?);
        for g in CodeGroup::ALL {
            samples[g as usize].push(t.get(g));
        }
        totals.push(t.total());
    }
    let [b, c, e] = samples;
    Ok(OpTiming {
        op: op.to_string(),
        backend: f.id().to_string(),
        mode: cfg.mode,
        repeats: cfg.repeats,
        warmup: cfg.warmup,
        groups: [
            GroupStats::from_samples(b),
            GroupStats::from_samples(c),
            GroupStats::from_samples(e),
        ],
        total: GroupStats::from_samples(totals),
    })
}

/// One report line: a single group of a single timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub op: String,
    pub backend: String,
    pub mode: Mode,
    pub group: CodeGroup,
    pub median_ns: u64,
    pub p10_ns: u64,
    pub p90_ns: u64,
    pub repeats: usize,
}

pub fn report_rows(timings: &[OpTiming]) -> Vec<ReportRow> {
    timings
        .iter()
        .flat_map(|t| {
            CodeGroup::ALL.into_iter().map(move |g| {
                let s = t.group(g);
                ReportRow {
                    op: t.op.clone(),
                    backend: t.backend.clone(),
                    mode: t.mode,
                    group: g,
                    median_ns: s.median_ns,
                    p10_ns: s.p10_ns,
                    p90_ns: s.p90_ns,
                    repeats: t.repeats,
                }
            })
        })
        .collect()
}

/// Writes one row per (timing, group) as CSV or a JSON array.
pub fn emit_report(timings: &[OpTiming], format: Format, path: &Path) -> Result<()> {
    let rows = report_rows(timings);
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
            for r in &rows {
                w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
            }
            w.flush()?;
        }
        Format::Json => {
            let text = serde_json::to_string_pretty(&rows).map_err(|e| Error::Io(e.to_string()))?;
            std::fs::write(path, text)?;
        }
    }
    Ok(())
}

/// Median per-call latency of resolving with an explicit backend versus
/// inferring it from a tensor tag, each batch timing `batch` calls.
pub fn dispatch_latency(f: BackendRef, repeats: usize, batch: usize) -> Result<(f64, f64)> {
    let ctx = DispatchContext::new();
    let x = f.zeros(&[SIDE, SIDE], DType::Float64)?;
    let args = [&x];
    let mut explicit = Vec::with_capacity(repeats);
    let mut inferred = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let t = Instant::now();
        for _ in 0..batch {
            black_box(ctx.resolve(black_box(&args), black_box(Some(f)))?);
        }
        explicit.push(t.elapsed().as_nanos() as u64);
        let t = Instant::now();
        for _ in 0..batch {
            black_box(ctx.resolve(black_box(&args), black_box(None))?);
        }
        inferred.push(t.elapsed().as_nanos() as u64);
    }
    let per_call = |xs: Vec<u64>| GroupStats::from_samples(xs).median_ns as f64 / batch.max(1) as f64;
    Ok((per_call(explicit), per_call(inferred)))
}
