//! Trace-and-replay compilation.
//!
//! [`compile_fn`] runs a function once on example inputs while recording
//! every resolved op that executes, then returns a [`CompiledFn`] that
//! replays the recording. Replay executes the recorded kernels directly, so
//! the eager argument handling of each op (dtype-name lookup, axis and
//! shape inference) never runs again.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::array::HostArray;
use crate::backend::{self, BackendRef};
use crate::dtype::DType;
use crate::error::{Error, Result};
use crate::op::Op;
use crate::probe::{self, CodeGroup};
use crate::shape::Shape;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct SlotRef {
    capture: u64,
    index: usize,
}

/// One executed kernel in a captured graph.
#[derive(Debug, Clone, PartialEq)]
pub struct OpRecord {
    pub backend: BackendRef,
    pub group: CodeGroup,
    pub op: Op,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

/// A straight-line recording of a function over tensors. Immutable once
/// built; replay is thread-safe.
#[derive(Debug, Clone, PartialEq)]
pub struct CapturedGraph {
    records: Vec<OpRecord>,
    constants: Vec<(usize, Arc<HostArray>, &'static str)>,
    input_slots: Vec<usize>,
    output_slots: Vec<usize>,
    num_slots: usize,
    signature: Vec<(Shape, DType)>,
}

impl CapturedGraph {
    pub fn records(&self) -> &[OpRecord] {
        &self.records
    }

    pub fn signature(&self) -> &[(Shape, DType)] {
        &self.signature
    }

    pub fn num_constants(&self) -> usize {
        self.constants.len()
    }
}

struct Recorder {
    id: u64,
    records: Vec<OpRecord>,
    constants: Vec<(usize, Arc<HostArray>, &'static str)>,
    constant_slots: HashMap<*const HostArray, usize>,
    input_derived: Vec<bool>,
}

impl Recorder {
    fn new_slot(&mut self, derived: bool) -> usize {
        self.input_derived.push(derived);
        self.input_derived.len() - 1
    }

    fn slot_of(&mut self, t: &Tensor) -> usize {
        if let Some(s) = t.slot.filter(|s| s.capture == self.id) {
            return s.index;
        }
        let key = Arc::as_ptr(t.array_arc());
        if let Some(&s) = self.constant_slots.get(&key) {
            return s;
        }
        let s = self.new_slot(false);
        self.constant_slots.insert(key, s);
        self.constants.push((s, t.array_arc().clone(), t.backend_id()));
        s
    }
}

thread_local! {
    static RECORDERS: RefCell<Vec<Recorder>> = const { RefCell::new(Vec::new()) };
}

static NEXT_CAPTURE: AtomicU64 = AtomicU64::new(1);

pub(crate) fn is_active() -> bool {
    RECORDERS.with(|r| !r.borrow().is_empty())
}

/// Appends an executed op to the innermost active capture, tagging outputs
/// with fresh slots. A no-op outside capture.
pub(crate) fn record(
    backend: BackendRef,
    op: &Op,
    inputs: &[&Tensor],
    mut outputs: Vec<Tensor>,
) -> Vec<Tensor> {
    RECORDERS.with(|r| {
        let mut stack = r.borrow_mut();
        let Some(rec) = stack.last_mut() else {
            return;
        };
        let in_slots: Vec<usize> = inputs.iter().map(|t| rec.slot_of(t)).collect();
        let derived = in_slots.iter().any(|&s| rec.input_derived[s]);
        let out_slots: Vec<usize> = outputs.iter().map(|_| rec.new_slot(derived)).collect();
        for (t, &s) in outputs.iter_mut().zip(&out_slots) {
            t.slot = Some(SlotRef {
                capture: rec.id,
                index: s,
            });
        }
        rec.records.push(OpRecord {
            backend,
            group: probe::current().unwrap_or(CodeGroup::Backend),
            op: op.clone(),
            inputs: in_slots,
            outputs: out_slots,
        });
    });
    outputs
}

/// Host reads are allowed during capture only for values that do not depend
/// on a captured input.
pub(crate) fn check_materialize(t: &Tensor) -> Result<()> {
    RECORDERS.with(|r| {
        let stack = r.borrow();
        match (stack.last(), t.slot) {
            (Some(rec), Some(s)) if s.capture == rec.id && rec.input_derived[s.index] => {
                Err(Error::Capture(
                    "host materialization of a value derived from a captured input".into(),
                ))
            }
            _ => Ok(()),
        }
    })
}

struct PopGuard;

impl Drop for PopGuard {
    fn drop(&mut self) {
        RECORDERS.with(|r| {
            r.borrow_mut().pop();
        });
    }
}

/// Traces `f` on `example_inputs` and returns a replayable callable.
pub fn compile_fn<F>(f: F, example_inputs: &[Tensor]) -> Result<CompiledFn>
where
    F: FnOnce(&[Tensor]) -> Result<Vec<Tensor>>,
{
    let id = NEXT_CAPTURE.fetch_add(1, Ordering::Relaxed);
    RECORDERS.with(|r| {
        r.borrow_mut().push(Recorder {
            id,
            records: Vec::new(),
            constants: Vec::new(),
            constant_slots: HashMap::new(),
            input_derived: Vec::new(),
        })
    });
    let guard = PopGuard;

    let inputs: Vec<Tensor> = example_inputs
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut t = t.clone();
            t.slot = Some(SlotRef {
                capture: id,
                index: i,
            });
            t
        })
        .collect();
    RECORDERS.with(|r| {
        let mut stack = r.borrow_mut();
        let rec = stack.last_mut().expect("recorder pushed above");
        for _ in &inputs {
            rec.new_slot(true);
        }
    });

    let outputs = f(&inputs)?;

    let graph = RECORDERS.with(|r| {
        let mut stack = r.borrow_mut();
        let rec = stack.last_mut().expect("recorder still active");
        let output_slots = outputs.iter().map(|t| rec.slot_of(t)).collect();
        CapturedGraph {
            records: std::mem::take(&mut rec.records),
            constants: std::mem::take(&mut rec.constants),
            input_slots: (0..inputs.len()).collect(),
            output_slots,
            num_slots: rec.input_derived.len(),
            signature: example_inputs
                .iter()
                .map(|t| (t.shape().clone(), t.dtype()))
                .collect(),
        }
    });
    drop(guard);
    Ok(CompiledFn {
        graph: Arc::new(graph),
    })
}

/// Replays a [`CapturedGraph`].
#[derive(Debug, Clone)]
pub struct CompiledFn {
    graph: Arc<CapturedGraph>,
}

impl CompiledFn {
    pub fn graph(&self) -> &CapturedGraph {
        &self.graph
    }

    /// Replays on inputs matching the capture signature.
    pub fn call(&self, inputs: &[Tensor]) -> Result<Vec<Tensor>> {
        let g = &self.graph;
        if inputs.len() != g.signature.len() {
            return Err(Error::SignatureMismatch(format!(
                "expected {} inputs, got {}",
                g.signature.len(),
                inputs.len()
            )));
        }
        for (i, (t, (shape, dtype))) in inputs.iter().zip(&g.signature).enumerate() {
            if t.shape() != shape || t.dtype() != *dtype {
                return Err(Error::SignatureMismatch(format!(
                    "input {i}: expected {dtype} {shape}, got {} {}",
                    t.dtype(),
                    t.shape()
                )));
            }
        }
        let mut slots: Vec<Option<Tensor>> = vec![None; g.num_slots];
        for (&s, t) in g.input_slots.iter().zip(inputs) {
            slots[s] = Some(t.clone());
        }
        for (s, value, backend) in &g.constants {
            slots[*s] = Some(Tensor::from_arc(backend, value.clone()));
        }
        for rec in &g.records {
            let args: Vec<&Tensor> = rec
                .inputs
                .iter()
                .map(|&s| slots[s].as_ref().expect("slot filled by an earlier record"))
                .collect();
            let outs = probe::scope(rec.group, || backend::exec(rec.backend, &rec.op, &args))?;
            for (&s, t) in rec.outputs.iter().zip(outs) {
                slots[s] = Some(t);
            }
        }
        Ok(g
            .output_slots
            .iter()
            .map(|&s| slots[s].clone().expect("output slot filled"))
            .collect())
    }
}
