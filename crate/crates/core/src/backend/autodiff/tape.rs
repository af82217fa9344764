//! Thread-confined gradient tapes.

use std::cell::RefCell;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::array::HostArray;
use crate::op::Op;
use crate::tensor::Tensor;

/// Position of a tensor's producing node on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct NodeRef {
    pub tape: u64,
    pub node: usize,
    pub output: usize,
}

/// One recorded op. Leaves (variables) have no op.
pub(crate) struct Node {
    pub op: Option<Op>,
    /// Producing node and output index of each input that is on this tape.
    pub parents: Vec<Option<(usize, usize)>>,
    pub inputs: Vec<Arc<HostArray>>,
    pub outputs: Vec<Arc<HostArray>>,
}

pub(crate) struct Tape {
    pub id: u64,
    pub nodes: Vec<Node>,
}

thread_local! {
    static TAPES: RefCell<Vec<Tape>> = const { RefCell::new(Vec::new()) };
}

static NEXT_TAPE: AtomicU64 = AtomicU64::new(1);

pub(crate) fn push() -> u64 {
    let id = NEXT_TAPE.fetch_add(1, Ordering::Relaxed);
    TAPES.with(|t| t.borrow_mut().push(Tape { id, nodes: Vec::new() }));
    id
}

pub(crate) fn pop() -> Option<Tape> {
    TAPES.with(|t| t.borrow_mut().pop())
}

/// Registers `value` as a leaf on the innermost tape.
pub(crate) fn leaf(value: &Tensor) -> Tensor {
    TAPES.with(|t| {
        let mut stack = t.borrow_mut();
        let tape = stack.last_mut().expect("leaf() requires an active tape");
        let node = tape.nodes.len();
        tape.nodes.push(Node {
            op: None,
            parents: Vec::new(),
            inputs: Vec::new(),
            outputs: vec![value.array_arc().clone()],
        });
        let mut out = value.detach();
        out.node = Some(NodeRef {
            tape: tape.id,
            node,
            output: 0,
        });
        out
    })
}

/// Appends a node when some input is tracked on the innermost tape. Only
/// float outputs become differentiable.
pub(crate) fn record(op: &Op, inputs: &[&Tensor], outputs: &mut [Tensor]) {
    TAPES.with(|t| {
        let mut stack = t.borrow_mut();
        let Some(tape) = stack.last_mut() else {
            return;
        };
        let parents: Vec<Option<(usize, usize)>> = inputs
            .iter()
            .map(|x| x.node.filter(|n| n.tape == tape.id).map(|n| (n.node, n.output)))
            .collect();
        if parents.iter().all(Option::is_none) || !outputs.iter().any(|o| o.dtype().is_float()) {
            return;
        }
        let node = tape.nodes.len();
        tape.nodes.push(Node {
            op: Some(op.clone()),
            parents,
            inputs: inputs.iter().map(|x| x.array_arc().clone()).collect(),
            outputs: outputs.iter().map(|o| o.array_arc().clone()).collect(),
        });
        for (i, o) in outputs.iter_mut().enumerate() {
            if o.dtype().is_float() {
                o.node = Some(NodeRef {
                    tape: tape.id,
                    node,
                    output: i,
                });
            }
        }
    });
}
