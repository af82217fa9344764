//! Resolved kernel descriptions.
//!
//! An [`Op`] carries every attribute a kernel needs with all argument
//! normalization already done (negative axes mapped, dtype names parsed,
//! broadcast shapes computed). Building an `Op` is the eager part of a call;
//! executing it is the graph-resident part, and is what graph capture
//! records and replays.

use std::sync::Arc;

use crate::array::HostArray;
use crate::dtype::DType;
use crate::shape::Shape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryKind {
    Sin,
    Cos,
    Tanh,
    Neg,
    Abs,
    Sqrt,
    Exp,
    Log,
    Floor,
    Ceil,
    Round,
}

impl UnaryKind {
    pub fn name(self) -> &'static str {
        match self {
            UnaryKind::Sin => "sin",
            UnaryKind::Cos => "cos",
            UnaryKind::Tanh => "tanh",
            UnaryKind::Neg => "neg",
            UnaryKind::Abs => "abs",
            UnaryKind::Sqrt => "sqrt",
            UnaryKind::Exp => "exp",
            UnaryKind::Log => "log",
            UnaryKind::Floor => "floor",
            UnaryKind::Ceil => "ceil",
            UnaryKind::Round => "round",
        }
    }

    /// Kinds that only make sense on floating point input.
    pub fn requires_float(self) -> bool {
        !matches!(self, UnaryKind::Neg | UnaryKind::Abs)
    }

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            UnaryKind::Sin => x.sin(),
            UnaryKind::Cos => x.cos(),
            UnaryKind::Tanh => x.tanh(),
            UnaryKind::Neg => -x,
            UnaryKind::Abs => x.abs(),
            UnaryKind::Sqrt => x.sqrt(),
            UnaryKind::Exp => x.exp(),
            UnaryKind::Log => x.ln(),
            UnaryKind::Floor => x.floor(),
            UnaryKind::Ceil => x.ceil(),
            UnaryKind::Round => x.round_ties_even(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryKind {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Maximum,
    Minimum,
}

impl BinaryKind {
    pub fn name(self) -> &'static str {
        match self {
            BinaryKind::Add => "add",
            BinaryKind::Sub => "sub",
            BinaryKind::Mul => "mul",
            BinaryKind::Div => "div",
            BinaryKind::Pow => "pow",
            BinaryKind::Maximum => "maximum",
            BinaryKind::Minimum => "minimum",
        }
    }

    #[inline]
    pub fn apply(self, a: f64, b: f64, integral: bool) -> f64 {
        match self {
            BinaryKind::Add => a + b,
            BinaryKind::Sub => a - b,
            BinaryKind::Mul => a * b,
            BinaryKind::Div if integral => (a / b).trunc(),
            BinaryKind::Div => a / b,
            BinaryKind::Pow => a.powf(b),
            BinaryKind::Maximum => {
                if a >= b || a.is_nan() {
                    a
                } else {
                    b
                }
            }
            BinaryKind::Minimum => {
                if a <= b || a.is_nan() {
                    a
                } else {
                    b
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareKind {
    Less,
    Greater,
    Equal,
}

impl CompareKind {
    pub fn name(self) -> &'static str {
        match self {
            CompareKind::Less => "less",
            CompareKind::Greater => "greater",
            CompareKind::Equal => "equal",
        }
    }

    #[inline]
    pub fn apply(self, a: f64, b: f64) -> bool {
        match self {
            CompareKind::Less => a < b,
            CompareKind::Greater => a > b,
            CompareKind::Equal => a == b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReduceKind {
    Sum,
    Mean,
    Min,
    Max,
}

impl ReduceKind {
    pub fn name(self) -> &'static str {
        match self {
            ReduceKind::Sum => "reduce_sum",
            ReduceKind::Mean => "reduce_mean",
            ReduceKind::Min => "reduce_min",
            ReduceKind::Max => "reduce_max",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    /// A fixed value. Inputs: none.
    Constant(Arc<HostArray>),
    Fill {
        shape: Shape,
        value: f64,
        dtype: DType,
    },
    /// Inputs: start, stop of equal shape. Output gains a leading axis of `num`.
    Linspace {
        num: usize,
    },
    RandomUniform {
        low: f64,
        high: f64,
        shape: Shape,
        seed: u64,
        dtype: DType,
    },
    Cast {
        to: DType,
    },
    Reshape {
        shape: Shape,
    },
    Transpose {
        perm: Vec<usize>,
    },
    /// Inputs: any number of tensors agreeing off `axis`.
    Concat {
        axis: usize,
    },
    /// `reps.len()` equals the input rank.
    Tile {
        reps: Vec<usize>,
    },
    Slice {
        axis: usize,
        start: usize,
        end: usize,
    },
    Unary(UnaryKind),
    Binary {
        kind: BinaryKind,
        out_shape: Shape,
    },
    /// One tensor input combined with an embedded scalar constant.
    BinaryScalar {
        kind: BinaryKind,
        value: f64,
        scalar_rhs: bool,
    },
    Compare {
        kind: CompareKind,
        out_shape: Shape,
    },
    /// Inputs: condition (bool), then-branch, else-branch.
    Where {
        out_shape: Shape,
    },
    Clip {
        lo: f64,
        hi: f64,
    },
    /// `axes` sorted, unique, in range.
    Reduce {
        kind: ReduceKind,
        axes: Vec<usize>,
        keepdims: bool,
    },
    /// Inputs: params, indices (integer, last axis indexes leading params axes).
    GatherNd,
    /// Inputs: indices, updates. Duplicate indices accumulate by sum.
    ScatterNd {
        out_shape: Shape,
    },
    /// Inputs of rank >= 2, batch axes broadcast.
    MatMul,
    Inv,
    /// Outputs U, D, V (V not transposed).
    Svd,
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Constant(_) => "constant",
            Op::Fill { .. } => "fill",
            Op::Linspace { .. } => "linspace",
            Op::RandomUniform { .. } => "random_uniform",
            Op::Cast { .. } => "cast",
            Op::Reshape { .. } => "reshape",
            Op::Transpose { .. } => "transpose",
            Op::Concat { .. } => "concatenate",
            Op::Tile { .. } => "tile",
            Op::Slice { .. } => "slice",
            Op::Unary(k) => k.name(),
            Op::Binary { kind, .. } | Op::BinaryScalar { kind, .. } => kind.name(),
            Op::Compare { kind, .. } => kind.name(),
            Op::Where { .. } => "where",
            Op::Clip { .. } => "clip",
            Op::Reduce { kind, .. } => kind.name(),
            Op::GatherNd => "gather_nd",
            Op::ScatterNd { .. } => "scatter_nd",
            Op::MatMul => "matmul",
            Op::Inv => "inv",
            Op::Svd => "svd",
        }
    }

    /// Whether a reverse-mode rule exists for this op.
    pub fn has_grad_rule(&self) -> bool {
        !matches!(self, Op::Inv | Op::Svd)
    }
}
