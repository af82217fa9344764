//! The unified core op surface.
//!
//! Each op first resolves its arguments into an [`Op`] inside the eager
//! code group, then executes the op through the backend inside the backend
//! group. Graph-resident fixups that are not the op's own kernel (the
//! transpose after svd, rank padding around matmul) run in the compilable
//! group.

use std::sync::Arc;

use crate::array::{HostArray, HostValue};
use crate::backend::{self, BackendRef, Gradients, LossOutput, Variable};
use crate::dtype::DType;
use crate::error::{invalid, Error, Result};
use crate::op::{BinaryKind, CompareKind, Op, ReduceKind, UnaryKind};
use crate::probe::{self, CodeGroup};
use crate::shape::{broadcast_shapes, normalize_axis, Shape};
use crate::tensor::Tensor;

/// A binary-op argument: a tensor or a plain number.
#[derive(Debug, Clone, Copy)]
pub enum Operand<'a> {
    Tensor(&'a Tensor),
    Scalar(f64),
}

impl<'a> From<&'a Tensor> for Operand<'a> {
    fn from(t: &'a Tensor) -> Self {
        Operand::Tensor(t)
    }
}

impl From<f64> for Operand<'_> {
    fn from(v: f64) -> Self {
        Operand::Scalar(v)
    }
}

/// How [`BackendRef::scatter_nd`] combines duplicate indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    #[default]
    Sum,
}

impl BackendRef {
    fn kernel(self, op: Op, inputs: &[&Tensor]) -> Result<Vec<Tensor>> {
        probe::scope(CodeGroup::Backend, || backend::exec(self, &op, inputs))
    }

    fn kernel1(self, op: Op, inputs: &[&Tensor]) -> Result<Tensor> {
        Ok(self.kernel(op, inputs)?.swap_remove(0))
    }

    fn compilable1(self, op: Op, inputs: &[&Tensor]) -> Result<Tensor> {
        probe::scope(CodeGroup::IvyCompilable, || backend::exec(self, &op, inputs))
            .map(|mut v| v.swap_remove(0))
    }

    fn constant(self, a: HostArray) -> Tensor {
        Tensor::new(self.id(), a)
    }

    fn own(self, xs: &[&Tensor]) -> Result<()> {
        for x in xs {
            if x.backend_id() != self.id() {
                return Err(Error::WrongBackend {
                    expected: self.id().to_string(),
                    found: x.backend_id().to_string(),
                });
            }
        }
        Ok(())
    }

    // creation

    pub fn full(self, shape: &[usize], value: f64, dtype: DType) -> Result<Tensor> {
        let op = Op::Fill {
            shape: Shape::from(shape),
            value,
            dtype,
        };
        self.kernel1(op, &[])
    }

    pub fn zeros(self, shape: &[usize], dtype: DType) -> Result<Tensor> {
        self.full(shape, 0.0, dtype)
    }

    pub fn ones(self, shape: &[usize], dtype: DType) -> Result<Tensor> {
        self.full(shape, 1.0, dtype)
    }

    /// Builds a tensor from nested host values.
    pub fn array(self, values: impl Into<HostValue>, dtype: DType) -> Result<Tensor> {
        let values = values.into();
        let op = probe::eager(|| HostArray::from_host(&values, dtype).map(|a| Op::Constant(Arc::new(a))))?;
        self.kernel1(op, &[])
    }

    /// Builds a tensor from a flat row-major buffer.
    pub fn from_vec(self, data: Vec<f64>, shape: &[usize], dtype: DType) -> Result<Tensor> {
        let op = probe::eager(|| HostArray::new(data, shape, dtype).map(|a| Op::Constant(Arc::new(a))))?;
        self.kernel1(op, &[])
    }

    pub fn scalar(self, value: f64, dtype: DType) -> Result<Tensor> {
        self.full(&[], value, dtype)
    }

    /// `num` evenly spaced values from `start` to `stop` inclusive. Tensor
    /// endpoints interpolate element-wise under a new leading axis.
    pub fn linspace<'a>(
        self,
        start: impl Into<Operand<'a>>,
        stop: impl Into<Operand<'a>>,
        num: usize,
    ) -> Result<Tensor> {
        let (start, stop) = (start.into(), stop.into());
        let (a, b) = probe::eager(|| -> Result<(Tensor, Tensor)> {
            if num < 2 {
                return invalid(format!("linspace needs num >= 2, got {num}"));
            }
            let like = match (start, stop) {
                (Operand::Tensor(t), _) | (_, Operand::Tensor(t)) => Some(t),
                _ => None,
            };
            let lift = |o: Operand<'_>| -> Result<Tensor> {
                match (o, like) {
                    (Operand::Tensor(t), _) => {
                        self.own(&[t])?;
                        Ok(t.clone())
                    }
                    (Operand::Scalar(v), Some(t)) => {
                        Ok(self.constant(HostArray::full(t.shape().clone(), v, t.dtype())))
                    }
                    (Operand::Scalar(v), None) => Ok(self.constant(HostArray::scalar(v, DType::Float64))),
                }
            };
            let (a, b) = (lift(start)?, lift(stop)?);
            if a.shape() != b.shape() || a.dtype() != b.dtype() {
                return invalid(format!(
                    "linspace endpoints differ: {} {} vs {} {}",
                    a.dtype(),
                    a.shape(),
                    b.dtype(),
                    b.shape()
                ));
            }
            if !a.dtype().is_float() {
                return Err(Error::InvalidDType(format!("linspace needs a float dtype, got {}", a.dtype())));
            }
            Ok((a, b))
        })?;
        self.kernel1(Op::Linspace { num }, &[&a, &b])
    }

    /// I.i.d. float64 samples on `[low, high)` from a generator keyed by
    /// `seed` alone.
    pub fn random_uniform(self, low: f64, high: f64, shape: &[usize], seed: u64) -> Result<Tensor> {
        let op = probe::eager(|| {
            if !low.is_finite() || !high.is_finite() || low >= high {
                return invalid(format!("random_uniform needs finite low < high, got [{low}, {high})"));
            }
            Ok(Op::RandomUniform {
                low,
                high,
                shape: Shape::from(shape),
                seed,
                dtype: DType::Float64,
            })
        })?;
        self.kernel1(op, &[])
    }

    // layout

    /// Converts to the dtype named `dtype`. Float to int truncates toward zero.
    pub fn cast(self, x: &Tensor, dtype: &str) -> Result<Tensor> {
        let to = probe::eager(|| -> Result<DType> {
            self.own(&[x])?;
            dtype.parse()
        })?;
        if to == x.dtype() {
            return Ok(x.clone());
        }
        self.kernel1(Op::Cast { to }, &[x])
    }

    /// Reshape with at most one `-1` wildcard extent.
    pub fn reshape(self, x: &Tensor, shape: &[isize]) -> Result<Tensor> {
        let op = probe::eager(|| -> Result<Op> {
            self.own(&[x])?;
            Ok(Op::Reshape {
                shape: x.shape().resolve_reshape(shape)?,
            })
        })?;
        self.kernel1(op, &[x])
    }

    /// Permutes axes; `None` reverses them.
    pub fn transpose(self, x: &Tensor, axes: Option<&[isize]>) -> Result<Tensor> {
        let op = probe::eager(|| -> Result<Op> {
            self.own(&[x])?;
            let rank = x.rank();
            let perm = match axes {
                None => (0..rank).rev().collect(),
                Some(axes) => {
                    if axes.len() != rank {
                        return invalid(format!("transpose axes {axes:?} do not match rank {rank}"));
                    }
                    let perm = axes
                        .iter()
                        .map(|&a| normalize_axis(a, rank))
                        .collect::<Result<Vec<_>>>()?;
                    let mut seen = vec![false; rank];
                    for &p in &perm {
                        if std::mem::replace(&mut seen[p], true) {
                            return invalid(format!("transpose axes {axes:?} are not a permutation"));
                        }
                    }
                    perm
                }
            };
            Ok(Op::Transpose { perm })
        })?;
        self.kernel1(op, &[x])
    }

    /// Inserts a unit axis at `axis` (in `[-(rank+1), rank]`).
    pub fn expand_dims(self, x: &Tensor, axis: isize) -> Result<Tensor> {
        let op = probe::eager(|| -> Result<Op> {
            self.own(&[x])?;
            let axis = normalize_axis(axis, x.rank() + 1)?;
            let mut dims = x.shape().dims().to_vec();
            dims.insert(axis, 1);
            Ok(Op::Reshape { shape: Shape::new(dims) })
        })?;
        self.kernel1(op, &[x])
    }

    pub fn concatenate(self, xs: &[&Tensor], axis: isize) -> Result<Tensor> {
        let op = probe::eager(|| -> Result<Op> {
            self.own(xs)?;
            let Some(first) = xs.first() else {
                return invalid("concatenate of zero tensors");
            };
            let axis = normalize_axis(axis, first.rank())?;
            for x in xs {
                if x.dtype() != first.dtype() {
                    return invalid("concatenate of mixed dtypes");
                }
                let same_rank = x.rank() == first.rank();
                let agree = same_rank
                    && x.shape()
                        .iter()
                        .zip(first.shape().iter())
                        .enumerate()
                        .all(|(k, (a, b))| k == axis || a == b);
                if !agree {
                    return invalid(format!(
                        "ragged concatenate: {} vs {} along axis {axis}",
                        first.shape(),
                        x.shape()
                    ));
                }
            }
            Ok(Op::Concat { axis })
        })?;
        self.kernel1(op, xs)
    }

    /// Joins equally shaped tensors along a new axis.
    pub fn stack(self, xs: &[&Tensor], axis: isize) -> Result<Tensor> {
        let expanded = xs
            .iter()
            .map(|x| self.expand_dims(x, axis))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&Tensor> = expanded.iter().collect();
        self.concatenate(&refs, axis)
    }

    /// Repeats `x` along each axis. Shorter `reps` are left-padded with 1;
    /// longer ones left-pad the input's shape with unit axes.
    pub fn tile(self, x: &Tensor, reps: &[usize]) -> Result<Tensor> {
        let (pad, reps) = probe::eager(|| -> Result<(Option<Op>, Vec<usize>)> {
            self.own(&[x])?;
            let rank = x.rank();
            if reps.len() > rank {
                let mut dims = vec![1; reps.len() - rank];
                dims.extend_from_slice(x.shape().dims());
                Ok((Some(Op::Reshape { shape: Shape::new(dims) }), reps.to_vec()))
            } else {
                let mut full = vec![1; rank - reps.len()];
                full.extend_from_slice(reps);
                Ok((None, full))
            }
        })?;
        let padded;
        let input = match pad {
            Some(op) => {
                padded = self.compilable1(op, &[x])?;
                &padded
            }
            None => x,
        };
        self.kernel1(Op::Tile { reps }, &[input])
    }

    /// The half-open range `start..end` along `axis`.
    pub fn slice(self, x: &Tensor, axis: isize, start: usize, end: usize) -> Result<Tensor> {
        let op = probe::eager(|| -> Result<Op> {
            self.own(&[x])?;
            let axis = normalize_axis(axis, x.rank())?;
            let extent = x.shape()[axis];
            if start > end || end > extent {
                return invalid(format!("slice {start}..{end} out of range for extent {extent}"));
            }
            Ok(Op::Slice { axis, start, end })
        })?;
        self.kernel1(op, &[x])
    }

    // elementwise

    fn unary(self, x: &Tensor, kind: UnaryKind) -> Result<Tensor> {
        probe::eager(|| -> Result<()> {
            self.own(&[x])?;
            if kind.requires_float() && !x.dtype().is_float() {
                return Err(Error::InvalidDType(format!(
                    "{} requires a float dtype, got {}",
                    kind.name(),
                    x.dtype()
                )));
            }
            if x.dtype() == DType::Bool {
                return Err(Error::InvalidDType(format!("{} of bool", kind.name())));
            }
            Ok(())
        })?;
        self.kernel1(Op::Unary(kind), &[x])
    }

    pub fn sin(self, x: &Tensor) -> Result<Tensor> {
        self.unary(x, UnaryKind::Sin)
    }

    pub fn cos(self, x: &Tensor) -> Result<Tensor> {
        self.unary(x, UnaryKind::Cos)
    }

    pub fn tanh(self, x: &Tensor) -> Result<Tensor> {
        self.unary(x, UnaryKind::Tanh)
    }

    pub fn neg(self, x: &Tensor) -> Result<Tensor> {
        self.unary(x, UnaryKind::Neg)
    }

    pub fn abs(self, x: &Tensor) -> Result<Tensor> {
        self.unary(x, UnaryKind::Abs)
    }

    pub fn sqrt(self, x: &Tensor) -> Result<Tensor> {
        self.unary(x, UnaryKind::Sqrt)
    }

    pub fn exp(self, x: &Tensor) -> Result<Tensor> {
        self.unary(x, UnaryKind::Exp)
    }

    pub fn log(self, x: &Tensor) -> Result<Tensor> {
        self.unary(x, UnaryKind::Log)
    }

    pub fn floor(self, x: &Tensor) -> Result<Tensor> {
        self.unary(x, UnaryKind::Floor)
    }

    pub fn ceil(self, x: &Tensor) -> Result<Tensor> {
        self.unary(x, UnaryKind::Ceil)
    }

    /// Rounds half to even.
    pub fn round(self, x: &Tensor) -> Result<Tensor> {
        self.unary(x, UnaryKind::Round)
    }

    fn binary(self, a: Operand<'_>, b: Operand<'_>, kind: BinaryKind) -> Result<Tensor> {
        let (op, inputs) = probe::eager(|| -> Result<(Op, Vec<&Tensor>)> {
            let check = |t: &Tensor| -> Result<()> {
                self.own(&[t])?;
                if t.dtype() == DType::Bool {
                    return Err(Error::InvalidDType(format!("{} of bool", kind.name())));
                }
                Ok(())
            };
            match (a, b) {
                (Operand::Tensor(x), Operand::Tensor(y)) => {
                    check(x)?;
                    check(y)?;
                    if x.dtype() != y.dtype() {
                        return invalid(format!(
                            "{} of mixed dtypes {} and {}; cast explicitly",
                            kind.name(),
                            x.dtype(),
                            y.dtype()
                        ));
                    }
                    let out_shape = broadcast_shapes(x.shape(), y.shape())?;
                    Ok((Op::Binary { kind, out_shape }, vec![x, y]))
                }
                (Operand::Tensor(x), Operand::Scalar(value)) => {
                    check(x)?;
                    let op = Op::BinaryScalar {
                        kind,
                        value,
                        scalar_rhs: true,
                    };
                    Ok((op, vec![x]))
                }
                (Operand::Scalar(value), Operand::Tensor(y)) => {
                    check(y)?;
                    let op = Op::BinaryScalar {
                        kind,
                        value,
                        scalar_rhs: false,
                    };
                    Ok((op, vec![y]))
                }
                (Operand::Scalar(_), Operand::Scalar(_)) => {
                    invalid(format!("{} needs at least one tensor operand", kind.name()))
                }
            }
        })?;
        self.kernel1(op, &inputs)
    }

    pub fn add<'a>(self, a: impl Into<Operand<'a>>, b: impl Into<Operand<'a>>) -> Result<Tensor> {
        self.binary(a.into(), b.into(), BinaryKind::Add)
    }

    pub fn sub<'a>(self, a: impl Into<Operand<'a>>, b: impl Into<Operand<'a>>) -> Result<Tensor> {
        self.binary(a.into(), b.into(), BinaryKind::Sub)
    }

    pub fn mul<'a>(self, a: impl Into<Operand<'a>>, b: impl Into<Operand<'a>>) -> Result<Tensor> {
        self.binary(a.into(), b.into(), BinaryKind::Mul)
    }

    /// Division; integer dtypes truncate toward zero.
    pub fn div<'a>(self, a: impl Into<Operand<'a>>, b: impl Into<Operand<'a>>) -> Result<Tensor> {
        self.binary(a.into(), b.into(), BinaryKind::Div)
    }

    pub fn pow<'a>(self, a: impl Into<Operand<'a>>, b: impl Into<Operand<'a>>) -> Result<Tensor> {
        self.binary(a.into(), b.into(), BinaryKind::Pow)
    }

    /// Element-wise maximum; ties resolve to the first operand.
    pub fn maximum<'a>(self, a: impl Into<Operand<'a>>, b: impl Into<Operand<'a>>) -> Result<Tensor> {
        self.binary(a.into(), b.into(), BinaryKind::Maximum)
    }

    /// Element-wise minimum; ties resolve to the first operand.
    pub fn minimum<'a>(self, a: impl Into<Operand<'a>>, b: impl Into<Operand<'a>>) -> Result<Tensor> {
        self.binary(a.into(), b.into(), BinaryKind::Minimum)
    }

    fn compare(self, a: Operand<'_>, b: Operand<'_>, kind: CompareKind) -> Result<Tensor> {
        let (a, b) = probe::eager(|| -> Result<(Tensor, Tensor)> {
            let (x, y) = match (a, b) {
                (Operand::Tensor(x), Operand::Tensor(y)) => (x.clone(), y.clone()),
                (Operand::Tensor(x), Operand::Scalar(v)) => {
                    (x.clone(), self.constant(HostArray::scalar(v, x.dtype())))
                }
                (Operand::Scalar(v), Operand::Tensor(y)) => {
                    (self.constant(HostArray::scalar(v, y.dtype())), y.clone())
                }
                (Operand::Scalar(_), Operand::Scalar(_)) => {
                    return invalid(format!("{} needs at least one tensor operand", kind.name()))
                }
            };
            self.own(&[&x, &y])?;
            if x.dtype() != y.dtype() {
                return invalid(format!("{} of mixed dtypes", kind.name()));
            }
            Ok((x, y))
        })?;
        let out_shape = probe::eager(|| broadcast_shapes(a.shape(), b.shape()))?;
        self.kernel1(Op::Compare { kind, out_shape }, &[&a, &b])
    }

    pub fn less<'a>(self, a: impl Into<Operand<'a>>, b: impl Into<Operand<'a>>) -> Result<Tensor> {
        self.compare(a.into(), b.into(), CompareKind::Less)
    }

    pub fn greater<'a>(self, a: impl Into<Operand<'a>>, b: impl Into<Operand<'a>>) -> Result<Tensor> {
        self.compare(a.into(), b.into(), CompareKind::Greater)
    }

    pub fn equal<'a>(self, a: impl Into<Operand<'a>>, b: impl Into<Operand<'a>>) -> Result<Tensor> {
        self.compare(a.into(), b.into(), CompareKind::Equal)
    }

    /// Picks `x` where `cond` holds, else `y`, with broadcasting.
    pub fn select<'a>(
        self,
        cond: &Tensor,
        x: impl Into<Operand<'a>>,
        y: impl Into<Operand<'a>>,
    ) -> Result<Tensor> {
        let (x, y) = (x.into(), y.into());
        let (x, y, out_shape) = probe::eager(|| -> Result<(Tensor, Tensor, Shape)> {
            self.own(&[cond])?;
            if cond.dtype() != DType::Bool {
                return Err(Error::InvalidDType(format!("select condition must be bool, got {}", cond.dtype())));
            }
            let (x, y) = match (x, y) {
                (Operand::Tensor(a), Operand::Tensor(b)) => (a.clone(), b.clone()),
                (Operand::Tensor(a), Operand::Scalar(v)) => {
                    (a.clone(), self.constant(HostArray::scalar(v, a.dtype())))
                }
                (Operand::Scalar(v), Operand::Tensor(b)) => {
                    (self.constant(HostArray::scalar(v, b.dtype())), b.clone())
                }
                (Operand::Scalar(a), Operand::Scalar(b)) => (
                    self.constant(HostArray::scalar(a, DType::Float64)),
                    self.constant(HostArray::scalar(b, DType::Float64)),
                ),
            };
            self.own(&[&x, &y])?;
            if x.dtype() != y.dtype() {
                return invalid("select branches differ in dtype");
            }
            let out_shape = broadcast_shapes(&broadcast_shapes(cond.shape(), x.shape())?, y.shape())?;
            Ok((x, y, out_shape))
        })?;
        self.kernel1(Op::Where { out_shape }, &[cond, &x, &y])
    }

    /// `min(max(x, lo), hi)` element-wise.
    pub fn clip(self, x: &Tensor, lo: f64, hi: f64) -> Result<Tensor> {
        probe::eager(|| -> Result<()> {
            self.own(&[x])?;
            if lo > hi || lo.is_nan() || hi.is_nan() {
                return invalid(format!("clip bounds [{lo}, {hi}] are empty"));
            }
            Ok(())
        })?;
        self.kernel1(Op::Clip { lo, hi }, &[x])
    }

    // reductions

    fn reduce(self, x: &Tensor, kind: ReduceKind, axis: Option<isize>, keepdims: bool) -> Result<Tensor> {
        let op = probe::eager(|| -> Result<Op> {
            self.own(&[x])?;
            if x.dtype() == DType::Bool {
                return Err(Error::InvalidDType(format!("{} of bool", kind.name())));
            }
            let axes = match axis {
                None => (0..x.rank()).collect(),
                Some(a) => vec![normalize_axis(a, x.rank())?],
            };
            Ok(Op::Reduce { kind, axes, keepdims })
        })?;
        self.kernel1(op, &[x])
    }

    pub fn reduce_sum(self, x: &Tensor, axis: Option<isize>, keepdims: bool) -> Result<Tensor> {
        self.reduce(x, ReduceKind::Sum, axis, keepdims)
    }

    pub fn reduce_mean(self, x: &Tensor, axis: Option<isize>, keepdims: bool) -> Result<Tensor> {
        self.reduce(x, ReduceKind::Mean, axis, keepdims)
    }

    pub fn reduce_min(self, x: &Tensor, axis: Option<isize>, keepdims: bool) -> Result<Tensor> {
        self.reduce(x, ReduceKind::Min, axis, keepdims)
    }

    pub fn reduce_max(self, x: &Tensor, axis: Option<isize>, keepdims: bool) -> Result<Tensor> {
        self.reduce(x, ReduceKind::Max, axis, keepdims)
    }

    // indexing

    /// Slices `params` at each index tuple in the last axis of `indices`.
    /// An empty `indices` of shape `(0,)` yields shape `(0,) + params.shape[1..]`.
    pub fn gather_nd(self, params: &Tensor, indices: &Tensor) -> Result<Tensor> {
        let reshape = probe::eager(|| -> Result<Option<Op>> {
            self.own(&[params, indices])?;
            check_indices(indices)?;
            if indices.shape().dims() == [0] {
                return Ok(Some(Op::Reshape {
                    shape: Shape::from([0, 1]),
                }));
            }
            let k = indices.shape().dims().last().copied().unwrap_or(0);
            if k > params.rank() {
                return invalid(format!("index depth {k} exceeds params rank {}", params.rank()));
            }
            Ok(None)
        })?;
        let reshaped;
        let indices = match reshape {
            Some(op) => {
                reshaped = self.compilable1(op, &[indices])?;
                &reshaped
            }
            None => indices,
        };
        self.kernel1(Op::GatherNd, &[params, indices])
    }

    /// Accumulates `updates` into a zero tensor of `out_shape`.
    pub fn scatter_nd(
        self,
        indices: &Tensor,
        updates: &Tensor,
        out_shape: &[usize],
        reduction: Reduction,
    ) -> Result<Tensor> {
        let op = probe::eager(|| -> Result<Op> {
            self.own(&[indices, updates])?;
            check_indices(indices)?;
            let Reduction::Sum = reduction;
            let out_shape = Shape::from(out_shape);
            let k = indices.shape().dims().last().copied().unwrap_or(0);
            if k > out_shape.rank() {
                return invalid(format!("index depth {k} exceeds output rank {}", out_shape.rank()));
            }
            let mut expected = indices.shape()[..indices.rank() - 1].to_vec();
            expected.extend_from_slice(&out_shape[k..]);
            if updates.shape().dims() != expected.as_slice() {
                return invalid(format!(
                    "scatter_nd updates shape {} does not match {}",
                    updates.shape(),
                    Shape::new(expected)
                ));
            }
            Ok(Op::ScatterNd { out_shape })
        })?;
        self.kernel1(op, &[indices, updates])
    }

    // linear algebra

    /// Matrix product over the trailing two axes with broadcast batch axes.
    /// Rank-1 operands are promoted to a row or column and the unit axis is
    /// dropped from the result.
    pub fn matmul(self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        let (pre_a, pre_b, post) = probe::eager(|| -> Result<(Option<Op>, Option<Op>, Option<Op>)> {
            self.own(&[a, b])?;
            if a.dtype() != b.dtype() {
                return invalid("matmul of mixed dtypes");
            }
            if !a.dtype().is_float() {
                return Err(Error::InvalidDType(format!("matmul requires a float dtype, got {}", a.dtype())));
            }
            if a.rank() == 0 || b.rank() == 0 {
                return invalid("matmul of a scalar");
            }
            let da = if a.rank() == 1 { vec![1, a.shape()[0]] } else { a.shape().dims().to_vec() };
            let db = if b.rank() == 1 { vec![b.shape()[0], 1] } else { b.shape().dims().to_vec() };
            let (ra, rb) = (da.len(), db.len());
            if da[ra - 1] != db[rb - 2] {
                return invalid(format!(
                    "matmul inner dimensions differ: {} vs {}",
                    a.shape(),
                    b.shape()
                ));
            }
            let batch = broadcast_shapes(&Shape::from(&da[..ra - 2]), &Shape::from(&db[..rb - 2]))?;
            let mut out = batch.dims().to_vec();
            if a.rank() > 1 {
                out.push(da[ra - 2]);
            }
            if b.rank() > 1 {
                out.push(db[rb - 1]);
            }
            let pre_a = (a.rank() == 1).then(|| Op::Reshape { shape: Shape::new(da) });
            let pre_b = (b.rank() == 1).then(|| Op::Reshape { shape: Shape::new(db) });
            let post = (a.rank() == 1 || b.rank() == 1).then(|| Op::Reshape { shape: Shape::new(out) });
            Ok((pre_a, pre_b, post))
        })?;
        let (ea, eb);
        let a = match pre_a {
            Some(op) => {
                ea = self.compilable1(op, &[a])?;
                &ea
            }
            None => a,
        };
        let b = match pre_b {
            Some(op) => {
                eb = self.compilable1(op, &[b])?;
                &eb
            }
            None => b,
        };
        let y = self.kernel1(Op::MatMul, &[a, b])?;
        match post {
            Some(op) => self.compilable1(op, &[&y]),
            None => Ok(y),
        }
    }

    /// `matmul(x, transpose(w)) + b` with `w` of shape `(out, in)`.
    pub fn linear(self, x: &Tensor, w: &Tensor, b: Option<&Tensor>) -> Result<Tensor> {
        let perm = probe::eager(|| -> Result<Vec<usize>> {
            self.own(&[x, w])?;
            if w.rank() < 2 {
                return invalid(format!("linear weight must have rank >= 2, got {}", w.shape()));
            }
            let r = w.rank();
            let mut perm: Vec<usize> = (0..r).collect();
            perm.swap(r - 2, r - 1);
            Ok(perm)
        })?;
        let wt = self.compilable1(Op::Transpose { perm }, &[w])?;
        let y = self.matmul(x, &wt)?;
        match b {
            Some(b) => self.add(&y, b),
            None => Ok(y),
        }
    }

    fn check_square(self, x: &Tensor, what: &str) -> Result<()> {
        self.own(&[x])?;
        if !x.dtype().is_float() {
            return Err(Error::InvalidDType(format!("{what} requires a float dtype, got {}", x.dtype())));
        }
        if x.rank() < 2 {
            return invalid(format!("{what} needs rank >= 2, got {}", x.shape()));
        }
        Ok(())
    }

    /// Batched matrix inverse; singular input is a numeric error.
    pub fn inv(self, x: &Tensor) -> Result<Tensor> {
        probe::eager(|| -> Result<()> {
            self.check_square(x, "inv")?;
            let r = x.rank();
            if x.shape()[r - 1] != x.shape()[r - 2] {
                return invalid(format!("inv of non-square {}", x.shape()));
            }
            Ok(())
        })?;
        self.kernel1(Op::Inv, &[x])
    }

    /// Thin SVD returning `(U, D, VT)`, singular values descending.
    pub fn svd(self, x: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
        probe::eager(|| self.check_square(x, "svd"))?;
        let mut out = self.kernel(Op::Svd, &[x])?;
        let v = out.pop().expect("svd yields three outputs");
        let d = out.pop().expect("svd yields three outputs");
        let u = out.pop().expect("svd yields three outputs");
        let r = v.rank();
        let mut perm: Vec<usize> = (0..r).collect();
        perm.swap(r - 2, r - 1);
        let vt = self.compilable1(Op::Transpose { perm }, &[&v])?;
        Ok((u, d, vt))
    }

    // host interop and training

    /// Nested host values mirroring the shape.
    pub fn to_host(self, x: &Tensor) -> Result<HostValue> {
        x.to_host()
    }

    /// Wraps a tensor as a trainable leaf.
    pub fn variable(self, x: &Tensor) -> Result<Variable> {
        self.inner().variable(x)
    }

    pub fn supports_gradients(self) -> bool {
        self.inner().supports_gradients()
    }

    /// Runs `f` on the variables' values and returns the loss, one gradient
    /// per variable and any auxiliary outputs.
    pub fn execute_with_gradients<F, L>(self, mut f: F, vars: &[Variable]) -> Result<Gradients>
    where
        F: FnMut(&[Tensor]) -> Result<L>,
        L: Into<LossOutput>,
    {
        let mut wrapped = |xs: &[Tensor]| f(xs).map(Into::into);
        self.inner().gradients(&mut wrapped, vars)
    }

    /// `value - lr * grad` for each variable, as new variables with the
    /// same ids.
    pub fn gradient_descent_update(self, vars: &[Variable], grads: &[Tensor], lr: f64) -> Result<Vec<Variable>> {
        probe::eager(|| -> Result<()> {
            if vars.len() != grads.len() {
                return invalid(format!("{} variables but {} gradients", vars.len(), grads.len()));
            }
            if !lr.is_finite() || lr < 0.0 {
                return invalid(format!("learning rate must be finite and non-negative, got {lr}"));
            }
            for (v, g) in vars.iter().zip(grads) {
                if v.value().shape() != g.shape() {
                    return invalid(format!(
                        "gradient shape {} does not match variable shape {}",
                        g.shape(),
                        v.value().shape()
                    ));
                }
            }
            Ok(())
        })?;
        vars.iter()
            .zip(grads)
            .map(|(v, g)| {
                let g = self.cast(g, v.value().dtype().name())?;
                let step = self.mul(&g, lr)?;
                Ok(v.with_value(self.sub(v.value(), &step)?))
            })
            .collect()
    }
}

fn check_indices(indices: &Tensor) -> Result<()> {
    if !indices.dtype().is_int() {
        return Err(Error::InvalidDType(format!("indices must be integer, got {}", indices.dtype())));
    }
    if indices.rank() == 0 {
        return invalid("indices must have rank >= 1");
    }
    Ok(())
}
