//! Backend-agnostic entry points. Each resolves a backend through the
//! handler and delegates to it unchanged.

use crate::array::HostValue;
use crate::backend::{BackendRef, Gradients, LossOutput, Operand, Reduction, Variable};
use crate::dtype::DType;
use crate::error::Result;
use crate::handler::get_framework;
use crate::tensor::Tensor;

fn operand_tensors<'a>(ops: &[Operand<'a>]) -> Vec<&'a Tensor> {
    ops.iter()
        .filter_map(|o| match o {
            Operand::Tensor(t) => Some(*t),
            Operand::Scalar(_) => None,
        })
        .collect()
}

pub fn zeros(shape: &[usize], dtype: DType, f: Option<BackendRef>) -> Result<Tensor> {
    get_framework(&[], f)?.zeros(shape, dtype)
}

pub fn ones(shape: &[usize], dtype: DType, f: Option<BackendRef>) -> Result<Tensor> {
    get_framework(&[], f)?.ones(shape, dtype)
}

pub fn full(shape: &[usize], value: f64, dtype: DType, f: Option<BackendRef>) -> Result<Tensor> {
    get_framework(&[], f)?.full(shape, value, dtype)
}

pub fn array(values: impl Into<HostValue>, dtype: DType, f: Option<BackendRef>) -> Result<Tensor> {
    get_framework(&[], f)?.array(values, dtype)
}

pub fn linspace<'a>(
    start: impl Into<Operand<'a>>,
    stop: impl Into<Operand<'a>>,
    num: usize,
    f: Option<BackendRef>,
) -> Result<Tensor> {
    let (a, b) = (start.into(), stop.into());
    get_framework(&operand_tensors(&[a, b]), f)?.linspace(a, b, num)
}

pub fn random_uniform(low: f64, high: f64, shape: &[usize], seed: u64, f: Option<BackendRef>) -> Result<Tensor> {
    get_framework(&[], f)?.random_uniform(low, high, shape, seed)
}

pub fn cast(x: &Tensor, dtype: &str, f: Option<BackendRef>) -> Result<Tensor> {
    get_framework(&[x], f)?.cast(x, dtype)
}

pub fn reshape(x: &Tensor, shape: &[isize], f: Option<BackendRef>) -> Result<Tensor> {
    get_framework(&[x], f)?.reshape(x, shape)
}

pub fn transpose(x: &Tensor, axes: Option<&[isize]>, f: Option<BackendRef>) -> Result<Tensor> {
    get_framework(&[x], f)?.transpose(x, axes)
}

pub fn expand_dims(x: &Tensor, axis: isize, f: Option<BackendRef>) -> Result<Tensor> {
    get_framework(&[x], f)?.expand_dims(x, axis)
}

pub fn concatenate(xs: &[&Tensor], axis: isize, f: Option<BackendRef>) -> Result<Tensor> {
    get_framework(xs, f)?.concatenate(xs, axis)
}

pub fn stack(xs: &[&Tensor], axis: isize, f: Option<BackendRef>) -> Result<Tensor> {
    get_framework(xs, f)?.stack(xs, axis)
}

pub fn tile(x: &Tensor, reps: &[usize], f: Option<BackendRef>) -> Result<Tensor> {
    get_framework(&[x], f)?.tile(x, reps)
}

pub fn slice(x: &Tensor, axis: isize, start: usize, end: usize, f: Option<BackendRef>) -> Result<Tensor> {
    get_framework(&[x], f)?.slice(x, axis, start, end)
}

macro_rules! unary_wrappers {
    ($($name:ident),*) => {$(
        pub fn $name(x: &Tensor, f: Option<BackendRef>) -> Result<Tensor> {
            get_framework(&[x], f)?.$name(x)
        }
    )*};
}

unary_wrappers!(sin, cos, tanh, neg, abs, sqrt, exp, log, floor, ceil, round);

macro_rules! binary_wrappers {
    ($($name:ident),*) => {$(
        pub fn $name<'a>(
            a: impl Into<Operand<'a>>,
            b: impl Into<Operand<'a>>,
            f: Option<BackendRef>,
        ) -> Result<Tensor> {
            let (a, b) = (a.into(), b.into());
            get_framework(&operand_tensors(&[a, b]), f)?.$name(a, b)
        }
    )*};
}

binary_wrappers!(add, sub, mul, div, pow, maximum, minimum, less, greater, equal);

pub fn select<'a>(
    cond: &Tensor,
    x: impl Into<Operand<'a>>,
    y: impl Into<Operand<'a>>,
    f: Option<BackendRef>,
) -> Result<Tensor> {
    let (x, y) = (x.into(), y.into());
    let mut args = vec![cond];
    args.extend(operand_tensors(&[x, y]));
    get_framework(&args, f)?.select(cond, x, y)
}

pub fn clip(x: &Tensor, lo: f64, hi: f64, f: Option<BackendRef>) -> Result<Tensor> {
    get_framework(&[x], f)?.clip(x, lo, hi)
}

macro_rules! reduce_wrappers {
    ($($name:ident),*) => {$(
        pub fn $name(x: &Tensor, axis: Option<isize>, keepdims: bool, f: Option<BackendRef>) -> Result<Tensor> {
            get_framework(&[x], f)?.$name(x, axis, keepdims)
        }
    )*};
}

reduce_wrappers!(reduce_sum, reduce_mean, reduce_min, reduce_max);

pub fn gather_nd(params: &Tensor, indices: &Tensor, f: Option<BackendRef>) -> Result<Tensor> {
    get_framework(&[params, indices], f)?.gather_nd(params, indices)
}

pub fn scatter_nd(
    indices: &Tensor,
    updates: &Tensor,
    out_shape: &[usize],
    reduction: Reduction,
    f: Option<BackendRef>,
) -> Result<Tensor> {
    get_framework(&[indices, updates], f)?.scatter_nd(indices, updates, out_shape, reduction)
}

pub fn matmul(a: &Tensor, b: &Tensor, f: Option<BackendRef>) -> Result<Tensor> {
    get_framework(&[a, b], f)?.matmul(a, b)
}

pub fn linear(x: &Tensor, w: &Tensor, b: Option<&Tensor>, f: Option<BackendRef>) -> Result<Tensor> {
    get_framework(&[x, w], f)?.linear(x, w, b)
}

pub fn inv(x: &Tensor, f: Option<BackendRef>) -> Result<Tensor> {
    get_framework(&[x], f)?.inv(x)
}

pub fn svd(x: &Tensor, f: Option<BackendRef>) -> Result<(Tensor, Tensor, Tensor)> {
    get_framework(&[x], f)?.svd(x)
}

pub fn to_host(x: &Tensor, f: Option<BackendRef>) -> Result<HostValue> {
    get_framework(&[x], f)?.to_host(x)
}

pub fn variable(x: &Tensor, f: Option<BackendRef>) -> Result<Variable> {
    get_framework(&[x], f)?.variable(x)
}

pub fn execute_with_gradients<F, L>(func: F, vars: &[Variable], f: Option<BackendRef>) -> Result<Gradients>
where
    F: FnMut(&[Tensor]) -> Result<L>,
    L: Into<LossOutput>,
{
    let args: Vec<&Tensor> = vars.iter().map(Variable::value).collect();
    get_framework(&args, f)?.execute_with_gradients(func, vars)
}

pub fn gradient_descent_update(
    vars: &[Variable],
    grads: &[Tensor],
    lr: f64,
    f: Option<BackendRef>,
) -> Result<Vec<Variable>> {
    let args: Vec<&Tensor> = vars.iter().map(Variable::value).collect();
    get_framework(&args, f)?.gradient_descent_update(vars, grads, lr)
}
