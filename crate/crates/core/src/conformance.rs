//! Randomized conformance suites for backends.
//!
//! [`parity_suite`] runs every core op on randomized inputs through two
//! backends and compares the results element-wise. [`gradient_suite`] checks
//! the reverse-mode gradient of every differentiable op against central
//! finite differences. Inputs for non-smooth ops are drawn away from their
//! kinks (ties, clip bounds, integers, zero).

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::array::HostArray;
use crate::backend::{BackendRef, Reduction};
use crate::dtype::DType;
use crate::error::Result;
use crate::gradcheck;
use crate::tensor::Tensor;

type Run = Arc<dyn Fn(BackendRef, &[Tensor]) -> Result<Vec<Tensor>> + Send + Sync>;

/// One randomized invocation: host inputs plus the call under test.
pub struct Case {
    pub inputs: Vec<HostArray>,
    pub run: Run,
}

/// Aggregate result of one op over all its cases.
#[derive(Debug, Clone, PartialEq)]
pub struct OpReport {
    pub op: &'static str,
    pub cases: usize,
    /// Worst element-wise difference (parity) or relative error (gradients).
    pub max_err: f64,
    /// Cases where both sides returned the same error kind.
    pub both_failed: usize,
    pub failures: Vec<String>,
}

impl OpReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.failures.is_empty() && self.both_failed == 0 && self.max_err <= tol
    }
}

type Gen = fn(&mut ChaCha8Rng) -> Case;

fn case<F>(inputs: Vec<HostArray>, run: F) -> Case
where
    F: Fn(BackendRef, &[Tensor]) -> Result<Vec<Tensor>> + Send + Sync + 'static,
{
    Case {
        inputs,
        run: Arc::new(run),
    }
}

fn rand_shape(rng: &mut ChaCha8Rng, min_rank: usize, max_rank: usize) -> Vec<usize> {
    let rank = rng.random_range(min_rank..=max_rank);
    (0..rank).map(|_| rng.random_range(1..=4)).collect()
}

fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> HostArray {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    HostArray::new(data, shape.to_vec(), DType::Float64).expect("length matches shape")
}

/// Magnitudes in `[lo, hi)` with random sign.
fn signed(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> HostArray {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let v = rng.random_range(lo..hi);
            if rng.random_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect();
    HostArray::new(data, shape.to_vec(), DType::Float64).expect("length matches shape")
}

/// Pairwise distinct values at least 0.02 apart.
fn distinct(rng: &mut ChaCha8Rng, shape: &[usize]) -> HostArray {
    let n: usize = shape.iter().product();
    let mut ranks: Vec<usize> = (0..n).collect();
    ranks.shuffle(rng);
    let data = ranks
        .into_iter()
        .map(|r| (r as f64 + rng.random_range(0.2..0.8)) * 0.1 - 0.5)
        .collect();
    HostArray::new(data, shape.to_vec(), DType::Float64).expect("length matches shape")
}

/// Values at least 0.1 away from any integer.
fn off_integer(rng: &mut ChaCha8Rng, shape: &[usize]) -> HostArray {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| rng.random_range(-3i32..3) as f64 + rng.random_range(0.1..0.4) + if rng.random_bool(0.5) { 0.5 } else { 0.0 })
        .collect();
    HostArray::new(data, shape.to_vec(), DType::Float64).expect("length matches shape")
}

fn ints(rng: &mut ChaCha8Rng, shape: &[usize], hi: usize) -> HostArray {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(0..hi) as f64).collect();
    HostArray::new(data, shape.to_vec(), DType::Int64).expect("length matches shape")
}

/// A shape broadcast-compatible with `a`: a suffix of it with some extents
/// replaced by 1.
fn broadcast_partner(rng: &mut ChaCha8Rng, a: &[usize]) -> Vec<usize> {
    let keep = rng.random_range(0..=a.len());
    a[a.len() - keep..]
        .iter()
        .map(|&d| if rng.random_bool(0.3) { 1 } else { d })
        .collect()
}

fn random_axis(rng: &mut ChaCha8Rng, rank: usize) -> isize {
    let a = rng.random_range(0..rank) as isize;
    if rng.random_bool(0.5) {
        a - rank as isize
    } else {
        a
    }
}

fn unary_case(rng: &mut ChaCha8Rng, lo: f64, hi: f64, op: fn(BackendRef, &Tensor) -> Result<Tensor>) -> Case {
    let s = rand_shape(rng, 0, 3);
    case(vec![uniform(rng, &s, lo, hi)], move |f, x| Ok(vec![op(f, &x[0])?]))
}

fn binary_case(
    _rng: &mut ChaCha8Rng,
    a: HostArray,
    b: HostArray,
    op: fn(BackendRef, &Tensor, &Tensor) -> Result<Tensor>,
) -> Case {
    case(vec![a, b], move |f, x| Ok(vec![op(f, &x[0], &x[1])?]))
}

fn binary_inputs(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> (HostArray, HostArray) {
    let sa = rand_shape(rng, 0, 3);
    let sb = broadcast_partner(rng, &sa);
    let (a, b) = (uniform(rng, &sa, lo, hi), uniform(rng, &sb, lo, hi));
    if rng.random_bool(0.5) {
        (a, b)
    } else {
        (b, a)
    }
}

fn reduce_case(rng: &mut ChaCha8Rng, kind: usize) -> Case {
    let s = rand_shape(rng, 1, 3);
    let axis = rng.random_bool(0.7).then(|| random_axis(rng, s.len()));
    let keepdims = rng.random_bool(0.5);
    case(vec![distinct(rng, &s)], move |f, x| {
        let x = &x[0];
        Ok(vec![match kind {
            0 => f.reduce_sum(x, axis, keepdims)?,
            1 => f.reduce_mean(x, axis, keepdims)?,
            2 => f.reduce_min(x, axis, keepdims)?,
            _ => f.reduce_max(x, axis, keepdims)?,
        }])
    })
}

fn matmul_inputs(rng: &mut ChaCha8Rng) -> (HostArray, HostArray) {
    let (m, k, n) = (rng.random_range(1..=4), rng.random_range(1..=4), rng.random_range(1..=4));
    let batch = rand_shape(rng, 0, 2);
    let bb = broadcast_partner(rng, &batch);
    let mut sa = batch.clone();
    sa.extend([m, k]);
    let mut sb = bb;
    sb.extend([k, n]);
    (uniform(rng, &sa, -1.0, 1.0), uniform(rng, &sb, -1.0, 1.0))
}

/// Ops covered by [`parity_suite`] with their case generators.
fn parity_ops() -> Vec<(&'static str, Gen)> {
    vec![
        ("zeros", |rng| {
            let s = rand_shape(rng, 0, 3);
            case(vec![], move |f, _| Ok(vec![f.zeros(&s, DType::Float64)?]))
        }),
        ("ones", |rng| {
            let s = rand_shape(rng, 0, 3);
            case(vec![], move |f, _| Ok(vec![f.ones(&s, DType::Int32)?]))
        }),
        ("full", |rng| {
            let s = rand_shape(rng, 0, 3);
            let v = rng.random_range(-5.0..5.0);
            case(vec![], move |f, _| Ok(vec![f.full(&s, v, DType::Float64)?]))
        }),
        ("array", |rng| {
            let s = rand_shape(rng, 0, 3);
            let host = uniform(rng, &s, -5.0, 5.0).to_host();
            case(vec![], move |f, _| Ok(vec![f.array(host.clone(), DType::Float64)?]))
        }),
        ("linspace", |rng| {
            let s = rand_shape(rng, 0, 2);
            let num = rng.random_range(2..=6);
            case(vec![uniform(rng, &s, -2.0, 2.0), uniform(rng, &s, -2.0, 2.0)], move |f, x| {
                Ok(vec![f.linspace(&x[0], &x[1], num)?])
            })
        }),
        ("random_uniform", |rng| {
            let s = rand_shape(rng, 0, 3);
            let seed = rng.random();
            case(vec![], move |f, _| Ok(vec![f.random_uniform(-1.0, 2.0, &s, seed)?]))
        }),
        ("cast", |rng| {
            let s = rand_shape(rng, 0, 3);
            let to = ["float32", "int32", "int64", "bool", "float64"][rng.random_range(0..5)];
            case(vec![uniform(rng, &s, -3.0, 3.0)], move |f, x| Ok(vec![f.cast(&x[0], to)?]))
        }),
        ("reshape", |rng| {
            let s = rand_shape(rng, 0, 3);
            case(vec![uniform(rng, &s, -1.0, 1.0)], |f, x| Ok(vec![f.reshape(&x[0], &[-1, 1])?]))
        }),
        ("transpose", |rng| {
            let s = rand_shape(rng, 0, 3);
            let mut perm: Vec<isize> = (0..s.len() as isize).collect();
            perm.shuffle(rng);
            let given = rng.random_bool(0.5);
            case(vec![uniform(rng, &s, -1.0, 1.0)], move |f, x| {
                Ok(vec![f.transpose(&x[0], given.then_some(perm.as_slice()))?])
            })
        }),
        ("expand_dims", |rng| {
            let s = rand_shape(rng, 0, 3);
            let axis = rng.random_range(0..=s.len()) as isize;
            case(vec![uniform(rng, &s, -1.0, 1.0)], move |f, x| Ok(vec![f.expand_dims(&x[0], axis)?]))
        }),
        ("concatenate", |rng| {
            let s = rand_shape(rng, 1, 3);
            let axis = random_axis(rng, s.len());
            let mut s2 = s.clone();
            let ax = if axis < 0 { (axis + s.len() as isize) as usize } else { axis as usize };
            s2[ax] = rng.random_range(1..=3);
            case(vec![uniform(rng, &s, -1.0, 1.0), uniform(rng, &s2, -1.0, 1.0)], move |f, x| {
                Ok(vec![f.concatenate(&[&x[0], &x[1]], axis)?])
            })
        }),
        ("stack", |rng| {
            let s = rand_shape(rng, 0, 2);
            let axis = rng.random_range(0..=s.len()) as isize;
            case(vec![uniform(rng, &s, -1.0, 1.0), uniform(rng, &s, -1.0, 1.0)], move |f, x| {
                Ok(vec![f.stack(&[&x[0], &x[1]], axis)?])
            })
        }),
        ("tile", |rng| {
            let s = rand_shape(rng, 0, 2);
            let reps: Vec<usize> = (0..rng.random_range(0..=3)).map(|_| rng.random_range(1..=3)).collect();
            case(vec![uniform(rng, &s, -1.0, 1.0)], move |f, x| Ok(vec![f.tile(&x[0], &reps)?]))
        }),
        ("slice", |rng| {
            let s = rand_shape(rng, 1, 3);
            let axis = rng.random_range(0..s.len());
            let start = rng.random_range(0..=s[axis]);
            let end = rng.random_range(start..=s[axis]);
            case(vec![uniform(rng, &s, -1.0, 1.0)], move |f, x| {
                Ok(vec![f.slice(&x[0], axis as isize, start, end)?])
            })
        }),
        ("sin", |rng| unary_case(rng, -4.0, 4.0, |f, x| f.sin(x))),
        ("cos", |rng| unary_case(rng, -4.0, 4.0, |f, x| f.cos(x))),
        ("tanh", |rng| unary_case(rng, -3.0, 3.0, |f, x| f.tanh(x))),
        ("neg", |rng| unary_case(rng, -3.0, 3.0, |f, x| f.neg(x))),
        ("abs", |rng| unary_case(rng, -3.0, 3.0, |f, x| f.abs(x))),
        ("sqrt", |rng| unary_case(rng, 0.0, 4.0, |f, x| f.sqrt(x))),
        ("exp", |rng| unary_case(rng, -3.0, 3.0, |f, x| f.exp(x))),
        ("log", |rng| unary_case(rng, 0.01, 4.0, |f, x| f.log(x))),
        ("floor", |rng| unary_case(rng, -3.0, 3.0, |f, x| f.floor(x))),
        ("ceil", |rng| unary_case(rng, -3.0, 3.0, |f, x| f.ceil(x))),
        ("round", |rng| unary_case(rng, -3.0, 3.0, |f, x| f.round(x))),
        ("add", |rng| {
            let (a, b) = binary_inputs(rng, -2.0, 2.0);
            binary_case(rng, a, b, |f, a, b| f.add(a, b))
        }),
        ("sub", |rng| {
            let (a, b) = binary_inputs(rng, -2.0, 2.0);
            binary_case(rng, a, b, |f, a, b| f.sub(a, b))
        }),
        ("mul", |rng| {
            let (a, b) = binary_inputs(rng, -2.0, 2.0);
            binary_case(rng, a, b, |f, a, b| f.mul(a, b))
        }),
        ("div", |rng| {
            let (a, b) = binary_inputs(rng, 0.1, 2.0);
            binary_case(rng, a, b, |f, a, b| f.div(a, b))
        }),
        ("pow", |rng| {
            let (a, b) = binary_inputs(rng, 0.1, 2.0);
            binary_case(rng, a, b, |f, a, b| f.pow(a, b))
        }),
        ("maximum", |rng| {
            let (a, b) = binary_inputs(rng, -2.0, 2.0);
            binary_case(rng, a, b, |f, a, b| f.maximum(a, b))
        }),
        ("minimum", |rng| {
            let (a, b) = binary_inputs(rng, -2.0, 2.0);
            binary_case(rng, a, b, |f, a, b| f.minimum(a, b))
        }),
        ("binary_scalar", |rng| {
            let s = rand_shape(rng, 0, 3);
            let c = rng.random_range(0.5..2.0);
            let lhs = rng.random_bool(0.5);
            case(vec![uniform(rng, &s, 0.1, 2.0)], move |f, x| {
                let x = &x[0];
                Ok(if lhs {
                    vec![f.add(c, x)?, f.sub(c, x)?, f.mul(c, x)?, f.div(c, x)?, f.pow(c, x)?]
                } else {
                    vec![f.add(x, c)?, f.sub(x, c)?, f.mul(x, c)?, f.div(x, c)?, f.pow(x, c)?]
                })
            })
        }),
        ("less", |rng| {
            let (a, b) = binary_inputs(rng, -2.0, 2.0);
            binary_case(rng, a, b, |f, a, b| f.less(a, b))
        }),
        ("greater", |rng| {
            let (a, b) = binary_inputs(rng, -2.0, 2.0);
            binary_case(rng, a, b, |f, a, b| f.greater(a, b))
        }),
        ("equal", |rng| {
            let s = rand_shape(rng, 0, 3);
            case(vec![ints(rng, &s, 3), ints(rng, &s, 3)], |f, x| Ok(vec![f.equal(&x[0], &x[1])?]))
        }),
        ("select", |rng| {
            let (a, b) = binary_inputs(rng, -2.0, 2.0);
            case(vec![a, b], |f, x| {
                let cond = f.greater(&x[0], 0.0)?;
                Ok(vec![f.select(&cond, &x[0], &x[1])?])
            })
        }),
        ("clip", |rng| {
            let s = rand_shape(rng, 0, 3);
            case(vec![uniform(rng, &s, -2.0, 2.0)], |f, x| Ok(vec![f.clip(&x[0], -0.5, 0.7)?]))
        }),
        ("reduce_sum", |rng| reduce_case(rng, 0)),
        ("reduce_mean", |rng| reduce_case(rng, 1)),
        ("reduce_min", |rng| reduce_case(rng, 2)),
        ("reduce_max", |rng| reduce_case(rng, 3)),
        ("gather_nd", |rng| {
            let s = rand_shape(rng, 1, 3);
            let k = rng.random_range(1..=s.len());
            let n = rng.random_range(1..=4);
            let idx: Vec<f64> = (0..n)
                .flat_map(|_| s[..k].iter().map(|&d| rng.random_range(0..d) as f64).collect::<Vec<_>>())
                .collect();
            let idx = HostArray::new(idx, vec![n, k], DType::Int64).expect("index shape");
            case(vec![uniform(rng, &s, -1.0, 1.0), idx], |f, x| Ok(vec![f.gather_nd(&x[0], &x[1])?]))
        }),
        ("scatter_nd", |rng| {
            let out = rand_shape(rng, 1, 3);
            let k = rng.random_range(1..=out.len());
            let n = rng.random_range(1..=5);
            let idx: Vec<f64> = (0..n)
                .flat_map(|_| out[..k].iter().map(|&d| rng.random_range(0..d) as f64).collect::<Vec<_>>())
                .collect();
            let idx = HostArray::new(idx, vec![n, k], DType::Int64).expect("index shape");
            let mut us = vec![n];
            us.extend_from_slice(&out[k..]);
            case(vec![idx, uniform(rng, &us, -1.0, 1.0)], move |f, x| {
                Ok(vec![f.scatter_nd(&x[0], &x[1], &out, Reduction::Sum)?])
            })
        }),
        ("matmul", |rng| {
            let (a, b) = matmul_inputs(rng);
            case(vec![a, b], |f, x| Ok(vec![f.matmul(&x[0], &x[1])?]))
        }),
        ("linear", |rng| {
            let (i, o) = (rng.random_range(1..=4), rng.random_range(1..=4));
            let mut xs = rand_shape(rng, 0, 2);
            xs.push(i);
            case(
                vec![uniform(rng, &xs, -1.0, 1.0), uniform(rng, &[o, i], -1.0, 1.0), uniform(rng, &[o], -1.0, 1.0)],
                |f, x| Ok(vec![f.linear(&x[0], &x[1], Some(&x[2]))?]),
            )
        }),
        ("inv", |rng| {
            let n = rng.random_range(1..=4);
            let mut a = uniform(rng, &[n, n], -1.0, 1.0).into_data();
            for i in 0..n {
                a[i * n + i] += n as f64 + 1.0;
            }
            let a = HostArray::new(a, vec![n, n], DType::Float64).expect("square");
            case(vec![a], |f, x| Ok(vec![f.inv(&x[0])?]))
        }),
        ("svd", |rng| {
            let mut s = rand_shape(rng, 0, 1);
            s.extend([rng.random_range(1..=4), rng.random_range(1..=4)]);
            case(vec![uniform(rng, &s, -1.0, 1.0)], |f, x| {
                let (u, d, vt) = f.svd(&x[0])?;
                Ok(vec![u, d, vt])
            })
        }),
    ]
}

/// Names of the ops exercised by [`parity_suite`].
pub fn parity_op_names() -> Vec<&'static str> {
    parity_ops().into_iter().map(|(n, _)| n).collect()
}

fn materialize(f: BackendRef, inputs: &[HostArray]) -> Result<Vec<Tensor>> {
    inputs
        .iter()
        .map(|a| f.from_vec(a.data().to_vec(), a.shape().dims(), a.dtype()))
        .collect()
}

/// Runs every core op `cases` times on both backends and records the worst
/// element-wise disagreement.
pub fn parity_suite(reference: BackendRef, candidate: BackendRef, cases: usize, seed: u64) -> Vec<OpReport> {
    parity_ops()
        .into_iter()
        .enumerate()
        .map(|(k, (name, gen))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut report = OpReport {
                op: name,
                cases,
                max_err: 0.0,
                both_failed: 0,
                failures: Vec::new(),
            };
            for i in 0..cases {
                let c = gen(&mut rng);
                let run = |f: BackendRef| materialize(f, &c.inputs).and_then(|xs| (c.run)(f, &xs));
                match (run(reference), run(candidate)) {
                    (Ok(a), Ok(b)) => {
                        for (x, y) in a.iter().zip(&b) {
                            if x.shape() != y.shape() || x.dtype() != y.dtype() {
                                report.failures.push(format!("case {i}: {x:?} vs {y:?}"));
                                continue;
                            }
                            let (xv, yv) = (x.to_vec().unwrap_or_default(), y.to_vec().unwrap_or_default());
                            for (p, q) in xv.iter().zip(&yv) {
                                let d = (p - q).abs();
                                if d.is_nan() && !(p.is_nan() && q.is_nan()) {
                                    report.failures.push(format!("case {i}: NaN mismatch"));
                                } else if d > report.max_err {
                                    report.max_err = d;
                                }
                            }
                        }
                    }
                    (Err(e1), Err(e2)) if std::mem::discriminant(&e1) == std::mem::discriminant(&e2) => {
                        report.both_failed += 1
                    }
                    (a, b) => report
                        .failures
                        .push(format!("case {i}: outcomes differ: {:?} vs {:?}", a.err(), b.err())),
                }
            }
            report
        })
        .collect()
}

/// Weighted sum of all outputs with fixed weights, so every output element
/// reaches the loss with a distinct coefficient.
fn weighted_loss(f: BackendRef, outs: Vec<Tensor>, salt: u64) -> Result<Tensor> {
    let mut total: Option<Tensor> = None;
    for (j, y) in outs.iter().enumerate() {
        let w = f.random_uniform(0.5, 1.5, y.shape().dims(), salt.wrapping_add(j as u64))?;
        let s = f.reduce_sum(&f.mul(y, &w)?, None, false)?;
        total = Some(match total {
            None => s,
            Some(t) => f.add(&t, &s)?,
        });
    }
    match total {
        Some(t) => Ok(t),
        None => f.scalar(0.0, DType::Float64),
    }
}

/// Differentiable ops with kink-free case generators. Every input of a case
/// is differentiated unless it is integer-typed; those are passed through
/// as constants.
fn gradient_ops() -> Vec<(&'static str, Gen)> {
    vec![
        ("linspace", |rng| {
            let s = rand_shape(rng, 0, 2);
            let num = rng.random_range(2..=5);
            case(vec![uniform(rng, &s, -2.0, 2.0), uniform(rng, &s, -2.0, 2.0)], move |f, x| {
                Ok(vec![f.linspace(&x[0], &x[1], num)?])
            })
        }),
        ("cast", |rng| {
            let s = rand_shape(rng, 0, 3);
            case(vec![uniform(rng, &s, -2.0, 2.0)], |f, x| {
                let y = f.cast(&f.mul(&x[0], 1.0)?, "float64")?;
                Ok(vec![y])
            })
        }),
        ("reshape", |rng| {
            let s = rand_shape(rng, 0, 3);
            case(vec![uniform(rng, &s, -1.0, 1.0)], |f, x| Ok(vec![f.reshape(&x[0], &[-1])?]))
        }),
        ("transpose", |rng| {
            let s = rand_shape(rng, 1, 3);
            let mut perm: Vec<isize> = (0..s.len() as isize).collect();
            perm.shuffle(rng);
            case(vec![uniform(rng, &s, -1.0, 1.0)], move |f, x| Ok(vec![f.transpose(&x[0], Some(&perm))?]))
        }),
        ("expand_dims", |rng| {
            let s = rand_shape(rng, 0, 3);
            case(vec![uniform(rng, &s, -1.0, 1.0)], |f, x| Ok(vec![f.expand_dims(&x[0], -1)?]))
        }),
        ("concatenate", |rng| {
            let s = rand_shape(rng, 1, 3);
            let mut s2 = s.clone();
            s2[0] = rng.random_range(1..=3);
            case(vec![uniform(rng, &s, -1.0, 1.0), uniform(rng, &s2, -1.0, 1.0)], |f, x| {
                Ok(vec![f.concatenate(&[&x[0], &x[1]], 0)?])
            })
        }),
        ("stack", |rng| {
            let s = rand_shape(rng, 0, 2);
            case(vec![uniform(rng, &s, -1.0, 1.0), uniform(rng, &s, -1.0, 1.0)], |f, x| {
                Ok(vec![f.stack(&[&x[0], &x[1]], -1)?])
            })
        }),
        ("tile", |rng| {
            let s = rand_shape(rng, 0, 2);
            let reps: Vec<usize> = (0..rng.random_range(0..=3)).map(|_| rng.random_range(1..=3)).collect();
            case(vec![uniform(rng, &s, -1.0, 1.0)], move |f, x| Ok(vec![f.tile(&x[0], &reps)?]))
        }),
        ("slice", |rng| {
            let s = rand_shape(rng, 1, 3);
            let axis = rng.random_range(0..s.len());
            let start = rng.random_range(0..s[axis]);
            let end = rng.random_range(start + 1..=s[axis]);
            case(vec![uniform(rng, &s, -1.0, 1.0)], move |f, x| {
                Ok(vec![f.slice(&x[0], axis as isize, start, end)?])
            })
        }),
        ("sin", |rng| unary_case(rng, -3.0, 3.0, |f, x| f.sin(x))),
        ("cos", |rng| unary_case(rng, -3.0, 3.0, |f, x| f.cos(x))),
        ("tanh", |rng| unary_case(rng, -2.0, 2.0, |f, x| f.tanh(x))),
        ("neg", |rng| unary_case(rng, -2.0, 2.0, |f, x| f.neg(x))),
        ("abs", |rng| {
            let s = rand_shape(rng, 0, 3);
            case(vec![signed(rng, &s, 0.1, 2.0)], |f, x| Ok(vec![f.abs(&x[0])?]))
        }),
        ("sqrt", |rng| unary_case(rng, 0.2, 3.0, |f, x| f.sqrt(x))),
        ("exp", |rng| unary_case(rng, -2.0, 2.0, |f, x| f.exp(x))),
        ("log", |rng| unary_case(rng, 0.2, 3.0, |f, x| f.log(x))),
        ("floor", |rng| {
            let s = rand_shape(rng, 0, 3);
            case(vec![off_integer(rng, &s)], |f, x| Ok(vec![f.floor(&x[0])?, f.mul(&x[0], 1.0)?]))
        }),
        ("ceil", |rng| {
            let s = rand_shape(rng, 0, 3);
            case(vec![off_integer(rng, &s)], |f, x| Ok(vec![f.ceil(&x[0])?, f.mul(&x[0], 1.0)?]))
        }),
        ("round", |rng| {
            let s = rand_shape(rng, 0, 3);
            case(vec![off_integer(rng, &s)], |f, x| Ok(vec![f.round(&x[0])?, f.mul(&x[0], 1.0)?]))
        }),
        ("add", |rng| {
            let (a, b) = binary_inputs(rng, -2.0, 2.0);
            binary_case(rng, a, b, |f, a, b| f.add(a, b))
        }),
        ("sub", |rng| {
            let (a, b) = binary_inputs(rng, -2.0, 2.0);
            binary_case(rng, a, b, |f, a, b| f.sub(a, b))
        }),
        ("mul", |rng| {
            let (a, b) = binary_inputs(rng, -2.0, 2.0);
            binary_case(rng, a, b, |f, a, b| f.mul(a, b))
        }),
        ("div", |rng| {
            let (a, b) = binary_inputs(rng, 0.3, 2.0);
            binary_case(rng, a, b, |f, a, b| f.div(a, b))
        }),
        ("pow", |rng| {
            let (a, b) = binary_inputs(rng, 0.3, 2.0);
            binary_case(rng, a, b, |f, a, b| f.pow(a, b))
        }),
        ("maximum", |rng| {
            let s = rand_shape(rng, 0, 3);
            let a = distinct(rng, &s);
            let b = HostArray::new(
                a.data().iter().map(|v| v + if rng.random_bool(0.5) { 0.01 } else { -0.01 }).collect(),
                s.clone(),
                DType::Float64,
            )
            .expect("same shape");
            binary_case(rng, a, b, |f, a, b| f.maximum(a, b))
        }),
        ("minimum", |rng| {
            let s = rand_shape(rng, 0, 3);
            let a = distinct(rng, &s);
            let b = HostArray::new(
                a.data().iter().map(|v| v + if rng.random_bool(0.5) { 0.01 } else { -0.01 }).collect(),
                s.clone(),
                DType::Float64,
            )
            .expect("same shape");
            binary_case(rng, a, b, |f, a, b| f.minimum(a, b))
        }),
        ("binary_scalar", |rng| {
            let s = rand_shape(rng, 0, 3);
            let c = rng.random_range(0.5..2.0);
            let lhs = rng.random_bool(0.5);
            case(vec![uniform(rng, &s, 0.3, 2.0)], move |f, x| {
                let x = &x[0];
                Ok(if lhs {
                    vec![f.add(c, x)?, f.sub(c, x)?, f.mul(c, x)?, f.div(c, x)?, f.pow(c, x)?]
                } else {
                    vec![f.add(x, c)?, f.sub(x, c)?, f.mul(x, c)?, f.div(x, c)?, f.pow(x, c)?]
                })
            })
        }),
        ("select", |rng| {
            let (a, b) = binary_inputs(rng, -2.0, 2.0);
            let flip = rng.random_bool(0.5);
            case(vec![a, b], move |f, x| {
                let cond = if flip { f.greater(&x[0], 0.0)? } else { f.less(&x[0], 0.0)? };
                Ok(vec![f.select(&cond, &x[0], &x[1])?])
            })
        }),
        ("clip", |rng| {
            let s = rand_shape(rng, 0, 3);
            let data = (0..s.iter().product::<usize>())
                .map(|_| {
                    let v = rng.random_range(-1.4..1.4);
                    if (v - 0.7f64).abs() < 0.05 || (v + 0.5f64).abs() < 0.05 {
                        0.0
                    } else {
                        v
                    }
                })
                .collect();
            let x = HostArray::new(data, s, DType::Float64).expect("length matches");
            case(vec![x], |f, x| Ok(vec![f.clip(&x[0], -0.5, 0.7)?]))
        }),
        ("reduce_sum", |rng| reduce_case(rng, 0)),
        ("reduce_mean", |rng| reduce_case(rng, 1)),
        ("reduce_min", |rng| reduce_case(rng, 2)),
        ("reduce_max", |rng| reduce_case(rng, 3)),
        ("gather_nd", |rng| {
            let s = rand_shape(rng, 1, 3);
            let k = rng.random_range(1..=s.len());
            let n = rng.random_range(1..=5);
            let idx: Vec<f64> = (0..n)
                .flat_map(|_| s[..k].iter().map(|&d| rng.random_range(0..d) as f64).collect::<Vec<_>>())
                .collect();
            let idx = HostArray::new(idx, vec![n, k], DType::Int64).expect("index shape");
            case(vec![uniform(rng, &s, -1.0, 1.0), idx], |f, x| Ok(vec![f.gather_nd(&x[0], &x[1])?]))
        }),
        ("scatter_nd", |rng| {
            let out = rand_shape(rng, 1, 3);
            let k = rng.random_range(1..=out.len());
            let n = rng.random_range(1..=5);
            let idx: Vec<f64> = (0..n)
                .flat_map(|_| out[..k].iter().map(|&d| rng.random_range(0..d) as f64).collect::<Vec<_>>())
                .collect();
            let idx = HostArray::new(idx, vec![n, k], DType::Int64).expect("index shape");
            let mut us = vec![n];
            us.extend_from_slice(&out[k..]);
            case(vec![idx, uniform(rng, &us, -1.0, 1.0)], move |f, x| {
                Ok(vec![f.scatter_nd(&x[0], &x[1], &out, Reduction::Sum)?])
            })
        }),
        ("matmul", |rng| {
            let (a, b) = matmul_inputs(rng);
            case(vec![a, b], |f, x| Ok(vec![f.matmul(&x[0], &x[1])?]))
        }),
        ("linear", |rng| {
            let (i, o) = (rng.random_range(1..=4), rng.random_range(1..=4));
            let mut xs = rand_shape(rng, 0, 2);
            xs.push(i);
            case(
                vec![uniform(rng, &xs, -1.0, 1.0), uniform(rng, &[o, i], -1.0, 1.0), uniform(rng, &[o], -1.0, 1.0)],
                |f, x| Ok(vec![f.linear(&x[0], &x[1], Some(&x[2]))?]),
            )
        }),
    ]
}

pub fn gradient_op_names() -> Vec<&'static str> {
    gradient_ops().into_iter().map(|(n, _)| n).collect()
}

/// Central-difference check (step `h`) of every differentiable op over
/// `cases` randomized inputs on backend `f`.
pub fn gradient_suite(f: BackendRef, cases: usize, seed: u64, h: f64) -> Vec<OpReport> {
    gradient_ops()
        .into_iter()
        .enumerate()
        .map(|(k, (name, gen))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03));
            let mut report = OpReport {
                op: name,
                cases,
                max_err: 0.0,
                both_failed: 0,
                failures: Vec::new(),
            };
            for i in 0..cases {
                let c = gen(&mut rng);
                let salt = seed.wrapping_add(i as u64 * 31);
                let outcome = materialize(f, &c.inputs).and_then(|xs| {
                    let diff: Vec<usize> = (0..xs.len()).filter(|&j| xs[j].dtype().is_float()).collect();
                    let fixed = xs.clone();
                    let run = c.run.clone();
                    let dx: Vec<Tensor> = diff.iter().map(|&j| xs[j].clone()).collect();
                    let diff_idx = diff.clone();
                    gradcheck::check(
                        f,
                        move |f, vs| {
                            let mut args = fixed.clone();
                            for (&j, v) in diff_idx.iter().zip(vs) {
                                args[j] = v.clone();
                            }
                            weighted_loss(f, run(f, &args)?, salt)
                        },
                        &dx,
                        h,
                    )
                });
                match outcome {
                    Ok(g) => report.max_err = report.max_err.max(g.max_rel_err),
                    Err(e) => report.failures.push(format!("case {i}: {e}")),
                }
            }
            report
        })
        .collect()
}
