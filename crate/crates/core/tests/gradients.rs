use std::thread;

use templar::backend::{autodiff, host};
use templar::conformance::{gradient_op_names, gradient_suite};
use templar::{DType, Error, Tensor};

#[test]
fn every_differentiable_op_matches_finite_differences() {
    let reports = gradient_suite(autodiff(), 64, 11, 1e-6);
    assert_eq!(reports.len(), gradient_op_names().len());
    for r in &reports {
        assert!(r.cases >= 50);
        assert!(r.passed(1e-4), "{}: {:?} max {}", r.op, r.failures, r.max_err);
    }
}

#[test]
fn squared_distance_example() {
    let f = autodiff();
    let v = f.variable(&f.from_vec(vec![0.0], &[1], DType::Float64).unwrap()).unwrap();
    let g = f
        .execute_with_gradients(|xs| f.reduce_sum(&f.pow(&f.sub(&xs[0], 1.0)?, 2.0)?, None, false), &[v])
        .unwrap();
    assert_eq!(g.loss.item().unwrap(), 1.0);
    assert_eq!(g.grads[0].to_vec().unwrap(), vec![-2.0]);
}

#[test]
fn reduce_min_routes_to_first_tie() {
    let f = autodiff();
    let x = f.from_vec(vec![3.0, 1.0, 1.0, 2.0, 2.0, 5.0], &[2, 3], DType::Float64).unwrap();
    let v = f.variable(&x).unwrap();
    let g = f
        .execute_with_gradients(|xs| f.reduce_sum(&f.reduce_min(&xs[0], Some(-1), false)?, None, false), std::slice::from_ref(&v))
        .unwrap();
    assert_eq!(g.grads[0].to_vec().unwrap(), vec![0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);

    let g = f
        .execute_with_gradients(|xs| f.reduce_max(&xs[0], None, false), &[v])
        .unwrap();
    assert_eq!(g.grads[0].to_vec().unwrap(), vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
}

#[test]
fn maximum_subgradient_goes_to_first_operand_at_equality() {
    let f = autodiff();
    let x = f.variable(&f.from_vec(vec![-1.0, 0.5, 2.0], &[3], DType::Float64).unwrap()).unwrap();
    let g = f
        .execute_with_gradients(|xs| f.reduce_sum(&f.maximum(&xs[0], 0.5)?, None, false), &[x])
        .unwrap();
    assert_eq!(g.grads[0].to_vec().unwrap(), vec![0.0, 1.0, 1.0]);
}

#[test]
fn pow_at_zero_base_gives_finite_gradient() {
    let f = autodiff();
    let x = f.variable(&f.from_vec(vec![0.0, 4.0], &[2], DType::Float64).unwrap()).unwrap();
    let g = f
        .execute_with_gradients(|xs| f.reduce_sum(&f.pow(&xs[0], 0.5)?, None, false), &[x])
        .unwrap();
    let d = g.grads[0].to_vec().unwrap();
    assert_eq!(d[0], 0.0);
    assert!((d[1] - 0.25).abs() < 1e-12);
}

#[test]
fn sqrt_at_zero_gives_zero_gradient() {
    let f = autodiff();
    let x = f.variable(&f.zeros(&[3], DType::Float64).unwrap()).unwrap();
    let g = f.execute_with_gradients(|xs| f.reduce_sum(&f.sqrt(&xs[0])?, None, false), &[x]).unwrap();
    assert_eq!(g.grads[0].to_vec().unwrap(), vec![0.0; 3]);
}

#[test]
fn inv_and_svd_have_no_gradient_rule() {
    let f = autodiff();
    let a = f.variable(&f.from_vec(vec![2.0, 0.0, 0.0, 3.0], &[2, 2], DType::Float64).unwrap()).unwrap();
    let e = f
        .execute_with_gradients(|xs| f.reduce_sum(&f.inv(&xs[0])?, None, false), std::slice::from_ref(&a))
        .unwrap_err();
    assert!(matches!(e, Error::NoGradRule(ref op) if op == "inv"), "{e:?}");
    let e = f
        .execute_with_gradients(|xs| f.reduce_sum(&f.svd(&xs[0])?.1, None, false), std::slice::from_ref(&a))
        .unwrap_err();
    assert!(matches!(e, Error::NoGradRule(_)), "{e:?}");

    // Off the differentiated path inv is fine.
    let g = f
        .execute_with_gradients(
            |xs| {
                let c = f.inv(&f.from_vec(vec![1.0, 0.0, 0.0, 1.0], &[2, 2], DType::Float64)?)?;
                f.reduce_sum(&f.mul(&xs[0], &c)?, None, false)
            },
            &[a],
        )
        .unwrap();
    assert_eq!(g.grads[0].to_vec().unwrap(), vec![1.0, 0.0, 0.0, 1.0]);
}

#[test]
fn non_scalar_loss_is_rejected() {
    let f = autodiff();
    let v = f.variable(&f.ones(&[3], DType::Float64).unwrap()).unwrap();
    let e = f.execute_with_gradients(|xs| f.mul(&xs[0], 2.0), &[v]).unwrap_err();
    assert!(matches!(e, Error::InvalidLoss(_)));
}

#[test]
fn aux_outputs_pass_through_and_are_not_differentiated() {
    let f = autodiff();
    let v = f.variable(&f.from_vec(vec![1.0, 2.0], &[2], DType::Float64).unwrap()).unwrap();
    let g = f
        .execute_with_gradients(
            |xs| {
                let poses = f.mul(&xs[0], 10.0)?;
                let loss = f.reduce_sum(&f.mul(&xs[0], &xs[0])?, None, false)?;
                Ok::<_, Error>((loss, vec![poses]))
            },
            &[v],
        )
        .unwrap();
    assert_eq!(g.loss.item().unwrap(), 5.0);
    assert_eq!(g.grads[0].to_vec().unwrap(), vec![2.0, 4.0]);
    assert_eq!(g.aux.len(), 1);
    assert_eq!(g.aux[0].to_vec().unwrap(), vec![10.0, 20.0]);
}

#[test]
fn unused_variable_gets_zero_gradient_with_its_shape() {
    let f = autodiff();
    let a = f.variable(&f.zeros(&[2, 6], DType::Float64).unwrap()).unwrap();
    let b = f.variable(&f.ones(&[3], DType::Float64).unwrap()).unwrap();
    let g = f.execute_with_gradients(|xs| f.reduce_sum(&xs[1], None, false), &[a, b]).unwrap();
    assert_eq!(g.grads[0].shape().dims(), &[2, 6]);
    assert_eq!(g.grads[0].to_vec().unwrap(), vec![0.0; 12]);
    assert_eq!(g.grads[1].to_vec().unwrap(), vec![1.0; 3]);
}

#[test]
fn float32_variables_get_float32_gradients() {
    let f = autodiff();
    let v = f.variable(&f.ones(&[2], DType::Float32).unwrap()).unwrap();
    let g = f.execute_with_gradients(|xs| f.reduce_sum(&f.mul(&xs[0], 3.0)?, None, false), &[v]).unwrap();
    assert_eq!(g.grads[0].dtype(), DType::Float32);
    assert_eq!(g.grads[0].to_vec().unwrap(), vec![3.0, 3.0]);
}

#[test]
fn cast_between_floats_passes_gradient() {
    let f = autodiff();
    let v = f.variable(&f.ones(&[2], DType::Float32).unwrap()).unwrap();
    let g = f
        .execute_with_gradients(|xs| f.reduce_sum(&f.mul(&f.cast(&xs[0], "float64")?, 2.0)?, None, false), &[v])
        .unwrap();
    assert_eq!(g.grads[0].to_vec().unwrap(), vec![2.0, 2.0]);
}

#[test]
fn variables_have_distinct_ids_and_require_float() {
    let f = autodiff();
    let x = f.zeros(&[2], DType::Float64).unwrap();
    let (a, b) = (f.variable(&x).unwrap(), f.variable(&x).unwrap());
    assert_ne!(a.id(), b.id());
    let e = f.variable(&f.zeros(&[2], DType::Int32).unwrap()).unwrap_err();
    assert!(matches!(e, Error::InvalidDType(_)));
    let e = f.variable(&host().zeros(&[2], DType::Float64).unwrap()).unwrap_err();
    assert!(matches!(e, Error::WrongBackend { .. }));
}

#[test]
fn host_backend_has_no_gradients() {
    let f = host();
    assert!(!f.supports_gradients());
    assert!(matches!(f.variable(&f.zeros(&[1], DType::Float64).unwrap()), Err(Error::Unsupported { .. })));
    let e = f.execute_with_gradients(|xs: &[Tensor]| Ok(xs[0].clone()), &[]).unwrap_err();
    assert!(matches!(e, Error::Unsupported { .. }));
}

#[test]
fn descent_update_examples() {
    let f = autodiff();
    let v = f.variable(&f.scalar(1.0, DType::Float64).unwrap()).unwrap();
    let g = f.scalar(0.5, DType::Float64).unwrap();
    let out = f.gradient_descent_update(std::slice::from_ref(&v), &[g], 0.1).unwrap();
    assert!((out[0].value().item().unwrap() - 0.95).abs() < 1e-15);
    assert_eq!(out[0].id(), v.id());

    let z = f.scalar(0.0, DType::Float64).unwrap();
    let out = f.gradient_descent_update(std::slice::from_ref(&v), &[z], 0.01).unwrap();
    assert!(out[0].value().bit_eq(v.value()));

    let bad = f.zeros(&[2], DType::Float64).unwrap();
    assert!(matches!(f.gradient_descent_update(std::slice::from_ref(&v), &[bad], 0.1), Err(Error::InvalidArgument(_))));
    assert!(matches!(f.gradient_descent_update(std::slice::from_ref(&v), &[], 0.1), Err(Error::InvalidArgument(_))));
    let g = f.scalar(0.5, DType::Float64).unwrap();
    assert!(matches!(f.gradient_descent_update(&[v], &[g], -1.0), Err(Error::InvalidArgument(_))));
}

#[test]
fn repeated_executions_are_bitwise_identical() {
    let f = autodiff();
    let run = || {
        let x = f.random_uniform(-1.0, 1.0, &[4, 3], 5).unwrap();
        let w = f.random_uniform(-1.0, 1.0, &[3, 2], 6).unwrap();
        let (vx, vw) = (f.variable(&x).unwrap(), f.variable(&w).unwrap());
        f.execute_with_gradients(
            |xs| {
                let y = f.tanh(&f.matmul(&xs[0], &xs[1])?)?;
                f.reduce_mean(&f.mul(&y, &y)?, None, false)
            },
            &[vx, vw],
        )
        .unwrap()
    };
    let (a, b) = (run(), run());
    assert!(a.loss.bit_eq(&b.loss));
    for (x, y) in a.grads.iter().zip(&b.grads) {
        assert!(x.bit_eq(y));
    }
}

#[test]
fn concurrent_tapes_are_independent() {
    let handles: Vec<_> = (0..4)
        .map(|k| {
            thread::spawn(move || {
                let f = autodiff();
                let v = f.variable(&f.full(&[3], k as f64, DType::Float64).unwrap()).unwrap();
                let g = f
                    .execute_with_gradients(|xs| f.reduce_sum(&f.mul(&xs[0], &xs[0])?, None, false), &[v])
                    .unwrap();
                g.grads[0].to_vec().unwrap()
            })
        })
        .collect();
    for (k, h) in handles.into_iter().enumerate() {
        assert_eq!(h.join().unwrap(), vec![2.0 * k as f64; 3]);
    }
}

#[test]
fn nested_executions_differentiate_their_own_tape() {
    let f = autodiff();
    let a = f.variable(&f.scalar(3.0, DType::Float64).unwrap()).unwrap();
    let b = f.variable(&f.scalar(2.0, DType::Float64).unwrap()).unwrap();
    let outer = f
        .execute_with_gradients(
            |xs| {
                let inner = f
                    .execute_with_gradients(|ys| f.mul(&ys[0], &ys[0]), std::slice::from_ref(&b))
                    .unwrap();
                assert_eq!(inner.grads[0].item().unwrap(), 4.0);
                f.mul(&xs[0], &inner.loss)
            },
            &[a],
        )
        .unwrap();
    assert_eq!(outer.loss.item().unwrap(), 12.0);
    assert_eq!(outer.grads[0].item().unwrap(), 4.0);
}
