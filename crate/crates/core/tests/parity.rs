use proptest::prelude::*;
use templar::backend::{autodiff, host};
use templar::conformance::{parity_op_names, parity_suite};
use templar::{agnostic, BackendRef, DType, Tensor};

fn t(f: BackendRef, data: &[f64], shape: &[usize]) -> Tensor {
    f.from_vec(data.to_vec(), shape, DType::Float64).unwrap()
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

fn unravel(mut i: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for d in (0..shape.len()).rev() {
        idx[d] = i % shape[d];
        i /= shape[d];
    }
    idx
}

#[test]
fn every_core_op_agrees_between_host_and_autodiff() {
    let reports = parity_suite(host(), autodiff(), 128, 7);
    assert_eq!(reports.len(), parity_op_names().len());
    for r in &reports {
        assert!(r.cases >= 100);
        assert!(r.passed(1e-9), "{}: {:?} max {}", r.op, r.failures, r.max_err);
    }
}

fn shape_strategy(max_rank: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=4, 0..=max_rank)
}

fn data_for(shape: Vec<usize>) -> impl Strategy<Value = (Vec<usize>, Vec<f64>)> {
    let n = shape.iter().product::<usize>();
    (Just(shape), prop::collection::vec(-10.0f64..10.0, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn broadcast_add_matches_naive_loop(
        (sa, a) in shape_strategy(3).prop_flat_map(data_for),
        mask in prop::collection::vec(any::<bool>(), 3),
        keep in 0usize..=3,
        seed in any::<u64>(),
    ) {
        let keep = keep.min(sa.len());
        let sb: Vec<usize> = sa[sa.len() - keep..].iter().zip(&mask).map(|(&d, &m)| if m { 1 } else { d }).collect();
        let nb: usize = sb.iter().product();
        let b: Vec<f64> = (0..nb).map(|i| ((i as u64 ^ seed) % 17) as f64 - 8.0).collect();
        for f in [host(), autodiff()] {
            let out = f.add(&t(f, &a, &sa), &t(f, &b, &sb)).unwrap();
            prop_assert_eq!(out.shape().dims(), &sa[..]);
            let got = out.to_vec().unwrap();
            let bs = strides(&sb);
            for (i, g) in got.iter().enumerate() {
                let idx = unravel(i, &sa);
                let off = sa.len() - sb.len();
                let j: usize = (0..sb.len()).map(|d| if sb[d] == 1 { 0 } else { idx[off + d] * bs[d] }).sum();
                prop_assert_eq!(*g, a[i] + b[j]);
            }
        }
    }

    #[test]
    fn reduce_sum_axis_matches_naive_loop(
        (s, x) in prop::collection::vec(1usize..=4, 1..=3).prop_flat_map(data_for),
        axis_pick in any::<prop::sample::Index>(),
    ) {
        let axis = axis_pick.index(s.len());
        let mut out_shape = s.clone();
        out_shape.remove(axis);
        let mut expect = vec![0.0; out_shape.iter().product()];
        for (i, v) in x.iter().enumerate() {
            let mut idx = unravel(i, &s);
            idx.remove(axis);
            let j: usize = idx.iter().zip(strides(&out_shape)).map(|(a, b)| a * b).sum();
            expect[j] += v;
        }
        for f in [host(), autodiff()] {
            let got = f.reduce_sum(&t(f, &x, &s), Some(axis as isize), false).unwrap();
            prop_assert_eq!(got.shape().dims(), &out_shape[..]);
            for (g, e) in got.to_vec().unwrap().iter().zip(&expect) {
                prop_assert!((g - e).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn matmul_matches_triple_loop(m in 1usize..=4, k in 1usize..=4, n in 1usize..=4, seed in any::<u64>()) {
        let a: Vec<f64> = (0..m * k).map(|i| ((i as u64 * 7 + seed) % 11) as f64 - 5.0).collect();
        let b: Vec<f64> = (0..k * n).map(|i| ((i as u64 * 3 + seed) % 13) as f64 - 6.0).collect();
        for f in [host(), autodiff()] {
            let got = f.matmul(&t(f, &a, &[m, k]), &t(f, &b, &[k, n])).unwrap().to_vec().unwrap();
            for i in 0..m {
                for j in 0..n {
                    let e: f64 = (0..k).map(|p| a[i * k + p] * b[p * n + j]).sum();
                    prop_assert_eq!(got[i * n + j], e);
                }
            }
        }
    }

    #[test]
    fn transpose_matches_index_permutation(
        (s, x) in shape_strategy(3).prop_flat_map(data_for),
        perm_seed in any::<prop::sample::Index>(),
    ) {
        let mut perm: Vec<usize> = (0..s.len()).collect();
        if !perm.is_empty() {
            let r = perm_seed.index(perm.len());
            perm.rotate_left(r);
        }
        let axes: Vec<isize> = perm.iter().map(|&p| p as isize).collect();
        let out_shape: Vec<usize> = perm.iter().map(|&p| s[p]).collect();
        for f in [host(), autodiff()] {
            let got = f.transpose(&t(f, &x, &s), Some(&axes)).unwrap();
            prop_assert_eq!(got.shape().dims(), &out_shape[..]);
            let gv = got.to_vec().unwrap();
            let st = strides(&s);
            for (i, g) in gv.iter().enumerate() {
                let oi = unravel(i, &out_shape);
                let src: usize = perm.iter().enumerate().map(|(d, &p)| oi[d] * st[p]).sum();
                prop_assert_eq!(*g, x[src]);
            }
        }
    }

    #[test]
    fn gather_nd_matches_naive_lookup(
        (s, x) in prop::collection::vec(1usize..=4, 1..=3).prop_flat_map(data_for),
        k_pick in any::<prop::sample::Index>(),
        picks in prop::collection::vec(any::<prop::sample::Index>(), 1..=12),
    ) {
        let k = k_pick.index(s.len()) + 1;
        let n = picks.len() / k.max(1);
        prop_assume!(n >= 1);
        let idx: Vec<f64> = (0..n * k).map(|i| picks[i].index(s[i % k]) as f64).collect();
        let inner: usize = s[k..].iter().product();
        let st = strides(&s);
        for f in [host(), autodiff()] {
            let it = f.from_vec(idx.clone(), &[n, k], DType::Int64).unwrap();
            let got = f.gather_nd(&t(f, &x, &s), &it).unwrap().to_vec().unwrap();
            for r in 0..n {
                let base: usize = (0..k).map(|d| idx[r * k + d] as usize * st[d]).sum();
                for j in 0..inner {
                    prop_assert_eq!(got[r * inner + j], x[base + j]);
                }
            }
        }
    }

    #[test]
    fn batched_matmul_is_independent_per_batch(batch in 1usize..=4, m in 1usize..=3, k in 1usize..=3, n in 1usize..=3, seed in any::<u64>()) {
        let a: Vec<f64> = (0..batch * m * k).map(|i| ((i as u64 * 5 + seed) % 9) as f64 - 4.0).collect();
        let b: Vec<f64> = (0..batch * k * n).map(|i| ((i as u64 * 11 + seed) % 7) as f64 - 3.0).collect();
        for f in [host(), autodiff()] {
            let whole = f.matmul(&t(f, &a, &[batch, m, k]), &t(f, &b, &[batch, k, n])).unwrap().to_vec().unwrap();
            for i in 0..batch {
                let one = f
                    .matmul(&t(f, &a[i * m * k..(i + 1) * m * k], &[m, k]), &t(f, &b[i * k * n..(i + 1) * k * n], &[k, n]))
                    .unwrap()
                    .to_vec()
                    .unwrap();
                prop_assert_eq!(&whole[i * m * n..(i + 1) * m * n], &one[..]);
            }
        }
    }

    #[test]
    fn batched_unary_and_reduce_are_independent_per_row(rows in 1usize..=5, cols in 1usize..=5, seed in any::<u64>()) {
        let x: Vec<f64> = (0..rows * cols).map(|i| (((i as u64).wrapping_mul(2654435761) ^ seed) % 1000) as f64 / 100.0).collect();
        let f = host();
        let whole = f.reduce_max(&f.sin(&t(f, &x, &[rows, cols])).unwrap(), Some(-1), false).unwrap().to_vec().unwrap();
        for r in 0..rows {
            let one = f.reduce_max(&f.sin(&t(f, &x[r * cols..(r + 1) * cols], &[cols])).unwrap(), None, false).unwrap().item().unwrap();
            prop_assert_eq!(whole[r], one);
        }
    }

    #[test]
    fn agnostic_wrappers_equal_explicit_calls(
        (s, x) in shape_strategy(3).prop_flat_map(data_for),
        c in 0.5f64..2.0,
    ) {
        for f in [host(), autodiff()] {
            let a = t(f, &x, &s);
            let pairs = [
                (agnostic::sin(&a, None).unwrap(), f.sin(&a).unwrap()),
                (agnostic::exp(&a, Some(f)).unwrap(), f.exp(&a).unwrap()),
                (agnostic::mul(&a, c, None).unwrap(), f.mul(&a, c).unwrap()),
                (agnostic::add(&a, &a, None).unwrap(), f.add(&a, &a).unwrap()),
                (agnostic::clip(&a, -1.0, 1.0, None).unwrap(), f.clip(&a, -1.0, 1.0).unwrap()),
                (agnostic::reduce_sum(&a, None, true, None).unwrap(), f.reduce_sum(&a, None, true).unwrap()),
                (agnostic::reshape(&a, &[-1], None).unwrap(), f.reshape(&a, &[-1]).unwrap()),
                (agnostic::transpose(&a, None, None).unwrap(), f.transpose(&a, None).unwrap()),
            ];
            for (w, e) in &pairs {
                prop_assert!(w.bit_eq(e));
                prop_assert_eq!(w.backend_id(), f.id());
            }
        }
    }
}
