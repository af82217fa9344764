//! Data-parallel execution of element-independent kernel loops.
//!
//! With the `parallel` feature, large elementwise maps and matmul rows are
//! spread over the rayon pool. Every parallelized loop computes each output
//! element independently of the others, so results are bitwise identical to
//! the sequential path. Reductions always run sequentially.

use std::sync::atomic::{AtomicBool, Ordering};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many output elements the sequential loop is used.
pub const MIN_PARALLEL_LEN: usize = 1 << 14;

static ENABLED: AtomicBool = AtomicBool::new(true);

/// Runtime switch. Has no effect when the `parallel` feature is off.
pub fn set_enabled(on: bool) {
    ENABLED.store(on, Ordering::Relaxed);
}

pub fn enabled() -> bool {
    cfg!(feature = "parallel") && ENABLED.load(Ordering::Relaxed)
}

/// `out[i] = f(i)` for `i in 0..n`.
pub(crate) fn map_indexed<F>(n: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if enabled() && n >= MIN_PARALLEL_LEN {
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// `out[i] = f(src[i])`.
pub(crate) fn map_slice<F>(src: &[f64], f: F) -> Vec<f64>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if enabled() && src.len() >= MIN_PARALLEL_LEN {
        return src.par_iter().map(|&v| f(v)).collect();
    }
    src.iter().map(|&v| f(v)).collect()
}

/// Fills `out` in rows of `row_len`, calling `f(row_index, row)`.
pub(crate) fn for_each_row<F>(out: &mut [f64], row_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    if row_len == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    if enabled() && out.len() >= MIN_PARALLEL_LEN {
        out.par_chunks_mut(row_len)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
        return;
    }
    out.chunks_mut(row_len)
        .enumerate()
        .for_each(|(i, row)| f(i, row));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let n = MIN_PARALLEL_LEN * 3 + 7;
        let f = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let par = map_indexed(n, f);
        let seq: Vec<f64> = (0..n).map(f).collect();
        assert_eq!(par, seq);
    }
}
