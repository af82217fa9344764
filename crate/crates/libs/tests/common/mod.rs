#![allow(dead_code)]

use templar::{BackendRef, DType, Tensor};
use templar_libs::Cuboids;

pub const EXT_MATS: [[[f64; 4]; 3]; 4] = [
    [[0.0, 1.0, 0.0, 0.03], [-1.0, 0.0, 0.0, -0.60], [0.0, 0.0, 1.0, -0.45]],
    [[-1.0, 0.0, 0.0, 0.28], [0.0, -1.0, 0.0, -0.65], [0.0, 0.0, 1.0, -0.45]],
    [[1.0, 0.0, 0.0, -0.30], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, -0.37]],
    [[1.0, 0.0, 0.0, -0.17], [0.0, 1.0, 0.0, 0.02], [0.0, 0.0, 1.0, -1.03]],
];

pub const DIMS: [[f64; 3]; 4] = [[0.4, 0.45, 0.91], [0.4, 0.45, 0.91], [1.6, 1.1, 0.75], [0.4, 0.4, 0.56]];

pub fn scene(f: BackendRef) -> Cuboids {
    let ext: Vec<f64> = EXT_MATS.iter().flatten().flatten().copied().collect();
    let dims: Vec<f64> = DIMS.iter().flatten().copied().collect();
    Cuboids {
        ext_mats: f.from_vec(ext, &[4, 3, 4], DType::Float64).unwrap(),
        dims: f.from_vec(dims, &[4, 3], DType::Float64).unwrap(),
    }
}

pub fn to_local(m: &[[f64; 4]; 3], p: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = m[i][0] * p[0] + m[i][1] * p[1] + m[i][2] * p[2] + m[i][3];
    }
    out
}

pub fn t(f: BackendRef, data: &[f64], shape: &[usize]) -> Tensor {
    f.from_vec(data.to_vec(), shape, DType::Float64).unwrap()
}
