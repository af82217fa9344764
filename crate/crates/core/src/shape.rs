use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Row-major extents. Rank 0 is a scalar with one element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Self {
        Shape(dims.into())
    }

    pub fn scalar() -> Self {
        Shape(Vec::new())
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn numel(&self) -> usize {
        self.0.iter().product()
    }

    /// Row-major strides in elements.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.0.len()];
        for i in (0..self.0.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.0[i + 1];
        }
        strides
    }

    /// Maps a possibly negative axis into `0..rank`.
    pub fn axis(&self, axis: isize) -> Result<usize> {
        normalize_axis(axis, self.rank())
    }

    /// Resolves a target shape that may contain a single `-1` wildcard.
    pub fn resolve_reshape(&self, target: &[isize]) -> Result<Shape> {
        let numel = self.numel();
        let mut wildcard = None;
        let mut known = 1usize;
        for (i, &d) in target.iter().enumerate() {
            if d == -1 {
                if wildcard.replace(i).is_some() {
                    return invalid("reshape accepts at most one -1 extent");
                }
            } else if d < 0 {
                return invalid(format!("negative extent {d} in reshape"));
            } else {
                known *= d as usize;
            }
        }
        let mut dims: Vec<usize> = target.iter().map(|&d| d.max(0) as usize).collect();
        if let Some(i) = wildcard {
            if known == 0 || !numel.is_multiple_of(known) {
                return invalid(format!("cannot infer -1 reshaping {self} to {target:?}"));
            }
            dims[i] = numel / known;
        }
        let out = Shape(dims);
        if out.numel() != numel {
            return invalid(format!(
                "reshape element-count mismatch: {self} ({numel}) to {out} ({})",
                out.numel()
            ));
        }
        Ok(out)
    }
}

impl Deref for Shape {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for Shape {
    fn from(v: Vec<usize>) -> Self {
        Shape(v)
    }
}

impl From<&[usize]> for Shape {
    fn from(v: &[usize]) -> Self {
        Shape(v.to_vec())
    }
}

impl<const N: usize> From<[usize; N]> for Shape {
    fn from(v: [usize; N]) -> Self {
        Shape(v.to_vec())
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{d}")?;
        }
        if self.0.len() == 1 {
            write!(f, ",")?;
        }
        write!(f, ")")
    }
}

pub fn normalize_axis(axis: isize, rank: usize) -> Result<usize> {
    let r = rank as isize;
    if axis < -r || axis >= r {
        return invalid(format!("axis {axis} out of range for rank {rank}"));
    }
    Ok(if axis < 0 { (axis + r) as usize } else { axis as usize })
}

/// Trailing-aligned broadcast of two shapes.
pub fn broadcast_shapes(a: &Shape, b: &Shape) -> Result<Shape> {
    let rank = a.rank().max(b.rank());
    let mut out = vec![0; rank];
    for i in 0..rank {
        let da = if i < rank - a.rank() { 1 } else { a[i - (rank - a.rank())] };
        let db = if i < rank - b.rank() { 1 } else { b[i - (rank - b.rank())] };
        out[i] = match (da, db) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => return invalid(format!("shapes {a} and {b} do not broadcast")),
        };
    }
    Ok(Shape(out))
}

/// Strides of `input` viewed at the rank of `out`, zero along broadcast axes.
pub fn broadcast_strides(input: &Shape, out: &Shape) -> Vec<usize> {
    let offset = out.rank() - input.rank();
    let own = input.strides();
    (0..out.rank())
        .map(|i| {
            if i < offset || input[i - offset] == 1 {
                0
            } else {
                own[i - offset]
            }
        })
        .collect()
}
