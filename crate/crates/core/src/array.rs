use serde::{Deserialize, Serialize};

use crate::dtype::DType;
use crate::error::{invalid, Result};
use crate::shape::Shape;

/// Contiguous row-major buffer tagged with a dtype and shape.
///
/// Elements are stored as `f64` and kept normalized to the dtype, so every
/// stored value is exactly representable in its tag.
#[derive(Debug, Clone, PartialEq)]
pub struct HostArray {
    dtype: DType,
    shape: Shape,
    data: Vec<f64>,
}

impl HostArray {
    pub fn new(data: Vec<f64>, shape: impl Into<Shape>, dtype: DType) -> Result<Self> {
        let shape = shape.into();
        if data.len() != shape.numel() {
            return invalid(format!(
                "buffer of {} elements does not fill shape {shape}",
                data.len()
            ));
        }
        Ok(Self::from_normalized(
            data.into_iter().map(|v| dtype.normalize(v)).collect(),
            shape,
            dtype,
        ))
    }

    /// Caller guarantees length and normalization.
    pub(crate) fn from_normalized(data: Vec<f64>, shape: Shape, dtype: DType) -> Self {
        debug_assert_eq!(data.len(), shape.numel());
        HostArray { dtype, shape, data }
    }

    pub fn full(shape: impl Into<Shape>, value: f64, dtype: DType) -> Self {
        let shape = shape.into();
        let n = shape.numel();
        HostArray {
            dtype,
            shape,
            data: vec![dtype.normalize(value); n],
        }
    }

    pub fn scalar(value: f64, dtype: DType) -> Self {
        Self::full(Shape::scalar(), value, dtype)
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn with_shape(&self, shape: Shape) -> HostArray {
        debug_assert_eq!(shape.numel(), self.data.len());
        HostArray {
            dtype: self.dtype,
            shape,
            data: self.data.clone(),
        }
    }

    pub fn to_host(&self) -> HostValue {
        fn build(dims: &[usize], data: &[f64], dtype: DType) -> HostValue {
            match dims.split_first() {
                None => HostValue::from_element(data[0], dtype),
                Some((&n, rest)) => {
                    let step: usize = rest.iter().product();
                    HostValue::List(
                        (0..n)
                            .map(|i| build(rest, &data[i * step..(i + 1) * step], dtype))
                            .collect(),
                    )
                }
            }
        }
        build(self.shape.dims(), &self.data, self.dtype)
    }

    pub fn from_host(value: &HostValue, dtype: DType) -> Result<Self> {
        let shape = value.shape()?;
        let mut data = Vec::with_capacity(shape.numel());
        value.flatten_into(&mut data);
        HostArray::new(data, shape, dtype)
    }
}

/// Nested host materialization of a tensor, mirroring its shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HostValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    List(Vec<HostValue>),
}

impl HostValue {
    fn from_element(v: f64, dtype: DType) -> Self {
        match dtype {
            DType::Float32 | DType::Float64 => HostValue::Float(v),
            DType::Int32 | DType::Int64 => HostValue::Int(v as i64),
            DType::Bool => HostValue::Bool(v != 0.0),
        }
    }

    /// Extents implied by the nesting; ragged lists are rejected.
    pub fn shape(&self) -> Result<Shape> {
        match self {
            HostValue::List(items) => {
                let Some(first) = items.first() else {
                    return Ok(Shape::from([0]));
                };
                let inner = first.shape()?;
                for it in &items[1..] {
                    if it.shape()? != inner {
                        return invalid("ragged nested host value");
                    }
                }
                let mut dims = vec![items.len()];
                dims.extend_from_slice(inner.dims());
                Ok(Shape::new(dims))
            }
            _ => Ok(Shape::scalar()),
        }
    }

    fn flatten_into(&self, out: &mut Vec<f64>) {
        match self {
            HostValue::Bool(b) => out.push(if *b { 1.0 } else { 0.0 }),
            HostValue::Int(i) => out.push(*i as f64),
            HostValue::Float(f) => out.push(*f),
            HostValue::List(items) => items.iter().for_each(|it| it.flatten_into(out)),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.flatten_into(&mut out);
        out
    }

    /// The value of a scalar leaf, if this is one.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            HostValue::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
            HostValue::Int(i) => Some(*i as f64),
            HostValue::Float(f) => Some(*f),
            HostValue::List(_) => None,
        }
    }
}

impl From<f64> for HostValue {
    fn from(v: f64) -> Self {
        HostValue::Float(v)
    }
}

impl From<i64> for HostValue {
    fn from(v: i64) -> Self {
        HostValue::Int(v)
    }
}

impl From<bool> for HostValue {
    fn from(v: bool) -> Self {
        HostValue::Bool(v)
    }
}

impl<T: Into<HostValue>> From<Vec<T>> for HostValue {
    fn from(v: Vec<T>) -> Self {
        HostValue::List(v.into_iter().map(Into::into).collect())
    }
}

impl<T: Into<HostValue> + Clone> From<&[T]> for HostValue {
    fn from(v: &[T]) -> Self {
        HostValue::List(v.iter().cloned().map(Into::into).collect())
    }
}

impl<T: Into<HostValue>, const N: usize> From<[T; N]> for HostValue {
    fn from(v: [T; N]) -> Self {
        HostValue::List(v.into_iter().map(Into::into).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_round_trip() {
        let v: HostValue = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]].into();
        let a = HostArray::from_host(&v, DType::Float64).unwrap();
        assert_eq!(a.shape(), &Shape::from([2, 3]));
        assert_eq!(a.to_host(), v);
    }

    #[test]
    fn scalar_materializes_as_leaf() {
        let a = HostArray::scalar(3.0, DType::Float64);
        assert_eq!(a.to_host(), HostValue::Float(3.0));
    }

    #[test]
    fn ragged_rejected() {
        let v = HostValue::List(vec![vec![1.0].into(), vec![1.0, 2.0].into()]);
        assert!(HostArray::from_host(&v, DType::Float64).is_err());
    }

    #[test]
    fn length_checked() {
        assert!(HostArray::new(vec![1.0; 5], [2, 3], DType::Float64).is_err());
    }
}
