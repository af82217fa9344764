use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Element type tag. The set is closed; there is no implicit promotion
/// between tags, binary ops require both operands to share one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    Float32,
    Float64,
    Int32,
    Int64,
    Bool,
}

impl DType {
    pub const ALL: [DType; 5] = [
        DType::Float32,
        DType::Float64,
        DType::Int32,
        DType::Int64,
        DType::Bool,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DType::Float32 => "float32",
            DType::Float64 => "float64",
            DType::Int32 => "int32",
            DType::Int64 => "int64",
            DType::Bool => "bool",
        }
    }

    pub fn is_float(self) -> bool {
        matches!(self, DType::Float32 | DType::Float64)
    }

    pub fn is_int(self) -> bool {
        matches!(self, DType::Int32 | DType::Int64)
    }

    /// Rounds an `f64` to the nearest value representable in this dtype.
    ///
    /// Float to int truncates toward zero and saturates at the type bounds;
    /// NaN maps to 0 for integer tags. `int64` values are exact only within
    /// +-2^53 because element storage is `f64`.
    #[inline]
    pub fn normalize(self, v: f64) -> f64 {
        match self {
            DType::Float64 => v,
            DType::Float32 => v as f32 as f64,
            DType::Int32 => v as i32 as f64,
            DType::Int64 => v as i64 as f64,
            DType::Bool => {
                if v != 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DType::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::InvalidDType(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for d in DType::ALL {
            assert_eq!(d.name().parse::<DType>().unwrap(), d);
            assert_eq!(d.to_string(), d.name());
        }
    }

    #[test]
    fn unknown_name_is_invalid_dtype() {
        assert!(matches!("float16".parse::<DType>(), Err(Error::InvalidDType(_))));
    }

    #[test]
    fn normalize_truncates_toward_zero() {
        assert_eq!(DType::Int32.normalize(1.7), 1.0);
        assert_eq!(DType::Int32.normalize(-1.7), -1.0);
        assert_eq!(DType::Bool.normalize(-3.0), 1.0);
        assert_eq!(DType::Float32.normalize(0.1), 0.1f32 as f64);
    }
}
