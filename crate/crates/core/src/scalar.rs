//! Floating-point abstraction shared by every numerical routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar the toolkit computes in: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Sum
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(x: usize) -> Self {
        Self::from_usize(x).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `2^k` for a signed exponent, exact for both supported types.
    #[inline]
    fn pow2(k: i32) -> Self {
        Self::lit(2.0).powi(k)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Euclidean distance between two equally sized coordinate slices.
#[inline]
pub fn dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    dist2(a, b).sqrt()
}

#[inline]
pub fn dist2<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        let d = *x - *y;
        acc = acc + d * d;
    }
    acc
}

#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |acc, x| acc + *x * *x).sqrt()
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

/// Serde adapter writing non-finite values as `"inf"`, `"-inf"` or `"nan"`,
/// since JSON numbers cannot hold them.
pub mod extended {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::Scalar;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Word(String),
    }

    pub fn serialize<T: Scalar, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        let x = v.as_f64();
        match x {
            _ if x.is_nan() => s.serialize_str("nan"),
            f64::INFINITY => s.serialize_str("inf"),
            f64::NEG_INFINITY => s.serialize_str("-inf"),
            _ => v.serialize(s),
        }
    }

    pub fn deserialize<'de, T: Scalar, D: Deserializer<'de>>(d: D) -> Result<T, D::Error> {
        let x = match Repr::deserialize(d)? {
            Repr::Num(x) => x,
            Repr::Word(w) => match w.as_str() {
                "inf" => f64::INFINITY,
                "-inf" => f64::NEG_INFINITY,
                "nan" => f64::NAN,
                _ => return Err(serde::de::Error::custom(format!("not a number: {w}"))),
            },
        };
        Ok(T::lit(x))
    }
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize)]
    struct Wrap {
        #[serde(with = "super::extended")]
        v: f64,
    }

    #[test]
    fn extended_round_trips_non_finite() {
        for v in [1.5, f64::INFINITY, f64::NEG_INFINITY] {
            let text = serde_json::to_string(&Wrap { v }).unwrap();
            assert_eq!(serde_json::from_str::<Wrap>(&text).unwrap().v, v);
        }
        let nan = serde_json::to_string(&Wrap { v: f64::NAN }).unwrap();
        assert_eq!(nan, r#"{"v":"nan"}"#);
        assert!(serde_json::from_str::<Wrap>(&nan).unwrap().v.is_nan());
        assert!(serde_json::from_str::<Wrap>(r#"{"v":"big"}"#).is_err());
    }
}
