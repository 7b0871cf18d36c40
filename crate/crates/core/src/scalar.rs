//! Scalar abstraction: every weight, threshold, embedding entry and distance
//! is a `Real`, so the whole pipeline runs at `f32` (memory-lean) or `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Send
    + Sync
    + Debug
    + Display
    + serde::Serialize
    + serde::de::DeserializeOwned
    + 'static
{
    fn from_f64_c(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any Real")
    }

    fn to_f64_c(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip() {
        assert_eq!(f32::from_f64_c(0.5), 0.5f32);
        assert_eq!(f64::from_f64_c(0.5).to_f64_c(), 0.5);
    }
}
