//! numerical trait constraints

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar the operators and the solver are written against.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; values outside the range saturate to infinity.
    fn of(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(Self::infinity)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts a slice between scalar types.
pub fn cast_slice<S: Real, T: Real>(src: &[S]) -> Vec<T> {
    src.iter().map(|&v| T::of(v.as_f64())).collect()
}

/// Inner product accumulated in `f64`.
pub fn dot<T: Real>(a: &[T], b: &[T]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x.as_f64() * y.as_f64()).sum()
}

pub fn norm2<T: Real>(a: &[T]) -> f64 {
    dot(a, a).sqrt()
}
