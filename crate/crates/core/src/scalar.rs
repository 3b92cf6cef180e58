//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used for coefficients, kernels and states.
///
/// Implemented for `f32` and `f64`. The library is exercised in `f64`;
/// `f32` is supported for memory-bound experiments at large levels.
pub trait Real:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, used for literals and parsed data.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to every Real")
    }

    /// Lossy conversion to `f64`, used for serialization and reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }

    /// `n` as a scalar.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize converts to every Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}

const PAIRWISE_LEAF: usize = 8;

/// Sum of `f(start) + … + f(start + len - 1)` using a fixed pairwise
/// reduction tree.
///
/// The tree depends only on `len`, so the result is bit-identical whatever
/// thread evaluates it.
pub fn pairwise_sum_by<T: Real, F: Fn(usize) -> T>(start: usize, len: usize, f: &F) -> T {
    if len <= PAIRWISE_LEAF {
        let mut acc = T::zero();
        for k in start..start + len {
            acc += f(k);
        }
        return acc;
    }
    let half = len / 2;
    pairwise_sum_by(start, half, f) + pairwise_sum_by(start + half, len - half, f)
}

/// Pairwise sum of a slice.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    pairwise_sum_by(0, xs.len(), &|k| xs[k])
}
