//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
///
/// Tolerances that depend on precision (unit-norm checks, rank cutoffs)
/// are exposed here so generic code does not hard-code `f64` values.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Allowed deviation of a stored vector's L2 norm from 1.
    fn unit_norm_tolerance() -> Self;

    /// Inputs with norm below this cannot be projected onto the sphere.
    fn zero_norm_cutoff() -> Self;

    /// Convergence threshold for Jacobi rotations in the SVD.
    fn svd_tolerance() -> Self;

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to every Real")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize converts to every Real")
    }
}

impl Real for f64 {
    fn unit_norm_tolerance() -> Self {
        1e-9
    }
    fn zero_norm_cutoff() -> Self {
        1e-12
    }
    fn svd_tolerance() -> Self {
        1e-12
    }
}

impl Real for f32 {
    fn unit_norm_tolerance() -> Self {
        1e-5
    }
    fn zero_norm_cutoff() -> Self {
        1e-12
    }
    fn svd_tolerance() -> Self {
        1e-6
    }
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub(crate) fn euclidean<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        .sqrt()
}
