//! Scalar abstraction shared by the numerical modules.

use std::fmt::Debug;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar the model is generic over (`f32` or `f64`).
pub trait Real: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static {
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    /// Converts a count into the scalar type.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }
}

impl<T> Real for T where T: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static {}

/// Unit-modulus complex number `e^{j phase}`.
#[inline]
pub fn cis<T: Real>(phase: T) -> Complex<T> {
    let (s, c) = phase.sin_cos();
    Complex::new(c, s)
}

/// Hermitian inner product `uᴴv`.
pub fn inner<T: Real>(u: &[Complex<T>], v: &[Complex<T>]) -> Complex<T> {
    debug_assert_eq!(u.len(), v.len());
    u.iter()
        .zip(v)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b)
}

/// Squared Euclidean norm of a complex vector.
pub fn norm_sqr<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}
