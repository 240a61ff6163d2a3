//! Scalar abstraction: every numerical routine in this crate is generic over
//! [`Real`], so the same code runs in `f32` and `f64`. Certification defaults
//! to `f64`; the `f32` instantiation exists for quick smoke runs.

/// Floating-point scalar usable by the FEM kernels and certificates.
pub trait Real: nalgebra::RealField + num_traits::FromPrimitive + num_traits::ToPrimitive + Copy {
    /// Machine epsilon of the scalar type.
    fn eps() -> Self;
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

/// Consistency tolerance: the `f64` target, widened when the scalar type is
/// coarser (structural checks stay meaningful in `f32`).
#[inline]
pub fn scaled_tol<T: Real>(target_f64: f64) -> T {
    let widened = T::eps() * real((target_f64 / f64::EPSILON).max(1.0));
    real::<T>(target_f64).max(widened)
}

/// Convert an `f64` literal/intermediate into the working scalar.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Convert the working scalar back to `f64` (for reports and serialization).
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().expect("scalar convertible to f64")
}
