//! Scalar abstraction shared by the numerical modules.
//!
//! Every matrix in the crate is built from `Complex<T>` where `T: Real`.
//! Tolerances quoted throughout the crate assume `f64`; `f32` works for
//! evaluation but is too coarse for the optimizer's convergence tests.

use nalgebra::{Complex, DMatrix, DVector, RealField};
use num_traits::{FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real floating-point type usable by every module of the crate.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Default + Serialize + DeserializeOwned
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over `T`.
pub type Cx<T> = Complex<T>;
/// Dense complex matrix.
pub type CMat<T> = DMatrix<Complex<T>>;
/// Dense complex column vector.
pub type CVec<T> = DVector<Complex<T>>;

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Converts `T` back to `f64` for reporting.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().expect("scalar convertible to f64")
}

#[inline]
pub(crate) fn cx<T: Real>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn creal<T: Real>(re: T) -> Cx<T> {
    Complex::new(re, T::zero())
}
