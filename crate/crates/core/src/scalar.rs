//! Scalar abstraction shared by every numerical routine.
//!
//! Everything linear-algebraic is written against [`Real`], which is the
//! intersection of what nalgebra needs (`RealField`) and what the rest of the
//! crate needs (conversion from `f64` literals). Complex numbers are always
//! `Complex<T>`; real inputs get promoted.

use nalgebra::{DMatrix, DVector, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar usable by the index engines. Implemented for `f32` and `f64`.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Never fails for the finite values we use.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Converts a count.
    fn of(n: usize) -> Self {
        Self::from_usize(n).expect("representable count")
    }

    fn to_f(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the type.
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

/// Complex scalar over `T`.
pub type C<T> = Complex<T>;
/// Dense complex matrix.
pub type CMat<T> = DMatrix<C<T>>;
/// Dense complex vector.
pub type CVec<T> = DVector<C<T>>;
/// Dense real matrix.
pub type RMat<T> = DMatrix<T>;

#[inline]
pub fn c<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub fn cr<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

/// `e^{iθ}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> C<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Promotes a real matrix to a complex one.
pub fn complexify<T: Real>(m: &RMat<T>) -> CMat<T> {
    m.map(cr)
}

/// Largest absolute imaginary part, used by the real-path flag.
pub fn max_imag<T: Real>(m: &CMat<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(z.im.abs()))
}

/// Real part of a complex matrix.
pub fn real_part<T: Real>(m: &CMat<T>) -> RMat<T> {
    m.map(|z| z.re)
}
