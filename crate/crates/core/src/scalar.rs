//! Scalar plumbing shared by every module.
//!
//! All numerics are generic over a real field `T` (`f32` or `f64`); complex
//! amplitudes are `Complex<T>`. Concrete `f64` aliases live at the crate root.

use std::fmt::{Debug, Display};

use nalgebra::{ComplexField, DMatrix, DVector, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar used throughout the simulator.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type C<T> = Complex<T>;
pub type Mat<T> = DMatrix<Complex<T>>;
pub type Ket<T> = DVector<Complex<T>>;

#[inline]
pub fn c<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub fn cr<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

/// Largest entry modulus.
pub fn max_abs<T: Real>(m: &Mat<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(z.modulus()))
}

/// `(m + m†) / 2`, in place.
pub fn hermitize<T: Real>(m: &mut Mat<T>) {
    let n = m.nrows();
    let half = T::lit(0.5);
    for j in 0..n {
        let d = m[(j, j)];
        m[(j, j)] = cr(d.re);
        for i in (j + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * half;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// Real part of the trace.
pub fn trace_re<T: Real>(m: &Mat<T>) -> T {
    (0..m.nrows()).fold(T::zero(), |acc, i| acc + m[(i, i)].re)
}
