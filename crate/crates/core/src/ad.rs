//! Scalars usable both as plain floats and as forward-mode dual numbers.

use std::ops::{Add, Div, Mul, Sub};

pub use num_dual::{Dual64, DualNum, DualStruct};

pub trait Real:
    DualNum<Primitive = f64>
    + DualStruct<Real = f64>
    + Copy
    + From<f64>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(x: f64) -> Self {
        <Self as From<f64>>::from(x)
    }

    fn val(&self) -> f64 {
        DualStruct::re(self)
    }
}

impl<T> Real for T where
    T: DualNum<Primitive = f64>
        + DualStruct<Real = f64>
        + Copy
        + From<f64>
        + Add<f64, Output = T>
        + Sub<f64, Output = T>
        + Mul<f64, Output = T>
        + Div<f64, Output = T>
{
}

/// A dual number with value `x` and tangent `dx`.
pub fn seeded(x: f64, dx: f64) -> Dual64 {
    Dual64::new(x, dx)
}

pub fn dot<D: Real>(a: &[D], b: &[D]) -> D {
    a.iter().zip(b).fold(D::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm2<D: Real>(a: &[D]) -> D {
    dot(a, a)
}
