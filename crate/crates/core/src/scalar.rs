//! Scalar abstraction for the transfer-matrix layer.
//!
//! The segment propagators are built from the two entire functions
//! `cos(√u·h)` and `sin(√u·h)/√u` of `u = λ² − q₁² − q₂²`. Real spectral
//! work stays on `f64`; the growth estimates and band-side Bloch solutions
//! need complex `λ`, so the kernels are defined once over a small scalar
//! trait and instantiated for both.

use num_complex::Complex;
use num_traits::Float;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Relative size of `√u·h` below which the rotation kernels switch to
/// their Taylor series, removing the removable singularity at `u = 0`.
const KERNEL_SERIES_CUTOFF: f64 = 1e-4;

pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    type Real: Float + Debug;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_real(x: Self::Real) -> Self;
    fn real_from_f64(x: f64) -> Self::Real;
    /// Modulus.
    fn modulus(self) -> Self::Real;
    /// `(cos(√u·h), sin(√u·h)/√u)` for `u = self`. Both are entire in `u`,
    /// so the branch of the square root is irrelevant.
    fn rot_kernels(self, h: Self::Real) -> (Self, Self);
}

fn kernel_series<S: Scalar>(u: S, h: S::Real) -> (S, S) {
    // cos(√u h)  = Σ (−u)^k h^{2k} / (2k)!
    // sin(√u h)/√u = h · Σ (−u)^k h^{2k} / (2k+1)!
    let h = S::from_real(h);
    let uh2 = u * h * h;
    let inv = |d: f64| S::from_real(S::real_from_f64(1.0 / d));
    let one = S::one();
    let c = one - uh2 * (inv(2.0) - uh2 * (inv(24.0) - uh2 * inv(720.0)));
    let s = h * (one - uh2 * (inv(6.0) - uh2 * (inv(120.0) - uh2 * inv(5040.0))));
    (c, s)
}

impl Scalar for f64 {
    type Real = f64;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn real_from_f64(x: f64) -> f64 {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn rot_kernels(self, h: f64) -> (f64, f64) {
        let z = self.abs().sqrt() * h.abs();
        if z < KERNEL_SERIES_CUTOFF {
            return kernel_series(self, h);
        }
        if self > 0.0 {
            let w = self.sqrt();
            ((w * h).cos(), (w * h).sin() / w)
        } else {
            let v = (-self).sqrt();
            ((v * h).cosh(), (v * h).sinh() / v)
        }
    }
}

impl Scalar for f32 {
    type Real = f32;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_real(x: f32) -> Self {
        x
    }
    fn real_from_f64(x: f64) -> f32 {
        x as f32
    }
    fn modulus(self) -> f32 {
        self.abs()
    }
    fn rot_kernels(self, h: f32) -> (f32, f32) {
        let z = self.abs().sqrt() * h.abs();
        if (z as f64) < KERNEL_SERIES_CUTOFF {
            return kernel_series(self, h);
        }
        if self > 0.0 {
            let w = self.sqrt();
            ((w * h).cos(), (w * h).sin() / w)
        } else {
            let v = (-self).sqrt();
            ((v * h).cosh(), (v * h).sinh() / v)
        }
    }
}

impl<F> Scalar for Complex<F>
where
    F: Float + Debug + 'static,
    Complex<F>: Neg<Output = Complex<F>>,
{
    type Real = F;

    fn zero() -> Self {
        Complex::new(F::zero(), F::zero())
    }
    fn one() -> Self {
        Complex::new(F::one(), F::zero())
    }
    fn from_real(x: F) -> Self {
        Complex::new(x, F::zero())
    }
    fn real_from_f64(x: f64) -> F {
        F::from(x).unwrap()
    }
    fn modulus(self) -> F {
        self.norm()
    }
    fn rot_kernels(self, h: F) -> (Self, Self) {
        let z = self.norm().sqrt() * h.abs();
        if z.to_f64().unwrap_or(0.0) < KERNEL_SERIES_CUTOFF {
            return kernel_series(self, h);
        }
        let w = self.sqrt();
        let wh = w * Complex::from_real(h);
        (wh.cos(), wh.sin() / w)
    }
}
