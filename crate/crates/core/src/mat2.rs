//! Minimal 2×2 matrix and 2-vector arithmetic over [`Scalar`].
//!
//! Everything in this crate lives in the 2×2 world of the Dirac system, so
//! a hand-rolled type with exact adjugate inverses beats pulling in a
//! general linear-algebra dependency.

use crate::scalar::Scalar;
use num_traits::Float;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec2<T> {
    pub x1: T,
    pub x2: T,
}

impl<T: Scalar> Vec2<T> {
    pub fn new(x1: T, x2: T) -> Self {
        Vec2 { x1, x2 }
    }

    pub fn norm(&self) -> T::Real {
        let a = self.x1.modulus();
        let b = self.x2.modulus();
        (a * a + b * b).sqrt()
    }

    pub fn scale(&self, r: T) -> Self {
        Vec2::new(self.x1 * r, self.x2 * r)
    }
}

/// Wronskian `u₁v₂ − u₂v₁`.
pub fn wronskian<T: Scalar>(u: &Vec2<T>, v: &Vec2<T>) -> T {
    u.x1 * v.x2 - u.x2 * v.x1
}

/// Row-major 2×2 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2<T> {
    pub e: [[T; 2]; 2],
}

impl<T: Scalar> Mat2<T> {
    pub fn new(a11: T, a12: T, a21: T, a22: T) -> Self {
        Mat2 {
            e: [[a11, a12], [a21, a22]],
        }
    }

    pub fn identity() -> Self {
        Mat2::new(T::one(), T::zero(), T::zero(), T::one())
    }

    pub fn zero() -> Self {
        Mat2::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn det(&self) -> T {
        self.e[0][0] * self.e[1][1] - self.e[0][1] * self.e[1][0]
    }

    pub fn trace(&self) -> T {
        self.e[0][0] + self.e[1][1]
    }

    pub fn scale(&self, r: T) -> Self {
        Mat2::new(
            self.e[0][0] * r,
            self.e[0][1] * r,
            self.e[1][0] * r,
            self.e[1][1] * r,
        )
    }

    pub fn mul_vec(&self, v: &Vec2<T>) -> Vec2<T> {
        Vec2::new(
            self.e[0][0] * v.x1 + self.e[0][1] * v.x2,
            self.e[1][0] * v.x1 + self.e[1][1] * v.x2,
        )
    }

    /// Inverse via the adjugate; exact up to the division by `det`.
    pub fn inverse(&self) -> Self {
        let d = self.det();
        Mat2::new(
            self.e[1][1] / d,
            -self.e[0][1] / d,
            -self.e[1][0] / d,
            self.e[0][0] / d,
        )
    }

    /// Frobenius norm `(Tr A*A)^{1/2}`.
    pub fn frobenius(&self) -> T::Real {
        let mut s = <T::Real as num_traits::Zero>::zero();
        for row in &self.e {
            for &v in row {
                let m = v.modulus();
                s = s + m * m;
            }
        }
        s.sqrt()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }
}

impl<T: Scalar> Mul for Mat2<T> {
    type Output = Mat2<T>;
    fn mul(self, rhs: Mat2<T>) -> Mat2<T> {
        let a = &self.e;
        let b = &rhs.e;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl<T: Scalar> Add for Mat2<T> {
    type Output = Mat2<T>;
    fn add(self, rhs: Mat2<T>) -> Mat2<T> {
        Mat2::new(
            self.e[0][0] + rhs.e[0][0],
            self.e[0][1] + rhs.e[0][1],
            self.e[1][0] + rhs.e[1][0],
            self.e[1][1] + rhs.e[1][1],
        )
    }
}

impl<T: Scalar> Sub for Mat2<T> {
    type Output = Mat2<T>;
    fn sub(self, rhs: Mat2<T>) -> Mat2<T> {
        Mat2::new(
            self.e[0][0] - rhs.e[0][0],
            self.e[0][1] - rhs.e[0][1],
            self.e[1][0] - rhs.e[1][0],
            self.e[1][1] - rhs.e[1][1],
        )
    }
}

impl<T: Scalar> Neg for Mat2<T> {
    type Output = Mat2<T>;
    fn neg(self) -> Mat2<T> {
        Mat2::new(
            -self.e[0][0],
            -self.e[0][1],
            -self.e[1][0],
            -self.e[1][1],
        )
    }
}
