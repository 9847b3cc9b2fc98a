//! Symmetric 2×2 matrices with the Frobenius inner product.
//!
//! One-dimensional problems embed their scalar strain in the `xx` slot and
//! leave the other components at zero.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym2<T> {
    pub xx: T,
    pub yy: T,
    pub xy: T,
}

impl<T: Real> Sym2<T> {
    pub fn new(xx: T, yy: T, xy: T) -> Self {
        Sym2 { xx, yy, xy }
    }

    pub fn zero() -> Self {
        Sym2::new(T::zero(), T::zero(), T::zero())
    }

    pub fn identity() -> Self {
        Sym2::new(T::one(), T::one(), T::zero())
    }

    /// Scalar strain of a one-dimensional problem.
    pub fn axial(x: T) -> Self {
        Sym2::new(x, T::zero(), T::zero())
    }

    /// Symmetric part of the outer product `a ⊗ b`.
    pub fn sym_outer(a: [T; 2], b: [T; 2]) -> Self {
        Sym2::new(
            a[0] * b[0],
            a[1] * b[1],
            T::half() * (a[0] * b[1] + a[1] * b[0]),
        )
    }

    pub fn trace(&self) -> T {
        self.xx + self.yy
    }

    /// Frobenius inner product `self : other`.
    pub fn dot(&self, other: &Self) -> T {
        self.xx * other.xx + self.yy * other.yy + (self.xy * other.xy) * T::lit(2.0)
    }

    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, s: T) -> Self {
        Sym2::new(self.xx * s, self.yy * s, self.xy * s)
    }

    /// Spherical part `(tr/2) I`.
    pub fn spherical(&self) -> Self {
        let m = T::half() * self.trace();
        Sym2::new(m, m, T::zero())
    }

    /// Trace-free part.
    pub fn deviator(&self) -> Self {
        *self - self.spherical()
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.yy.is_finite() && self.xy.is_finite()
    }
}

impl<T: Real> Add for Sym2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Sym2::new(self.xx + o.xx, self.yy + o.yy, self.xy + o.xy)
    }
}

impl<T: Real> Sub for Sym2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Sym2::new(self.xx - o.xx, self.yy - o.yy, self.xy - o.xy)
    }
}

impl<T: Real> Neg for Sym2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Sym2::new(-self.xx, -self.yy, -self.xy)
    }
}

impl<T: Real> Mul<T> for Sym2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

impl<T: Real> AddAssign for Sym2<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> SubAssign for Sym2<T> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}
