//! Quaternions and octonions over any [`Real`] scalar.
//!
//! Octonions are Cayley–Dickson pairs of quaternions with
//! `(a,b)(c,d) = (ac − d̄b, da + bc̄)`. With `eᵢ` the `i`-th basis vector,
//! this convention gives `e₁e₂ = e₃`, `e₁e₄ = e₅`, `e₂e₄ = e₆`, `e₃e₄ = e₇`.

use crate::dual::Real;
use std::ops::{Add, Mul, Neg, Sub};

/// `w + x i + y j + z k` with `i² = j² = k² = ijk = −1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quaternion<S> {
    pub w: S,
    pub x: S,
    pub y: S,
    pub z: S,
}

impl<S: Real> Quaternion<S> {
    pub fn new(w: S, x: S, y: S, z: S) -> Self {
        Quaternion { w, x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(S::zero(), S::zero(), S::zero(), S::zero())
    }

    pub fn one() -> Self {
        Self::new(S::one(), S::zero(), S::zero(), S::zero())
    }

    pub fn i() -> Self {
        Self::new(S::zero(), S::one(), S::zero(), S::zero())
    }

    pub fn j() -> Self {
        Self::new(S::zero(), S::zero(), S::one(), S::zero())
    }

    pub fn k() -> Self {
        Self::new(S::zero(), S::zero(), S::zero(), S::one())
    }

    pub fn from_slice(c: &[S]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }

    pub fn to_array(self) -> [S; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn conj(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm2(self) -> S {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn scale(self, s: S) -> Self {
        Self::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    /// `cos θ + i sin θ`.
    pub fn exp_i(theta: S) -> Self {
        Self::new(theta.cos(), theta.sin(), S::zero(), S::zero())
    }
}

impl<S: Real> Add for Quaternion<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<S: Real> Sub for Quaternion<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<S: Real> Neg for Quaternion<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl<S: Real> Mul for Quaternion<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (self, o);
        Self::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}

/// Cayley–Dickson pair `(a, b)` of quaternions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Octonion<S> {
    pub a: Quaternion<S>,
    pub b: Quaternion<S>,
}

impl<S: Real> Octonion<S> {
    pub fn new(a: Quaternion<S>, b: Quaternion<S>) -> Self {
        Octonion { a, b }
    }

    pub fn zero() -> Self {
        Self::new(Quaternion::zero(), Quaternion::zero())
    }

    pub fn one() -> Self {
        Self::new(Quaternion::one(), Quaternion::zero())
    }

    /// Basis vector `e_i`, `i ∈ 0..8`, with `e₀ = 1`.
    pub fn basis(i: usize) -> Self {
        let mut c = [S::zero(); 8];
        c[i] = S::one();
        Self::from_slice(&c)
    }

    pub fn from_slice(c: &[S]) -> Self {
        Self::new(Quaternion::from_slice(&c[0..4]), Quaternion::from_slice(&c[4..8]))
    }

    pub fn to_array(self) -> [S; 8] {
        let a = self.a.to_array();
        let b = self.b.to_array();
        [a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3]]
    }

    pub fn conj(self) -> Self {
        Self::new(self.a.conj(), -self.b)
    }

    pub fn norm2(self) -> S {
        self.a.norm2() + self.b.norm2()
    }

    pub fn re(self) -> S {
        self.a.w
    }

    pub fn scale(self, s: S) -> Self {
        Self::new(self.a.scale(s), self.b.scale(s))
    }

    /// Euclidean inner product of the 8 components.
    pub fn dot(self, o: Self) -> S {
        let (u, v) = (self.to_array(), o.to_array());
        let mut acc = S::zero();
        for i in 0..8 {
            acc += u[i] * v[i];
        }
        acc
    }
}

impl<S: Real> Add for Octonion<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.a + o.a, self.b + o.b)
    }
}

impl<S: Real> Sub for Octonion<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.a - o.a, self.b - o.b)
    }
}

impl<S: Real> Neg for Octonion<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.a, -self.b)
    }
}

impl<S: Real> Mul for Octonion<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b, c, d) = (self.a, self.b, o.a, o.b);
        Self::new(a * c - d.conj() * b, d * a + b * c.conj())
    }
}

pub fn octonion_multiply<S: Real>(u: Octonion<S>, v: Octonion<S>) -> Octonion<S> {
    u * v
}

pub fn quaternion_multiply<S: Real>(u: Quaternion<S>, v: Quaternion<S>) -> Quaternion<S> {
    u * v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: usize) -> Octonion<f64> {
        Octonion::basis(i)
    }

    #[test]
    fn quaternion_units() {
        let (i, j, k) = (Quaternion::<f64>::i(), Quaternion::j(), Quaternion::k());
        assert_eq!(i * j, k);
        assert_eq!(j * k, i);
        assert_eq!(k * i, j);
        assert_eq!(i * j * k, -Quaternion::one());
    }

    #[test]
    fn octonion_unit_is_identity() {
        let v = Octonion::from_slice(&[0.3, -1.0, 2.0, 0.5, -0.7, 0.1, 0.0, 4.0]);
        assert_eq!(Octonion::one() * v, v);
        assert_eq!(v * Octonion::one(), v);
    }

    #[test]
    fn octonion_table_records_convention() {
        assert_eq!(e(1) * e(2), e(3));
        assert_eq!(e(1) * e(4), e(5));
        assert_eq!(e(2) * e(4), e(6));
        assert_eq!(e(3) * e(4), e(7));
        for i in 1..8 {
            assert_eq!(e(i) * e(i), -e(0));
        }
    }

    #[test]
    fn octonions_are_not_associative() {
        // witness triple (e1, e2, e4)
        let lhs = (e(1) * e(2)) * e(4);
        let rhs = e(1) * (e(2) * e(4));
        assert_eq!(lhs, e(7));
        assert_eq!(rhs, -e(7));
    }
}
