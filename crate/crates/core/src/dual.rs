//! Forward-mode dual numbers and the scalar abstraction used by every field.
//!
//! A [`Dual<T>`] carries `re + eps·ε` with `ε² = 0`. Nesting
//! (`Dual<Dual<f64>>`) gives mixed second derivatives. All model fields are
//! written once against [`Real`] and evaluated at `f64`, [`D1`] or [`D2`].
//!
//! User-supplied fields that only exist as `f64` closures still participate:
//! [`Real::lift_fd`] propagates a closure through the dual levels by central
//! differences, so the derivative machinery does not care which path produced
//! the numbers.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// First-order dual number over `f64`.
pub type D1 = Dual<f64>;
/// Second-order (nested) dual number.
pub type D2 = Dual<Dual<f64>>;

/// Scalar field element usable by the generic geometry code.
pub trait Real:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    /// Primal value, stripping every infinitesimal part.
    fn re(&self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn atan2(self, x: Self) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }
    fn one() -> Self {
        Self::cst(1.0)
    }
    fn powi(self, n: i32) -> Self {
        let mut acc = Self::one();
        let base = if n < 0 { Self::one() / self } else { self };
        for _ in 0..n.unsigned_abs() {
            acc *= base;
        }
        acc
    }
    fn abs(self) -> Self {
        if self.re() < 0.0 {
            -self
        } else {
            self
        }
    }
    fn recip(self) -> Self {
        Self::one() / self
    }

    /// Evaluates an `f64` closure at `x`, filling infinitesimal parts by
    /// central differences with base step `h`.
    fn lift_fd(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[Self], h: f64) -> Vec<Self>;
}

impl Real for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn re(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn lift_fd(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[Self], _h: f64) -> Vec<Self> {
        f(x)
    }
}

/// `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Real> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }

    pub fn constant(re: T) -> Self {
        Dual { re, eps: T::zero() }
    }

    /// Seeds an independent variable with unit tangent.
    pub fn variable(re: T) -> Self {
        Dual { re, eps: T::one() }
    }
}

impl<T: Real> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl<T: Real> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl<T: Real> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl<T: Real> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = T::one() / o.re;
        let q = self.re * inv;
        Dual::new(q, (self.eps - q * o.eps) * inv)
    }
}

impl<T: Real> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<T: Real> Add<f64> for Dual<T> {
    type Output = Self;
    fn add(self, o: f64) -> Self {
        Dual::new(self.re + o, self.eps)
    }
}

impl<T: Real> Sub<f64> for Dual<T> {
    type Output = Self;
    fn sub(self, o: f64) -> Self {
        Dual::new(self.re - o, self.eps)
    }
}

impl<T: Real> Mul<f64> for Dual<T> {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        Dual::new(self.re * o, self.eps * o)
    }
}

impl<T: Real> Div<f64> for Dual<T> {
    type Output = Self;
    fn div(self, o: f64) -> Self {
        Dual::new(self.re / o, self.eps / o)
    }
}

macro_rules! assign_ops {
    ($($tr:ident $m:ident $op:tt),*) => {$(
        impl<T: Real> $tr for Dual<T> {
            fn $m(&mut self, o: Self) {
                *self = *self $op o;
            }
        }
    )*};
}
assign_ops!(AddAssign add_assign +, SubAssign sub_assign -, MulAssign mul_assign *, DivAssign div_assign /);

impl<T: Real> Real for Dual<T> {
    fn cst(v: f64) -> Self {
        Dual::constant(T::cst(v))
    }
    fn re(&self) -> f64 {
        self.re.re()
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Dual::new(s, self.eps / (s * 2.0))
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, self.eps * e)
    }
    fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.eps / self.re)
    }
    fn sin(self) -> Self {
        Dual::new(self.re.sin(), self.eps * self.re.cos())
    }
    fn cos(self) -> Self {
        Dual::new(self.re.cos(), -(self.eps * self.re.sin()))
    }
    fn atan2(self, x: Self) -> Self {
        let r2 = self.re * self.re + x.re * x.re;
        Dual::new(
            self.re.atan2(x.re),
            (x.re * self.eps - self.re * x.eps) / r2,
        )
    }

    fn lift_fd(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[Self], h: f64) -> Vec<Self> {
        let base: Vec<T> = x.iter().map(|d| d.re).collect();
        let dir: Vec<T> = x.iter().map(|d| d.eps).collect();
        let value = T::lift_fd(f, &base, h);
        let dir_scale = dir.iter().fold(0.0f64, |m, d| m.max(d.re().abs()));
        if dir_scale == 0.0 && dir.iter().all(|d| *d == T::zero()) {
            return value.into_iter().map(Dual::constant).collect();
        }
        let base_scale = base.iter().fold(1.0f64, |m, b| m.max(b.re().abs()));
        let step = h * base_scale / dir_scale.max(f64::MIN_POSITIVE);
        let shifted = |sign: f64| -> Vec<T> {
            base.iter()
                .zip(&dir)
                .map(|(b, d)| *b + *d * (sign * step))
                .collect()
        };
        let plus = T::lift_fd(f, &shifted(1.0), h);
        let minus = T::lift_fd(f, &shifted(-1.0), h);
        value
            .into_iter()
            .zip(plus.into_iter().zip(minus))
            .map(|(v, (p, m))| Dual::new(v, (p - m) / (2.0 * step)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivative() {
        // f(x) = x^3 - 2x + 1 at x = 2 -> f' = 10
        let x = D1::variable(2.0);
        let f = x * x * x - x * 2.0 + 1.0;
        assert_eq!(f.re, 5.0);
        assert_eq!(f.eps, 10.0);
    }

    #[test]
    fn nested_second_derivative() {
        // f(x) = exp(2x), f'' = 4 exp(2x)
        let x = D2::new(D1::variable(0.3), D1::constant(1.0));
        let f = (x * 2.0).exp();
        let e = (0.6f64).exp();
        assert!((f.re.re - e).abs() < 1e-15);
        assert!((f.re.eps - 2.0 * e).abs() < 1e-14);
        assert!((f.eps.re - 2.0 * e).abs() < 1e-14);
        assert!((f.eps.eps - 4.0 * e).abs() < 1e-13);
    }

    #[test]
    fn transcendental_rules() {
        let x = D1::variable(0.7);
        assert!((x.sin().eps - 0.7f64.cos()).abs() < 1e-15);
        assert!((x.cos().eps + 0.7f64.sin()).abs() < 1e-15);
        assert!((x.sqrt().eps - 0.5 / 0.7f64.sqrt()).abs() < 1e-15);
        assert!((x.ln().eps - 1.0 / 0.7).abs() < 1e-15);
        let y = D1::constant(0.4);
        let a = x.atan2(y);
        assert!((a.eps - 0.4 / (0.49 + 0.16)).abs() < 1e-14);
    }

    #[test]
    fn lift_fd_matches_dual() {
        let f = |x: &[f64]| vec![x[0] * x[0] * x[1], (x[0] + x[1]).sin()];
        let x = [D1::new(1.2, 1.0), D1::new(-0.4, 0.5)];
        let fd = D1::lift_fd(&f, &x, 6e-6);
        let exact = [x[0] * x[0] * x[1], (x[0] + x[1]).sin()];
        for (a, b) in fd.iter().zip(exact.iter()) {
            assert!((a.re - b.re).abs() < 1e-15);
            assert!((a.eps - b.eps).abs() < 1e-8);
        }
    }

    #[test]
    fn lift_fd_second_order() {
        let f = |x: &[f64]| vec![x[0].powi(3)];
        let x = [D2::new(D1::variable(0.5), D1::constant(1.0))];
        let out = D2::lift_fd(&f, &x, 1e-4);
        assert!((out[0].eps.eps - 3.0).abs() < 1e-5);
    }
}
