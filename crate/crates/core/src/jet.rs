//! Differentiation facility.
//!
//! A field is anything implementing [`ChartFn`]: a map from chart
//! coordinates to a flattened matrix, evaluable at the three scalar levels.
//! Built-in fields are written generically ([`SmoothFn`]) and get exact
//! derivatives from dual numbers; closures over `f64` go through
//! [`FiniteDiff`] and get central differences through the same interface.

use crate::dual::{Dual, Real, D1, D2};
use crate::error::{GeoError, Result};
use crate::linalg::Mat;
use std::sync::Arc;

pub type ChartId = usize;

/// Object-safe field on chart coordinates.
pub trait ChartFn: Send + Sync {
    /// Output shape `(rows, cols)`; vectors are `(n, 1)`.
    fn shape(&self) -> (usize, usize);
    fn eval_f64(&self, chart: ChartId, x: &[f64]) -> Vec<f64>;
    fn eval_d1(&self, chart: ChartId, x: &[D1]) -> Vec<D1>;
    fn eval_d2(&self, chart: ChartId, x: &[D2]) -> Vec<D2>;
}

/// Source trait for fields written once for every scalar type.
pub trait SmoothFn: Send + Sync {
    fn shape(&self) -> (usize, usize);
    fn eval<S: Real>(&self, chart: ChartId, x: &[S]) -> Vec<S>;
}

/// Adapts a [`SmoothFn`] to [`ChartFn`] with dual-number derivatives.
pub struct Smooth<T>(pub T);

impl<T: SmoothFn> ChartFn for Smooth<T> {
    fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }
    fn eval_f64(&self, chart: ChartId, x: &[f64]) -> Vec<f64> {
        self.0.eval(chart, x)
    }
    fn eval_d1(&self, chart: ChartId, x: &[D1]) -> Vec<D1> {
        self.0.eval(chart, x)
    }
    fn eval_d2(&self, chart: ChartId, x: &[D2]) -> Vec<D2> {
        self.0.eval(chart, x)
    }
}

pub fn smooth<T: SmoothFn + 'static>(f: T) -> Arc<dyn ChartFn> {
    Arc::new(Smooth(f))
}

type Closure = dyn Fn(ChartId, &[f64]) -> Vec<f64> + Send + Sync;

/// A field known only as an `f64` closure; derivatives by central differences.
pub struct FiniteDiff {
    shape: (usize, usize),
    step: f64,
    f: Box<Closure>,
}

impl FiniteDiff {
    /// Step `cbrt(machine eps)`, scaled per coordinate by `max(1, |x|)`.
    pub fn new(
        shape: (usize, usize),
        f: impl Fn(ChartId, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        FiniteDiff {
            shape,
            step: f64::EPSILON.cbrt(),
            f: Box::new(f),
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }
}

impl ChartFn for FiniteDiff {
    fn shape(&self) -> (usize, usize) {
        self.shape
    }
    fn eval_f64(&self, chart: ChartId, x: &[f64]) -> Vec<f64> {
        (self.f)(chart, x)
    }
    fn eval_d1(&self, chart: ChartId, x: &[D1]) -> Vec<D1> {
        D1::lift_fd(&|y: &[f64]| (self.f)(chart, y), x, self.step)
    }
    fn eval_d2(&self, chart: ChartId, x: &[D2]) -> Vec<D2> {
        // nested differences need a larger step to stay above roundoff
        D2::lift_fd(&|y: &[f64]| (self.f)(chart, y), x, self.step.sqrt() * 1e-2)
    }
}

/// Forces central differences on any field, discarding its exact path.
pub struct ForceFd {
    inner: Arc<dyn ChartFn>,
    step: f64,
}

impl ForceFd {
    pub fn new(inner: Arc<dyn ChartFn>) -> Self {
        ForceFd {
            inner,
            step: f64::EPSILON.cbrt(),
        }
    }
}

impl ChartFn for ForceFd {
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }
    fn eval_f64(&self, chart: ChartId, x: &[f64]) -> Vec<f64> {
        self.inner.eval_f64(chart, x)
    }
    fn eval_d1(&self, chart: ChartId, x: &[D1]) -> Vec<D1> {
        D1::lift_fd(&|y: &[f64]| self.inner.eval_f64(chart, y), x, self.step)
    }
    fn eval_d2(&self, chart: ChartId, x: &[D2]) -> Vec<D2> {
        D2::lift_fd(
            &|y: &[f64]| self.inner.eval_f64(chart, y),
            x,
            self.step.sqrt() * 1e-2,
        )
    }
}

/// Scalar types at which a [`ChartFn`] can be evaluated.
pub trait Scalar: Real {
    fn call(f: &dyn ChartFn, chart: ChartId, x: &[Self]) -> Vec<Self>;

    fn call_mat(f: &dyn ChartFn, chart: ChartId, x: &[Self]) -> Mat<Self> {
        let (r, c) = f.shape();
        Mat::from_vec(r, c, Self::call(f, chart, x))
    }

    /// Value and derivative of `f` along `dir`. Exact below the top level;
    /// the top level falls back to central differences.
    fn deriv(f: &dyn ChartFn, chart: ChartId, x: &[Self], dir: &[Self]) -> (Vec<Self>, Vec<Self>);
}

impl Scalar for f64 {
    fn call(f: &dyn ChartFn, chart: ChartId, x: &[f64]) -> Vec<f64> {
        f.eval_f64(chart, x)
    }
    fn deriv(f: &dyn ChartFn, chart: ChartId, x: &[f64], dir: &[f64]) -> (Vec<f64>, Vec<f64>) {
        directional::<f64>(f, chart, x, dir)
    }
}

impl Scalar for D1 {
    fn call(f: &dyn ChartFn, chart: ChartId, x: &[D1]) -> Vec<D1> {
        f.eval_d1(chart, x)
    }
    fn deriv(f: &dyn ChartFn, chart: ChartId, x: &[D1], dir: &[D1]) -> (Vec<D1>, Vec<D1>) {
        directional::<D1>(f, chart, x, dir)
    }
}

impl Scalar for D2 {
    fn call(f: &dyn ChartFn, chart: ChartId, x: &[D2]) -> Vec<D2> {
        f.eval_d2(chart, x)
    }
    fn deriv(f: &dyn ChartFn, chart: ChartId, x: &[D2], dir: &[D2]) -> (Vec<D2>, Vec<D2>) {
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.re().abs()));
        let dn = dir.iter().fold(0.0f64, |m, v| m.max(v.re().abs()));
        let value = f.eval_d2(chart, x);
        if dn == 0.0 {
            let zero = vec![D2::zero(); value.len()];
            return (value, zero);
        }
        let h = 1e-5 * scale / dn;
        let at = |s: f64| -> Vec<D2> {
            let y: Vec<D2> = x.iter().zip(dir).map(|(&a, &d)| a + d * s).collect();
            f.eval_d2(chart, &y)
        };
        let (p, m) = (at(h), at(-h));
        let d = p.into_iter().zip(m).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        (value, d)
    }
}

/// Implements [`ChartFn`] for a type with `out_shape()` and a generic
/// `eval_at::<S: Scalar>(chart, x)`.
#[macro_export]
macro_rules! generic_chart_fn {
    ($ty:ty) => {
        impl $crate::jet::ChartFn for $ty {
            fn shape(&self) -> (usize, usize) {
                self.out_shape()
            }
            fn eval_f64(&self, c: $crate::jet::ChartId, x: &[f64]) -> Vec<f64> {
                self.eval_at(c, x)
            }
            fn eval_d1(&self, c: $crate::jet::ChartId, x: &[$crate::dual::D1]) -> Vec<$crate::dual::D1> {
                self.eval_at(c, x)
            }
            fn eval_d2(&self, c: $crate::jet::ChartId, x: &[$crate::dual::D2]) -> Vec<$crate::dual::D2> {
                self.eval_at(c, x)
            }
        }
    };
}

/// Scalar levels that admit one more level of differentiation.
pub trait Lift: Scalar {
    type Up: Scalar;
    fn seed(v: Self, d: Self) -> Self::Up;
    fn value(u: Self::Up) -> Self;
    fn tangent(u: Self::Up) -> Self;
}

impl Lift for f64 {
    type Up = D1;
    fn seed(v: f64, d: f64) -> D1 {
        Dual::new(v, d)
    }
    fn value(u: D1) -> f64 {
        u.re
    }
    fn tangent(u: D1) -> f64 {
        u.eps
    }
}

impl Lift for D1 {
    type Up = D2;
    fn seed(v: D1, d: D1) -> D2 {
        Dual::new(v, d)
    }
    fn value(u: D2) -> D1 {
        u.re
    }
    fn tangent(u: D2) -> D1 {
        u.eps
    }
}

/// Point `x + ε·dir` one level up.
pub fn seeded<S: Lift>(x: &[S], dir: &[S]) -> Vec<S::Up> {
    x.iter().zip(dir).map(|(&v, &d)| S::seed(v, d)).collect()
}

pub fn seeded_axis<S: Lift>(x: &[S], axis: usize) -> Vec<S::Up> {
    x.iter()
        .enumerate()
        .map(|(i, &v)| S::seed(v, if i == axis { S::one() } else { S::zero() }))
        .collect()
}

/// Value and all first partials of a field at level `S`.
/// `partials[k]` is `∂_k f` flattened like the value.
pub fn first_partials<S: Lift>(f: &dyn ChartFn, chart: ChartId, x: &[S]) -> (Vec<S>, Vec<Vec<S>>) {
    let mut value = Vec::new();
    let mut partials = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        let out = S::Up::call(f, chart, &seeded_axis(x, k));
        if k == 0 {
            value = out.iter().map(|&u| S::value(u)).collect();
        }
        partials.push(out.into_iter().map(S::tangent).collect());
    }
    if x.is_empty() {
        value = S::call(f, chart, x);
    }
    (value, partials)
}

/// Directional derivative `Df(x)·dir` at level `S`.
pub fn directional<S: Lift>(f: &dyn ChartFn, chart: ChartId, x: &[S], dir: &[S]) -> (Vec<S>, Vec<S>) {
    let out = S::Up::call(f, chart, &seeded(x, dir));
    (
        out.iter().map(|&u| S::value(u)).collect(),
        out.into_iter().map(S::tangent).collect(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DiffMode {
    /// Dual numbers (falls back to differences inside closure-backed fields).
    Exact,
    /// Central differences around the `f64` evaluation.
    CentralDifference,
}

#[derive(Clone, Copy, Debug)]
pub struct JetRequest {
    pub order: usize,
    pub mode: DiffMode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JetResult {
    pub value: Vec<f64>,
    /// `first[k][a]` = `∂_k f_a`.
    pub first: Vec<Vec<f64>>,
    /// `second[k][l][a]` = `∂_k ∂_l f_a`, present for order 2.
    pub second: Option<Vec<Vec<Vec<f64>>>>,
}

impl JetResult {
    /// Largest `|∂_k∂_l f − ∂_l∂_k f|`.
    pub fn mixed_symmetry_defect(&self) -> f64 {
        let Some(h) = &self.second else { return 0.0 };
        let mut worst = 0.0f64;
        for k in 0..h.len() {
            for l in 0..k {
                for a in 0..h[k][l].len() {
                    worst = worst.max((h[k][l][a] - h[l][k][a]).abs());
                }
            }
        }
        worst
    }
}

/// Guard used when differentiating: a ball of admissible coordinates.
pub trait GuardCheck {
    fn admits(&self, x: &[f64], margin: f64) -> bool;
    fn describe(&self) -> String;
}

pub fn jet(
    f: &dyn ChartFn,
    chart: ChartId,
    x: &[f64],
    req: JetRequest,
    guard: &dyn GuardCheck,
) -> Result<JetResult> {
    if req.order == 0 || req.order > 2 {
        return Err(GeoError::DifferentiationError(format!(
            "jet order {} unsupported",
            req.order
        )));
    }
    let h = f64::EPSILON.cbrt();
    let margin = h * x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if !guard.admits(x, margin) {
        return Err(GeoError::OutOfChart {
            chart,
            x: x.to_vec(),
            guard: guard.describe(),
        });
    }
    let n = x.len();
    let value = f.eval_f64(chart, x);
    let first: Vec<Vec<f64>> = match req.mode {
        DiffMode::Exact => first_partials::<f64>(f, chart, x).1,
        DiffMode::CentralDifference => (0..n)
            .map(|k| {
                let step = h * x[k].abs().max(1.0);
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[k] += step;
                xm[k] -= step;
                let fp = f.eval_f64(chart, &xp);
                let fm = f.eval_f64(chart, &xm);
                fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * step)).collect()
            })
            .collect(),
    };
    let second = if req.order == 2 {
        let mut hess = vec![vec![Vec::new(); n]; n];
        match req.mode {
            DiffMode::Exact => {
                for k in 0..n {
                    for l in 0..n {
                        let xd: Vec<D2> = (0..n)
                            .map(|i| {
                                Dual::new(
                                    Dual::new(x[i], if i == l { 1.0 } else { 0.0 }),
                                    Dual::constant(if i == k { 1.0 } else { 0.0 }),
                                )
                            })
                            .collect();
                        hess[k][l] = f.eval_d2(chart, &xd).into_iter().map(|v| v.eps.eps).collect();
                    }
                }
            }
            DiffMode::CentralDifference => {
                let hh = f64::EPSILON.powf(0.25);
                for k in 0..n {
                    for l in 0..n {
                        let sk = hh * x[k].abs().max(1.0);
                        let sl = hh * x[l].abs().max(1.0);
                        let at = |a: f64, b: f64| {
                            let mut y = x.to_vec();
                            y[k] += a;
                            y[l] += b;
                            f.eval_f64(chart, &y)
                        };
                        let pp = at(sk, sl);
                        let pm = at(sk, -sl);
                        let mp = at(-sk, sl);
                        let mm = at(-sk, -sl);
                        hess[k][l] = (0..value.len())
                            .map(|a| (pp[a] - pm[a] - mp[a] + mm[a]) / (4.0 * sk * sl))
                            .collect();
                    }
                }
            }
        }
        Some(hess)
    } else {
        None
    };
    let all_finite = first.iter().flatten().all(|v| v.is_finite())
        && second
            .as_ref()
            .map_or(true, |s| s.iter().flatten().flatten().all(|v| v.is_finite()));
    if !all_finite {
        return Err(GeoError::DifferentiationError(format!(
            "non-finite derivative at chart {chart} x={x:?}"
        )));
    }
    Ok(JetResult { value, first, second })
}

/// Largest disagreement between dual-number and central-difference first partials.
pub fn cross_check_first(f: &dyn ChartFn, chart: ChartId, x: &[f64], guard: &dyn GuardCheck) -> Result<f64> {
    let exact = jet(f, chart, x, JetRequest { order: 1, mode: DiffMode::Exact }, guard)?;
    let fd = jet(
        f,
        chart,
        x,
        JetRequest {
            order: 1,
            mode: DiffMode::CentralDifference,
        },
        guard,
    )?;
    let mut worst = 0.0f64;
    for (a, b) in exact.first.iter().flatten().zip(fd.first.iter().flatten()) {
        worst = worst.max((a - b).abs() / a.abs().max(1.0));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Everywhere;
    impl GuardCheck for Everywhere {
        fn admits(&self, _: &[f64], _: f64) -> bool {
            true
        }
        fn describe(&self) -> String {
            "everywhere".into()
        }
    }

    struct Square;
    impl SmoothFn for Square {
        fn shape(&self) -> (usize, usize) {
            (1, 1)
        }
        fn eval<S: Real>(&self, _: ChartId, x: &[S]) -> Vec<S> {
            vec![x[0] * x[0] + x[0] * x[1] * x[1]]
        }
    }

    #[test]
    fn quadratic_first_partial() {
        let f = Smooth(Square);
        let req = JetRequest { order: 1, mode: DiffMode::Exact };
        let j = jet(&f, 0, &[3.0, 0.0], req, &Everywhere).unwrap();
        assert_eq!(j.first[0][0], 6.0);
    }

    #[test]
    fn constant_field_has_zero_derivatives() {
        let f = FiniteDiff::new((2, 1), |_, _| vec![4.0, -1.0]);
        let req = JetRequest { order: 2, mode: DiffMode::Exact };
        let j = jet(&f, 0, &[0.2, 0.3, 0.4], req, &Everywhere).unwrap();
        assert!(j.first.iter().flatten().all(|v| *v == 0.0));
        assert!(j.second.unwrap().iter().flatten().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn hessian_symmetry_both_modes() {
        let f = Smooth(Square);
        for mode in [DiffMode::Exact, DiffMode::CentralDifference] {
            let j = jet(&f, 0, &[0.7, -1.1], JetRequest { order: 2, mode }, &Everywhere).unwrap();
            assert!(j.mixed_symmetry_defect() < 1e-6);
            let h = j.second.as_ref().unwrap();
            // ∂0∂1 (x0 x1^2) = 2 x1
            assert!((h[0][1][0] + 2.2).abs() < 1e-5);
        }
    }

    #[test]
    fn exact_and_fd_agree() {
        let f = Smooth(Square);
        let d = cross_check_first(&f, 0, &[1.3, 0.4], &Everywhere).unwrap();
        assert!(d < 1e-7);
    }

    #[test]
    fn guard_violation_is_out_of_chart() {
        struct Ball;
        impl GuardCheck for Ball {
            fn admits(&self, x: &[f64], margin: f64) -> bool {
                x.iter().map(|v| v * v).sum::<f64>().sqrt() + margin < 1.0
            }
            fn describe(&self) -> String {
                "|x| < 1".into()
            }
        }
        let f = Smooth(Square);
        let err = jet(&f, 0, &[2.0, 0.0], JetRequest { order: 1, mode: DiffMode::Exact }, &Ball);
        assert!(matches!(err, Err(GeoError::OutOfChart { .. })));
    }
}
