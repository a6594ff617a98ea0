//! Unit spheres `Sᴺ ⊂ ℝᴺ⁺¹` with a pair of stereographic charts.
//!
//! Chart `σ ∈ {+1, −1}` (ids 0 and 1) projects from `−σe₀`:
//! `ψ_σ(u) = (σ(1−|u|²), 2u)/(1+|u|²)`. Both charts share the transition
//! `u ↦ u/|u|²`. An optional rotation `R` moves the poles, which gives a
//! second atlas for chart-invariance tests.

use crate::dual::Real;
use crate::geometry::{Atlas, Chart, Embedding, Guard, Point, Transition};
use crate::jet::{smooth, ChartId, SmoothFn};
use crate::linalg::Mat;
use std::sync::Arc;

/// Charts switch beyond this radius; the image lands inside radius `1/SWITCH`.
pub const SWITCH_RADIUS: f64 = 2.0;
pub const SAFE_RADIUS: f64 = 10.0;

#[derive(Clone, Debug)]
pub struct Stereo {
    /// Sphere dimension `N`.
    pub n: usize,
    /// Ambient rotation applied after `ψ`.
    pub rot: Option<Mat<f64>>,
}

pub fn sigma(chart: ChartId) -> f64 {
    if chart == 0 {
        1.0
    } else {
        -1.0
    }
}

impl Stereo {
    pub fn new(n: usize) -> Self {
        Stereo { n, rot: None }
    }

    pub fn rotated(n: usize, rot: Mat<f64>) -> Self {
        assert_eq!(rot.rows(), n + 1);
        Stereo { n, rot: Some(rot) }
    }

    fn rotate<S: Real>(&self, z: Vec<S>) -> Vec<S> {
        match &self.rot {
            None => z,
            Some(r) => (0..=self.n)
                .map(|i| {
                    let mut acc = S::zero();
                    for (j, &zj) in z.iter().enumerate() {
                        acc += zj * r[(i, j)];
                    }
                    acc
                })
                .collect(),
        }
    }

    fn unrotate<S: Real>(&self, y: &[S]) -> Vec<S> {
        match &self.rot {
            None => y.to_vec(),
            Some(r) => (0..=self.n)
                .map(|i| {
                    let mut acc = S::zero();
                    for (j, &yj) in y.iter().enumerate() {
                        acc += yj * r[(j, i)];
                    }
                    acc
                })
                .collect(),
        }
    }

    /// Ambient point of chart coordinates `u`.
    pub fn embed<S: Real>(&self, chart: ChartId, u: &[S]) -> Vec<S> {
        let s = sigma(chart);
        let r2 = u.iter().fold(S::zero(), |a, &v| a + v * v);
        let d = (r2 + 1.0).recip();
        let mut z = Vec::with_capacity(self.n + 1);
        z.push((S::one() - r2) * d * s);
        z.extend(u.iter().map(|&v| v * d * 2.0));
        self.rotate(z)
    }

    /// Chart coordinates of an ambient point (assumed on the sphere).
    pub fn coords<S: Real>(&self, chart: ChartId, y: &[S]) -> Vec<S> {
        let z = self.unrotate(y);
        let den = (z[0] * sigma(chart) + 1.0).recip();
        z[1..].iter().map(|&v| v * den).collect()
    }

    /// `R·Dψ`, an `(N+1)×N` matrix with orthogonal columns of length `2/(1+|u|²)`.
    pub fn dembed<S: Real>(&self, chart: ChartId, u: &[S]) -> Mat<S> {
        let s = sigma(chart);
        let n = self.n;
        let r2 = u.iter().fold(S::zero(), |a, &v| a + v * v);
        let d = (r2 + 1.0).recip();
        let d2 = d * d;
        let raw = Mat::from_fn(n + 1, n, |i, k| {
            if i == 0 {
                u[k] * d2 * (-4.0 * s)
            } else {
                let diag = if i - 1 == k { d * 2.0 } else { S::zero() };
                diag - u[i - 1] * u[k] * d2 * 4.0
            }
        });
        match &self.rot {
            None => raw,
            Some(_) => {
                let cols: Vec<Vec<S>> = (0..n).map(|k| self.rotate(raw.col(k))).collect();
                Mat::from_cols(n + 1, &cols)
            }
        }
    }

    /// Chart components of an ambient tangent vector `w` at `ψ(u)`.
    pub fn push<S: Real>(&self, chart: ChartId, u: &[S], w: &[S]) -> Vec<S> {
        let r2 = u.iter().fold(S::zero(), |a, &v| a + v * v);
        let inv_l2 = (r2 + 1.0) * (r2 + 1.0) * 0.25;
        let dp = self.dembed(chart, u);
        dp.tr_mul_vec(w).into_iter().map(|c| c * inv_l2).collect()
    }

    pub fn atlas(self) -> Atlas {
        let n = self.n;
        let guard = Guard {
            safe_radius: SAFE_RADIUS,
            switch_radius: Some(SWITCH_RADIUS),
        };
        let inversion = smooth(Inversion { n });
        let charts = (0..2)
            .map(|id| Chart {
                id,
                dim: n,
                guard,
                transitions: vec![Transition {
                    target: 1 - id,
                    forward: inversion.clone(),
                    inverse: inversion.clone(),
                }],
            })
            .collect();
        Atlas {
            charts,
            embedding: Arc::new(self),
        }
    }
}

impl Embedding for Stereo {
    fn ambient_dim(&self) -> usize {
        self.n + 1
    }

    fn embed(&self, chart: ChartId, x: &[f64]) -> Vec<f64> {
        Stereo::embed(self, chart, x)
    }

    fn locate(&self, y: &[f64]) -> Point {
        let z0 = self.unrotate(y)[0];
        let chart = if z0 >= 0.0 { 0 } else { 1 };
        Point::new(chart, self.coords(chart, y))
    }
}

/// `u ↦ u/|u|²`, its own inverse.
pub struct Inversion {
    pub n: usize,
}

impl SmoothFn for Inversion {
    fn shape(&self) -> (usize, usize) {
        (self.n, 1)
    }
    fn eval<S: Real>(&self, _: ChartId, u: &[S]) -> Vec<S> {
        let r2 = u.iter().fold(S::zero(), |a, &v| a + v * v);
        u.iter().map(|&v| v / r2).collect()
    }
}

/// Round metric `4/(1+|u|²)² I`.
pub struct RoundMetric {
    pub n: usize,
}

impl SmoothFn for RoundMetric {
    fn shape(&self) -> (usize, usize) {
        (self.n, self.n)
    }
    fn eval<S: Real>(&self, _: ChartId, u: &[S]) -> Vec<S> {
        conformal_identity(self.n, u, |r2| ((r2 + 1.0) * (r2 + 1.0)).recip() * 4.0)
    }
}

/// Inverse round metric `(1+|u|²)²/4 I`.
pub struct RoundCometric {
    pub n: usize,
}

impl SmoothFn for RoundCometric {
    fn shape(&self) -> (usize, usize) {
        (self.n, self.n)
    }
    fn eval<S: Real>(&self, _: ChartId, u: &[S]) -> Vec<S> {
        conformal_identity(self.n, u, |r2| (r2 + 1.0) * (r2 + 1.0) * 0.25)
    }
}

/// Stereographic metric of a sphere of radius `ρ`: `4ρ²/(1+|b|²)² I`.
pub struct ScaledRoundMetric {
    pub n: usize,
    pub radius: f64,
}

impl SmoothFn for ScaledRoundMetric {
    fn shape(&self) -> (usize, usize) {
        (self.n, self.n)
    }
    fn eval<S: Real>(&self, _: ChartId, u: &[S]) -> Vec<S> {
        let c = 4.0 * self.radius * self.radius;
        conformal_identity(self.n, u, |r2| ((r2 + 1.0) * (r2 + 1.0)).recip() * c)
    }
}

fn conformal_identity<S: Real>(n: usize, u: &[S], f: impl Fn(S) -> S) -> Vec<S> {
    let r2 = u.iter().fold(S::zero(), |a, &v| a + v * v);
    let c = f(r2);
    (0..n * n).map(|i| if i % (n + 1) == 0 { c } else { S::zero() }).collect()
}

/// Frame given by ambient vectors at the embedded point.
pub trait AmbientFrame: Send + Sync {
    fn count(&self) -> usize;
    /// Ambient columns at the unit vector `y`.
    fn columns<S: Real>(&self, y: &[S]) -> Vec<Vec<S>>;
}

/// An [`AmbientFrame`] pushed into stereographic charts.
pub struct PushedFrame<F> {
    pub stereo: Arc<Stereo>,
    pub frame: F,
}

impl<F: AmbientFrame> SmoothFn for PushedFrame<F> {
    fn shape(&self) -> (usize, usize) {
        (self.stereo.n, self.frame.count())
    }
    fn eval<S: Real>(&self, chart: ChartId, u: &[S]) -> Vec<S> {
        let y = self.stereo.embed(chart, u);
        let cols: Vec<Vec<S>> = self
            .frame
            .columns(&y)
            .iter()
            .map(|w| self.stereo.push(chart, u, w))
            .collect();
        Mat::from_cols(self.stereo.n, &cols).into_data()
    }
}

/// Stereographic chart `b = (n₁..n_d)/(1+n₀)` of a unit vector `n`.
pub fn base_chart<S: Real>(nvec: &[S]) -> Vec<S> {
    let den = (nvec[0] + 1.0).recip();
    nvec[1..].iter().map(|&v| v * den).collect()
}

/// Inverse of [`base_chart`] scaled to radius `ρ`.
pub fn base_point<S: Real>(b: &[S], radius: f64) -> Vec<S> {
    let r2 = b.iter().fold(S::zero(), |a, &v| a + v * v);
    let d = (r2 + 1.0).recip();
    let mut out = Vec::with_capacity(b.len() + 1);
    out.push((S::one() - r2) * d * radius);
    out.extend(b.iter().map(|&v| v * d * (2.0 * radius)));
    out
}

/// Rotation by `angle` in the `(i, j)` coordinate plane of `ℝᵐ`.
pub fn plane_rotation(m: usize, i: usize, j: usize, angle: f64) -> Mat<f64> {
    let mut r = Mat::identity(m);
    let (c, s) = (angle.cos(), angle.sin());
    r[(i, i)] = c;
    r[(j, j)] = c;
    r[(i, j)] = -s;
    r[(j, i)] = s;
    r
}
