//! Metric, frame and cometric fields.

use super::chart::Point;
use crate::error::{GeoError, Result};
use crate::generic_chart_fn;
use crate::jet::{ChartFn, ChartId, Scalar};
use crate::linalg::Mat;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subspace {
    H,
    V,
}

/// Riemannian metric: chart coordinates to a flattened `n×n` matrix.
#[derive(Clone)]
pub struct MetricField {
    pub g: Arc<dyn ChartFn>,
}

impl MetricField {
    pub fn new(g: Arc<dyn ChartFn>) -> Self {
        MetricField { g }
    }

    pub fn dim(&self) -> usize {
        self.g.shape().0
    }

    pub fn at<S: Scalar>(&self, chart: ChartId, x: &[S]) -> Mat<S> {
        S::call_mat(self.g.as_ref(), chart, x)
    }

    /// Fails unless `g(x)` is symmetric with smallest eigenvalue above `spd_tol`.
    pub fn check_spd(&self, p: &Point, spd_tol: f64) -> Result<Mat<f64>> {
        let g = self.at::<f64>(p.chart, &p.x);
        let scale = g.max_abs().max(1.0);
        let lmin = g.sym_eigenvalues()[0];
        if g.symmetry_defect() > 1e-12 * scale || !(lmin > spd_tol) {
            return Err(GeoError::MetricDegenerate {
                chart: p.chart,
                x: p.x.clone(),
                pivot: lmin,
            });
        }
        Ok(g)
    }

    pub fn inverse_field(&self) -> Arc<dyn ChartFn> {
        Arc::new(InverseMetric { g: self.g.clone() })
    }
}

/// Horizontal frame `X_1..X_k` and declared vertical frame `Z_1..Z_m`,
/// each a flattened `n×k` (`n×m`) matrix of column vectors.
#[derive(Clone)]
pub struct FrameField {
    pub horizontal: Arc<dyn ChartFn>,
    pub vertical: Arc<dyn ChartFn>,
}

impl FrameField {
    pub fn new(horizontal: Arc<dyn ChartFn>, vertical: Arc<dyn ChartFn>) -> Self {
        let (n, _) = horizontal.shape();
        assert_eq!(n, vertical.shape().0, "frame row counts differ");
        FrameField { horizontal, vertical }
    }

    pub fn dim(&self) -> usize {
        self.horizontal.shape().0
    }

    pub fn rank(&self, which: Subspace) -> usize {
        self.field(which).shape().1
    }

    pub fn field(&self, which: Subspace) -> &Arc<dyn ChartFn> {
        match which {
            Subspace::H => &self.horizontal,
            Subspace::V => &self.vertical,
        }
    }

    pub fn at<S: Scalar>(&self, which: Subspace, chart: ChartId, x: &[S]) -> Mat<S> {
        S::call_mat(self.field(which).as_ref(), chart, x)
    }

    /// `[A B]`, the full adapted frame.
    pub fn full_at<S: Scalar>(&self, chart: ChartId, x: &[S]) -> Mat<S> {
        let a = self.at::<S>(Subspace::H, chart, x);
        let b = self.at::<S>(Subspace::V, chart, x);
        let (n, k) = (a.rows(), a.cols());
        Mat::from_fn(n, n, |i, j| if j < k { a[(i, j)] } else { b[(i, j - k)] })
    }

    /// Largest entry of `Aᵀ g A − I` for the selected frame.
    pub fn gram_deviation(&self, metric: &MetricField, which: Subspace, p: &Point) -> f64 {
        let a = self.at::<f64>(which, p.chart, &p.x);
        let g = metric.at::<f64>(p.chart, &p.x);
        let gram = a.transpose().matmul(&g).matmul(&a);
        gram.max_abs_diff(&Mat::identity(a.cols()))
    }

    pub fn check_orthonormal(&self, metric: &MetricField, which: Subspace, p: &Point, tol: f64) -> Result<()> {
        let dev = self.gram_deviation(metric, which, p);
        if dev > tol {
            return Err(GeoError::FrameNotOrthonormal {
                chart: p.chart,
                x: p.x.clone(),
                deviation: dev,
            });
        }
        Ok(())
    }

    /// Largest `|g(X_i, Z_j)|` over frame pairs.
    pub fn cross_gram(&self, metric: &MetricField, p: &Point) -> f64 {
        let a = self.at::<f64>(Subspace::H, p.chart, &p.x);
        let b = self.at::<f64>(Subspace::V, p.chart, &p.x);
        let g = metric.at::<f64>(p.chart, &p.x);
        a.transpose().matmul(&g).matmul(&b).max_abs()
    }
}

/// Symmetric positive semidefinite field on covectors.
#[derive(Clone)]
pub struct CometricField {
    pub s_star: Arc<dyn ChartFn>,
    pub rank: usize,
}

impl CometricField {
    pub fn new(s_star: Arc<dyn ChartFn>, rank: usize) -> Self {
        CometricField { s_star, rank }
    }

    pub fn dim(&self) -> usize {
        self.s_star.shape().0
    }

    pub fn at<S: Scalar>(&self, chart: ChartId, x: &[S]) -> Mat<S> {
        S::call_mat(self.s_star.as_ref(), chart, x)
    }

    /// `(min eigenvalue, numerical rank)` at `p`.
    pub fn spectrum_check(&self, p: &Point, rank_tol: f64) -> (f64, usize) {
        let s = self.at::<f64>(p.chart, &p.x);
        (s.sym_eigenvalues()[0], s.numerical_rank(rank_tol))
    }
}

/// `A Aᵀ` for a frame `A`.
pub struct FrameGram {
    pub frame: Arc<dyn ChartFn>,
}

impl FrameGram {
    fn out_shape(&self) -> (usize, usize) {
        let n = self.frame.shape().0;
        (n, n)
    }

    fn eval_at<S: Scalar>(&self, chart: ChartId, x: &[S]) -> Vec<S> {
        let a = S::call_mat(self.frame.as_ref(), chart, x);
        a.matmul(&a.transpose()).into_data()
    }
}

generic_chart_fn!(FrameGram);

/// `g⁻¹`; a singular metric yields NaN entries, which downstream checks reject.
pub struct InverseMetric {
    pub g: Arc<dyn ChartFn>,
}

impl InverseMetric {
    fn out_shape(&self) -> (usize, usize) {
        self.g.shape()
    }

    fn eval_at<S: Scalar>(&self, chart: ChartId, x: &[S]) -> Vec<S> {
        let g = S::call_mat(self.g.as_ref(), chart, x);
        match g.inverse() {
            Ok(gi) => gi.into_data(),
            Err(_) => vec![S::cst(f64::NAN); g.rows() * g.cols()],
        }
    }
}

generic_chart_fn!(InverseMetric);

/// The `j`-th column of a frame, as a vector field.
pub struct FrameColumn {
    pub frame: Arc<dyn ChartFn>,
    pub j: usize,
}

impl FrameColumn {
    fn out_shape(&self) -> (usize, usize) {
        (self.frame.shape().0, 1)
    }

    fn eval_at<S: Scalar>(&self, chart: ChartId, x: &[S]) -> Vec<S> {
        S::call_mat(self.frame.as_ref(), chart, x).col(self.j)
    }
}

generic_chart_fn!(FrameColumn);

/// Vector field with constant chart components.
pub struct ConstantField {
    pub v: Vec<f64>,
}

impl ConstantField {
    fn out_shape(&self) -> (usize, usize) {
        (self.v.len(), 1)
    }

    fn eval_at<S: Scalar>(&self, _: ChartId, _: &[S]) -> Vec<S> {
        self.v.iter().map(|&c| S::cst(c)).collect()
    }
}

generic_chart_fn!(ConstantField);
