//! Charts, atlases and coordinate-level points and (co)vectors.

use crate::error::{GeoError, Result};
use crate::jet::{first_partials, ChartFn, ChartId, GuardCheck};
use crate::linalg::{norm, Mat};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Safe region of a chart: the open ball `|x| < safe_radius`. When
/// `switch_radius` is set the integrators leave the chart once `|x|` exceeds it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Guard {
    pub safe_radius: f64,
    pub switch_radius: Option<f64>,
}

impl Guard {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.admits(x, 0.0)
    }

    pub fn needs_switch(&self, x: &[f64]) -> bool {
        self.switch_radius.is_some_and(|r| norm(x) > r)
    }
}

impl GuardCheck for Guard {
    fn admits(&self, x: &[f64], margin: f64) -> bool {
        let r = norm(x);
        r.is_finite() && r + margin < self.safe_radius
    }

    fn describe(&self) -> String {
        match self.switch_radius {
            Some(s) => format!("|x| < {} (switch beyond {})", self.safe_radius, s),
            None => format!("|x| < {}", self.safe_radius),
        }
    }
}

pub struct Transition {
    pub target: ChartId,
    pub forward: Arc<dyn ChartFn>,
    pub inverse: Arc<dyn ChartFn>,
}

pub struct Chart {
    pub id: ChartId,
    pub dim: usize,
    pub guard: Guard,
    pub transitions: Vec<Transition>,
}

/// Chart-invariant placement of the manifold in a Euclidean space.
pub trait Embedding: Send + Sync {
    fn ambient_dim(&self) -> usize;
    fn embed(&self, chart: ChartId, x: &[f64]) -> Vec<f64>;
    /// Best chart coordinates for an ambient point on the manifold.
    fn locate(&self, y: &[f64]) -> Point;
}

pub struct Atlas {
    pub charts: Vec<Chart>,
    pub embedding: Arc<dyn Embedding>,
}

impl fmt::Debug for Atlas {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Atlas")
            .field("charts", &self.charts.len())
            .finish()
    }
}

/// `ℝⁿ` embedded in itself through a single chart.
pub struct IdentityEmbedding {
    pub dim: usize,
}

impl Embedding for IdentityEmbedding {
    fn ambient_dim(&self) -> usize {
        self.dim
    }
    fn embed(&self, _: ChartId, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn locate(&self, y: &[f64]) -> Point {
        Point::new(0, y.to_vec())
    }
}

impl Atlas {
    /// One global chart on `ℝⁿ` guarded by a ball of radius `radius`.
    pub fn euclidean(dim: usize, radius: f64) -> Self {
        Atlas {
            charts: vec![Chart {
                id: 0,
                dim,
                guard: Guard {
                    safe_radius: radius,
                    switch_radius: None,
                },
                transitions: Vec::new(),
            }],
            embedding: Arc::new(IdentityEmbedding { dim }),
        }
    }

    pub fn chart(&self, id: ChartId) -> &Chart {
        &self.charts[id]
    }

    pub fn dim(&self) -> usize {
        self.charts[0].dim
    }

    pub fn transition(&self, from: ChartId, to: ChartId) -> Option<&Transition> {
        self.charts[from].transitions.iter().find(|t| t.target == to)
    }

    pub fn check_point(&self, p: &Point) -> Result<()> {
        let chart = self.chart(p.chart);
        if chart.guard.contains(&p.x) {
            Ok(())
        } else {
            Err(GeoError::OutOfChart {
                chart: p.chart,
                x: p.x.clone(),
                guard: chart.guard.describe(),
            })
        }
    }

    /// Jacobian `∂(to)/∂(from)` of the transition at `x`.
    pub fn transition_jacobian(&self, from: ChartId, to: ChartId, x: &[f64]) -> Option<(Vec<f64>, Mat<f64>)> {
        let tr = self.transition(from, to)?;
        let (value, partials) = first_partials::<f64>(tr.forward.as_ref(), from, x);
        let n = x.len();
        let jac = Mat::from_fn(n, n, |i, k| partials[k][i]);
        Some((value, jac))
    }

    /// The chart to move to when `p` has crossed its chart's switch radius.
    pub fn switch_target(&self, p: &Point) -> Option<ChartId> {
        let chart = self.chart(p.chart);
        if chart.guard.needs_switch(&p.x) {
            chart.transitions.first().map(|t| t.target)
        } else {
            None
        }
    }

    pub fn embed(&self, p: &Point) -> Vec<f64> {
        self.embedding.embed(p.chart, &p.x)
    }

    pub fn locate(&self, y: &[f64]) -> Point {
        self.embedding.locate(y)
    }

    pub fn point_to_chart(&self, p: &Point, target: ChartId) -> Point {
        if p.chart == target {
            return p.clone();
        }
        match self.transition(p.chart, target) {
            Some(t) => Point::new(target, t.forward.eval_f64(p.chart, &p.x)),
            None => {
                let mut q = self.locate(&self.embed(p));
                q.chart = target;
                q
            }
        }
    }

    pub fn tangent_to_chart(&self, v: &TangentVec, target: ChartId) -> TangentVec {
        if v.base.chart == target {
            return v.clone();
        }
        let (y, jac) = self
            .transition_jacobian(v.base.chart, target, &v.base.x)
            .expect("no transition between charts");
        TangentVec::new(Point::new(target, y), jac.mul_vec(&v.v))
    }

    pub fn cotangent_to_chart(&self, p: &CotangentVec, target: ChartId) -> CotangentVec {
        if p.base.chart == target {
            return p.clone();
        }
        let (y, jac) = self
            .transition_jacobian(p.base.chart, target, &p.base.x)
            .expect("no transition between charts");
        // p' = J^{-T} p
        let pt = jac.transpose().solve(&p.p).expect("singular transition");
        CotangentVec::new(Point::new(target, y), pt)
    }

    /// Chart-invariant distance between points (ambient Euclidean).
    pub fn distance(&self, a: &Point, b: &Point) -> f64 {
        crate::linalg::dist(&self.embed(a), &self.embed(b))
    }

    /// `|inverse(forward(x)) − x|`.
    pub fn roundtrip_defect(&self, from: ChartId, to: ChartId, x: &[f64]) -> f64 {
        let tr = self.transition(from, to).expect("no transition");
        let y = tr.forward.eval_f64(from, x);
        let back = tr.inverse.eval_f64(to, &y);
        crate::linalg::dist(&back, x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub chart: ChartId,
    pub x: Vec<f64>,
}

impl Point {
    pub fn new(chart: ChartId, x: Vec<f64>) -> Self {
        Point { chart, x }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVec {
    pub base: Point,
    pub v: Vec<f64>,
}

impl TangentVec {
    pub fn new(base: Point, v: Vec<f64>) -> Self {
        assert_eq!(base.dim(), v.len(), "tangent components must match chart dim");
        TangentVec { base, v }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CotangentVec {
    pub base: Point,
    pub p: Vec<f64>,
}

impl CotangentVec {
    pub fn new(base: Point, p: Vec<f64>) -> Self {
        assert_eq!(base.dim(), p.len(), "covector components must match chart dim");
        CotangentVec { base, p }
    }
}
