//! Coordinate manifolds with a metric and a declared split `TM = H ⊕ V`.

pub mod chart;
pub mod fields;
pub mod ops;
pub mod split;

pub use chart::{Atlas, Chart, CotangentVec, Embedding, Guard, IdentityEmbedding, Point, TangentVec, Transition};
pub use fields::{CometricField, ConstantField, FrameColumn, FrameField, FrameGram, InverseMetric, MetricField, Subspace};
pub use ops::{
    cocurvature, cometric_from_frame, curvature, lie_bracket, project, sharp, sharp_sub, tensor_curvature,
};
pub use split::{christoffel_from, split_at, split_jet, Extension, Split, SplitJet, VJet};

use crate::error::Result;
use crate::jet::{ChartFn, ChartId, Lift, Scalar};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Selects one of the three cometrics `h*`, `v*`, `g*`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hamiltonian {
    H,
    V,
    G,
}

impl Hamiltonian {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "h" | "H" => Some(Hamiltonian::H),
            "v" | "V" => Some(Hamiltonian::V),
            "g" | "G" => Some(Hamiltonian::G),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Hamiltonian::H => "h",
            Hamiltonian::V => "v",
            Hamiltonian::G => "g",
        }
    }
}

/// Everything pointwise geometry needs: atlas, metric, frames and cometrics.
#[derive(Clone)]
pub struct Geometry {
    pub atlas: Arc<Atlas>,
    pub metric: MetricField,
    pub frame: FrameField,
    pub h_star: CometricField,
    pub v_star: CometricField,
    pub g_star: CometricField,
}

impl Geometry {
    /// `h* = AAᵀ`, `v* = BBᵀ`, `g* = g⁻¹`.
    pub fn new(atlas: Arc<Atlas>, metric: MetricField, frame: FrameField) -> Self {
        let k = frame.rank(Subspace::H);
        let m = frame.rank(Subspace::V);
        let n = metric.dim();
        let h_star = CometricField::new(Arc::new(FrameGram { frame: frame.horizontal.clone() }), k);
        let v_star = CometricField::new(Arc::new(FrameGram { frame: frame.vertical.clone() }), m);
        let g_star = CometricField::new(metric.inverse_field(), n);
        Geometry { atlas, metric, frame, h_star, v_star, g_star }
    }

    /// Replaces `g*` with a closed form.
    pub fn with_g_star(mut self, g_star: Arc<dyn ChartFn>) -> Self {
        self.g_star = CometricField::new(g_star, self.metric.dim());
        self
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn cometric(&self, which: Hamiltonian) -> &CometricField {
        match which {
            Hamiltonian::H => &self.h_star,
            Hamiltonian::V => &self.v_star,
            Hamiltonian::G => &self.g_star,
        }
    }

    pub fn split<S: Scalar>(&self, chart: ChartId, x: &[S]) -> Result<Split<S>> {
        split_at(&self.metric, &self.frame, chart, x)
    }

    pub fn split_jet<S: Lift>(&self, chart: ChartId, x: &[S]) -> Result<SplitJet<S>> {
        split_jet(&self.metric, &self.frame, chart, x)
    }

    pub fn jet_at(&self, p: &Point) -> Result<SplitJet<f64>> {
        self.atlas.check_point(p)?;
        self.split_jet::<f64>(p.chart, &p.x)
    }
}
