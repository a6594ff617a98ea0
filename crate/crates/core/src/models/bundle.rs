//! Principal-bundle structure: connection form, group action, fundamental fields.

use crate::geometry::{Point, TangentVec};
use crate::jet::ChartFn;
use std::sync::Arc;

/// A principal `G`-bundle over the model's base with connection form `ω`,
/// `ker ω = H`. Lie-algebra elements are coordinate vectors of length
/// [`group_dim`](PrincipalBundle::group_dim).
pub trait PrincipalBundle: Send + Sync {
    fn group_dim(&self) -> usize;
    /// `ω(v)` for chart components `v` at `p`.
    fn connection_form(&self, p: &Point, v: &[f64]) -> Vec<f64>;
    /// Right action `p · exp^G(a)`.
    fn act(&self, p: &Point, a: &[f64]) -> Point;
    /// Differential of the right action by `exp^G(a)`.
    fn act_tangent(&self, v: &TangentVec, a: &[f64]) -> TangentVec;
    /// Fundamental field `ξ_{e_a}` in chart components.
    fn fundamental_field(&self, a: usize) -> Arc<dyn ChartFn>;
    /// Lie bracket on `𝔤`.
    fn lie_bracket(&self, a: &[f64], b: &[f64]) -> Vec<f64>;
    /// `Ad(exp(a)⁻¹) b`; trivial for abelian groups.
    fn ad_inverse(&self, _a: &[f64], b: &[f64]) -> Vec<f64> {
        b.to_vec()
    }
}
