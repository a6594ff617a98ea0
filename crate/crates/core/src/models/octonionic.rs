//! Octonionic Hopf fibration `S⁷ → S¹⁵ → S⁸(½)`.
//!
//! A point of `S¹⁵ ⊂ 𝕆 × 𝕆` is `(x, y)` with ambient order
//! `(x₀..x₇, y₀..y₇)`. Fibers are the octonionic lines
//! `L_m = {(u, mu)}` (or `{(nv, v)}` near `x = 0`) cut with the sphere.
//! `π(x, y) = ½(|x|² − |y|², 2yx̄) ∈ S⁸(½)`. There is no principal structure.
//!
//! Frames use the primal values to pick the well-conditioned branch:
//! with `m = yx̄/|x|²` (when `|x| ≥ |y|`)
//! `V = {(eⱼx, m(eⱼx))}` and `H = {(−m̄eᵢ, eᵢ)/√(1+|m|²)}`,
//! both orthonormal since left multiplication by `m` scales norms by `|m|`
//! and has adjoint left multiplication by `m̄`.

use super::algebra::Octonion;
use super::sphere::{base_chart, base_point, AmbientFrame, PushedFrame, RoundCometric, RoundMetric, ScaledRoundMetric, Stereo};
use super::{CanonicalState, DeclaredProperties, ModelSpace, SampleDomain, Submersion};
use crate::dual::Real;
use crate::geometry::{Embedding, FrameField, Geometry, MetricField};
use crate::jet::{smooth, ChartId, SmoothFn};
use std::sync::Arc;

fn halves<S: Real>(y: &[S]) -> (Octonion<S>, Octonion<S>) {
    (Octonion::from_slice(&y[0..8]), Octonion::from_slice(&y[8..16]))
}

fn join<S: Real>(a: Octonion<S>, b: Octonion<S>) -> Vec<S> {
    let mut out = a.to_array().to_vec();
    out.extend_from_slice(&b.to_array());
    out
}

/// `true` when the line is written as `(u, mu)`, chosen on primal values.
fn x_branch<S: Real>(x: &Octonion<S>, y: &Octonion<S>) -> bool {
    x.norm2().re() >= y.norm2().re()
}

/// Slope `m = yx̄/|x|²` of the line through `(x, y)`; the roles swap on the
/// other branch.
fn slope<S: Real>(x: Octonion<S>, y: Octonion<S>) -> Octonion<S> {
    (y * x.conj()).scale(x.norm2().recip())
}

/// Unit tangents to the fiber: seven columns.
pub struct FiberFrame;

impl AmbientFrame for FiberFrame {
    fn count(&self) -> usize {
        7
    }
    fn columns<S: Real>(&self, amb: &[S]) -> Vec<Vec<S>> {
        let (x, y) = halves(amb);
        (1..8)
            .map(|j| {
                let e = Octonion::<S>::basis(j);
                if x_branch(&x, &y) {
                    let u = e * x;
                    join(u, slope(x, y) * u)
                } else {
                    let v = e * y;
                    join(slope(y, x) * v, v)
                }
            })
            .collect()
    }
}

/// Unit horizontal columns: eight, orthogonal to the fiber and the normal.
pub struct TransverseFrame;

impl AmbientFrame for TransverseFrame {
    fn count(&self) -> usize {
        8
    }
    fn columns<S: Real>(&self, amb: &[S]) -> Vec<Vec<S>> {
        let (x, y) = halves(amb);
        let flip = !x_branch(&x, &y);
        let m = if flip { slope(y, x) } else { slope(x, y) };
        let s = (m.norm2() + 1.0).sqrt().recip();
        (0..8)
            .map(|i| {
                let e = Octonion::<S>::basis(i);
                let w = (-(m.conj() * e)).scale(s);
                if flip {
                    join(e.scale(s), w)
                } else {
                    join(w, e.scale(s))
                }
            })
            .collect()
    }
}

/// `n = (|x|² − |y|², 2yx̄)`, a unit vector of `ℝ⁹` on the sphere.
pub fn hopf_vector<S: Real>(amb: &[S]) -> Vec<S> {
    let (x, y) = halves(amb);
    let mut n = vec![x.norm2() - y.norm2()];
    n.extend((y * x.conj()).to_array().iter().map(|&c| c * 2.0));
    n
}

struct OctPi {
    stereo: Arc<Stereo>,
}

impl SmoothFn for OctPi {
    fn shape(&self) -> (usize, usize) {
        (8, 1)
    }
    fn eval<S: Real>(&self, chart: ChartId, u: &[S]) -> Vec<S> {
        base_chart(&hopf_vector(&self.stereo.embed(chart, u)))
    }
}

struct OctPiAmbient {
    stereo: Arc<Stereo>,
}

impl SmoothFn for OctPiAmbient {
    fn shape(&self) -> (usize, usize) {
        (9, 1)
    }
    fn eval<S: Real>(&self, chart: ChartId, u: &[S]) -> Vec<S> {
        hopf_vector(&self.stereo.embed(chart, u)).into_iter().map(|c| c * 0.5).collect()
    }
}

struct OctBaseEmbed;

impl SmoothFn for OctBaseEmbed {
    fn shape(&self) -> (usize, usize) {
        (9, 1)
    }
    fn eval<S: Real>(&self, _: ChartId, b: &[S]) -> Vec<S> {
        base_point(b, 0.5)
    }
}

/// Fiber tangents by central differences of `u ↦ (u, mu)/|(u, mu)|` at
/// `u = x` along `eⱼx`; an independent check of [`FiberFrame`] (`x ≠ 0`).
pub fn fiber_tangents_fd(amb: &[f64], h: f64) -> Vec<Vec<f64>> {
    let (x, y) = halves(amb);
    let m = slope(x, y);
    let point = |u: Octonion<f64>| -> Vec<f64> {
        let v = join(u, m * u);
        let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        v.into_iter().map(|c| c / r).collect()
    };
    (1..8)
        .map(|j| {
            let d = Octonion::<f64>::basis(j) * x;
            let plus = point(x + d.scale(h));
            let minus = point(x - d.scale(h));
            plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        })
        .collect()
}

pub fn octonionic_hopf() -> ModelSpace {
    let stereo = Arc::new(Stereo::new(15));
    let atlas = Arc::new((*stereo).clone().atlas());
    let geometry = Geometry::new(
        atlas,
        MetricField::new(smooth(RoundMetric { n: 15 })),
        FrameField::new(
            smooth(PushedFrame {
                stereo: stereo.clone(),
                frame: TransverseFrame,
            }),
            smooth(PushedFrame {
                stereo: stereo.clone(),
                frame: FiberFrame,
            }),
        ),
    )
    .with_g_star(smooth(RoundCometric { n: 15 }));
    let submersion = Submersion {
        base_dim: 8,
        pi: smooth(OctPi { stereo: stereo.clone() }),
        base_metric: smooth(ScaledRoundMetric { n: 8, radius: 0.5 }),
        pi_ambient: smooth(OctPiAmbient { stereo: stereo.clone() }),
        base_embed: smooth(OctBaseEmbed),
    };
    let locate = |y: &[f64]| stereo.locate(y);
    let axis = |i: usize| {
        let mut v = vec![0.0; 16];
        v[i] = 1.0;
        v
    };
    let one = locate(&axis(0));
    let mut mixed = vec![0.0; 16];
    for (i, c) in mixed.iter_mut().enumerate() {
        *c = if i % 3 == 0 { 0.25 } else { -0.2 } + 0.01 * i as f64;
    }
    let r = mixed.iter().map(|c| c * c).sum::<f64>().sqrt();
    mixed.iter_mut().for_each(|c| *c /= r);
    ModelSpace {
        name: "octonionic_hopf",
        summary: "Octonionic Hopf fibration S⁷ → S¹⁵ → S⁸(½), round S¹⁵; no principal structure",
        geometry,
        submersion: Some(submersion),
        bundle: None,
        declared: DeclaredProperties {
            orthogonal: true,
            v_integrable: true,
            totally_geodesic: true,
            riemannian_foliation: true,
            principal_bundle: false,
        },
        domain: SampleDomain::Sphere,
        covector_scale: 1.0,
        interesting: vec![one.clone(), locate(&axis(8)), locate(&mixed)],
        canonical: CanonicalState {
            x: one,
            // ♯p = (0, e₀) + ½(e₁, 0) at (1, 0); g = 4I at u = 0
            p: {
                let mut p = vec![0.0; 15];
                p[0] = 1.0;
                p[7] = 2.0;
                p
            },
        },
    }
}
