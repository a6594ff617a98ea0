//! Hopf fibration `S¹ → S³ → S²(½)` as a principal `U(1)`-bundle.
//!
//! `S³` is the unit quaternions `q = (w, x, y, z)`; the group acts on the
//! right by `e^{iθ}`. `V = span(q·i)`, `H = span(q·j, q·k)`,
//! `π(q) = ½ Im(q i q̄) ∈ S²(½)` and `ω(v) = ⟨q̄v, i⟩`.

use super::algebra::Quaternion;
use super::bundle::PrincipalBundle;
use super::sphere::{base_chart, base_point, AmbientFrame, PushedFrame, RoundCometric, RoundMetric, ScaledRoundMetric, Stereo};
use super::{CanonicalState, DeclaredProperties, ModelSpace, SampleDomain, Submersion};
use crate::dual::Real;
use crate::geometry::{FrameField, Geometry, MetricField, Point, TangentVec};
use crate::jet::{smooth, ChartFn, ChartId, SmoothFn};
use crate::linalg::Mat;
use std::sync::Arc;

/// Right-multiplication frames `q·u` for the listed imaginary units.
pub struct RightUnits {
    units: Vec<usize>,
}

fn unit<S: Real>(i: usize) -> Quaternion<S> {
    match i {
        1 => Quaternion::i(),
        2 => Quaternion::j(),
        _ => Quaternion::k(),
    }
}

impl AmbientFrame for RightUnits {
    fn count(&self) -> usize {
        self.units.len()
    }
    fn columns<S: Real>(&self, y: &[S]) -> Vec<Vec<S>> {
        let q = Quaternion::from_slice(y);
        self.units.iter().map(|&u| (q * unit::<S>(u)).to_array().to_vec()).collect()
    }
}

/// Unit vector `q i q̄` (imaginary part).
fn hopf_unit<S: Real>(y: &[S]) -> [S; 3] {
    let q = Quaternion::from_slice(y);
    let r = q * Quaternion::i() * q.conj();
    [r.x, r.y, r.z]
}

/// `π` into the base chart `b = (n₁, n₂)/(1 + n₃)` after reordering so the
/// chart pole sits at `n₃ = −1`.
struct HopfPi {
    stereo: Arc<Stereo>,
}

impl SmoothFn for HopfPi {
    fn shape(&self) -> (usize, usize) {
        (2, 1)
    }
    fn eval<S: Real>(&self, chart: ChartId, u: &[S]) -> Vec<S> {
        let n = hopf_unit(&self.stereo.embed(chart, u));
        base_chart(&[n[2], n[0], n[1]])
    }
}

struct HopfPiAmbient {
    stereo: Arc<Stereo>,
}

impl SmoothFn for HopfPiAmbient {
    fn shape(&self) -> (usize, usize) {
        (3, 1)
    }
    fn eval<S: Real>(&self, chart: ChartId, u: &[S]) -> Vec<S> {
        hopf_unit(&self.stereo.embed(chart, u)).iter().map(|&v| v * 0.5).collect()
    }
}

/// Base chart of `S²(½)` back to `ℝ³`, undoing the axis reorder.
struct HopfBaseEmbed;

impl SmoothFn for HopfBaseEmbed {
    fn shape(&self) -> (usize, usize) {
        (3, 1)
    }
    fn eval<S: Real>(&self, _: ChartId, b: &[S]) -> Vec<S> {
        let p = base_point(b, 0.5);
        vec![p[1], p[2], p[0]]
    }
}

pub struct HopfBundle {
    stereo: Arc<Stereo>,
    xi: Arc<dyn ChartFn>,
}

impl PrincipalBundle for HopfBundle {
    fn group_dim(&self) -> usize {
        1
    }

    fn connection_form(&self, p: &Point, v: &[f64]) -> Vec<f64> {
        let q = Quaternion::from_slice(&self.stereo.embed(p.chart, &p.x));
        let w = Quaternion::from_slice(&self.stereo.dembed(p.chart, &p.x).mul_vec(v));
        vec![(q.conj() * w).x]
    }

    fn act(&self, p: &Point, a: &[f64]) -> Point {
        let q = Quaternion::from_slice(&self.stereo.embed(p.chart, &p.x));
        let moved = q * Quaternion::exp_i(a[0]);
        crate::geometry::Embedding::locate(self.stereo.as_ref(), &moved.to_array())
    }

    fn act_tangent(&self, v: &TangentVec, a: &[f64]) -> TangentVec {
        let p = &v.base;
        let w = Quaternion::from_slice(&self.stereo.dembed(p.chart, &p.x).mul_vec(&v.v));
        let g = Quaternion::exp_i(a[0]);
        let target = self.act(p, a);
        let pushed = self.stereo.push(target.chart, &target.x, &(w * g).to_array());
        TangentVec::new(target, pushed)
    }

    fn fundamental_field(&self, a: usize) -> Arc<dyn ChartFn> {
        assert_eq!(a, 0, "u(1) is one-dimensional");
        self.xi.clone()
    }

    fn lie_bracket(&self, _: &[f64], _: &[f64]) -> Vec<f64> {
        vec![0.0]
    }
}

fn build(stereo: Stereo, name: &'static str) -> ModelSpace {
    let stereo = Arc::new(stereo);
    let atlas = Arc::new((*stereo).clone().atlas());
    let horizontal = smooth(PushedFrame {
        stereo: stereo.clone(),
        frame: RightUnits { units: vec![2, 3] },
    });
    let vertical = smooth(PushedFrame {
        stereo: stereo.clone(),
        frame: RightUnits { units: vec![1] },
    });
    let geometry = Geometry::new(
        atlas,
        MetricField::new(smooth(RoundMetric { n: 3 })),
        FrameField::new(horizontal, vertical.clone()),
    )
    .with_g_star(smooth(RoundCometric { n: 3 }));
    let submersion = Submersion {
        base_dim: 2,
        pi: smooth(HopfPi { stereo: stereo.clone() }),
        base_metric: smooth(ScaledRoundMetric { n: 2, radius: 0.5 }),
        pi_ambient: smooth(HopfPiAmbient { stereo: stereo.clone() }),
        base_embed: smooth(HopfBaseEmbed),
    };
    let bundle = HopfBundle {
        stereo: stereo.clone(),
        xi: vertical,
    };
    let locate = |y: &[f64]| crate::geometry::Embedding::locate(stereo.as_ref(), y);
    let one = locate(&[1.0, 0.0, 0.0, 0.0]);
    ModelSpace {
        name,
        summary: "Hopf fibration S¹ → S³ → S²(½), round S³, U(1) principal bundle",
        geometry,
        submersion: Some(submersion),
        bundle: Some(Arc::new(bundle)),
        declared: DeclaredProperties {
            orthogonal: true,
            v_integrable: true,
            totally_geodesic: true,
            riemannian_foliation: true,
            principal_bundle: true,
        },
        domain: SampleDomain::Sphere,
        covector_scale: 1.0,
        interesting: vec![
            one.clone(),
            locate(&[0.0, 0.0, 0.0, 1.0]),
            locate(&[0.5, 0.5, 0.5, 0.5]),
        ],
        canonical: CanonicalState {
            x: one.clone(),
            // ♯p = q·j + ½ q·i at q = 1; g = 4I at u = 0
            p: vec![4.0 * 0.25, 4.0 * 0.5, 0.0],
        },
    }
}

pub fn hopf_s3() -> ModelSpace {
    build(Stereo::new(3), "hopf_s3")
}

/// Same model on an atlas rotated by `rot` in `ℝ⁴`.
pub fn hopf_s3_rotated(rot: Mat<f64>) -> ModelSpace {
    build(Stereo::rotated(3, rot), "hopf_s3")
}
