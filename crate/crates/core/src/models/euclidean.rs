//! Models on a single global chart of `ℝ³`.

use super::{smooth_field, CanonicalState, DeclaredProperties, ModelSpace, SampleDomain, Submersion};
use crate::dual::Real;
use crate::geometry::{Atlas, FrameField, Geometry, MetricField, Point};
use crate::jet::smooth;
use std::sync::Arc;

const CHART_RADIUS: f64 = 1e4;

fn c<S: Real>(v: f64) -> S {
    S::cst(v)
}

smooth_field!(Identity3, (3, 3), |x| {
    let (o, z) = (c::<S>(1.0), c::<S>(0.0));
    vec![o, z, z, z, o, z, z, z, o]
});

smooth_field!(Identity2, (2, 2), |x| vec![c(1.0), c(0.0), c(0.0), c(1.0)]);

smooth_field!(PlaneFrame, (3, 2), |x| {
    let (o, z) = (c::<S>(1.0), c::<S>(0.0));
    vec![o, z, z, o, z, z]
});

smooth_field!(AxisZ, (3, 1), |x| vec![c(0.0), c(0.0), c(1.0)]);

smooth_field!(ProjectXY, (2, 1), |x| vec![x[0], x[1]]);

smooth_field!(
    /// Heisenberg `X = ∂x − (y/2)∂z`, `Y = ∂y + (x/2)∂z` as columns.
    HeisenbergXY,
    (3, 2),
    |x| vec![c(1.0), c(0.0), c(0.0), c(1.0), x[1] * -0.5, x[0] * 0.5]
);

smooth_field!(
    /// Metric making `(X, Y, ∂z)` orthonormal.
    HeisenbergMetric,
    (3, 3),
    |x| {
        let (a, b) = (x[0], x[1]);
        vec![
            b * b * 0.25 + 1.0,
            a * b * -0.25,
            b * 0.5,
            a * b * -0.25,
            a * a * 0.25 + 1.0,
            a * -0.5,
            b * 0.5,
            a * -0.5,
            c(1.0),
        ]
    }
);

smooth_field!(
    /// `FFᵀ` for `F = [X Y ∂z]`.
    HeisenbergCometric,
    (3, 3),
    |x| {
        let (a, b) = (x[0], x[1]);
        vec![
            c(1.0),
            c(0.0),
            b * -0.5,
            c(0.0),
            c(1.0),
            a * 0.5,
            b * -0.5,
            a * 0.5,
            (a * a + b * b) * 0.25 + 1.0,
        ]
    }
);

smooth_field!(WarpedMetric, (3, 3), |x| {
    let (o, z) = (c::<S>(1.0), c::<S>(0.0));
    vec![o, z, z, z, o, z, z, z, (x[0] * 2.0).exp()]
});

smooth_field!(WarpedCometric, (3, 3), |x| {
    let (o, z) = (c::<S>(1.0), c::<S>(0.0));
    vec![o, z, z, z, o, z, z, z, (x[0] * -2.0).exp()]
});

smooth_field!(WarpedVertical, (3, 1), |x| vec![c(0.0), c(0.0), (-x[0]).exp()]);

smooth_field!(
    /// Unit vector along `∂z + ½∂x`.
    SkewedVertical,
    (3, 1),
    |x| {
        let s = 1.0 / 1.25f64.sqrt();
        vec![c(0.5 * s), c(0.0), c(s)]
    }
);

smooth_field!(SkewedProjection, (2, 1), |x| vec![x[0] - x[2] * 0.5, x[1]]);

fn r3_atlas() -> Arc<Atlas> {
    Arc::new(Atlas::euclidean(3, CHART_RADIUS))
}

fn plane_submersion() -> Submersion {
    Submersion {
        base_dim: 2,
        pi: smooth(ProjectXY),
        base_metric: smooth(Identity2),
        pi_ambient: smooth(ProjectXY),
        base_embed: smooth(Identity2Embed),
    }
}

smooth_field!(Identity2Embed, (2, 1), |x| vec![x[0], x[1]]);

fn origin() -> Point {
    Point::new(0, vec![0.0; 3])
}

fn canonical() -> CanonicalState {
    CanonicalState {
        x: origin(),
        p: vec![1.0, 0.0, 1.0],
    }
}

/// Heisenberg group with the left-invariant frame `X, Y, Z = ∂z`.
pub fn heisenberg() -> ModelSpace {
    let geometry = Geometry::new(
        r3_atlas(),
        MetricField::new(smooth(HeisenbergMetric)),
        FrameField::new(smooth(HeisenbergXY), smooth(AxisZ)),
    )
    .with_g_star(smooth(HeisenbergCometric));
    ModelSpace {
        name: "heisenberg",
        summary: "Heisenberg group, H = span(X, Y), V = span(∂z), π(x,y,z) = (x,y)",
        geometry,
        submersion: Some(plane_submersion()),
        bundle: None,
        declared: DeclaredProperties {
            orthogonal: true,
            v_integrable: true,
            totally_geodesic: true,
            riemannian_foliation: true,
            principal_bundle: false,
        },
        domain: SampleDomain::Ball { radius: 2.0 },
        covector_scale: 1.0,
        interesting: vec![origin(), Point::new(0, vec![0.0, 2.0, 0.0]), Point::new(0, vec![1.0, -1.0, 0.5])],
        canonical: canonical(),
    }
}

/// Euclidean `ℝ³` split as `span(∂x, ∂y) ⊕ span(∂z)`.
pub fn flat_split() -> ModelSpace {
    let geometry = Geometry::new(
        r3_atlas(),
        MetricField::new(smooth(Identity3)),
        FrameField::new(smooth(PlaneFrame), smooth(AxisZ)),
    )
    .with_g_star(smooth(Identity3));
    ModelSpace {
        name: "flat_split",
        summary: "Euclidean R³, H = span(∂x, ∂y), V = span(∂z), π(x,y,z) = (x,y)",
        geometry,
        submersion: Some(plane_submersion()),
        bundle: None,
        declared: DeclaredProperties {
            orthogonal: true,
            v_integrable: true,
            totally_geodesic: true,
            riemannian_foliation: true,
            principal_bundle: false,
        },
        domain: SampleDomain::Ball { radius: 2.0 },
        covector_scale: 1.0,
        interesting: vec![origin()],
        canonical: canonical(),
    }
}

/// `g = dx² + dy² + e^{2x}dz²`: fibers are not totally geodesic.
pub fn warped_control() -> ModelSpace {
    let geometry = Geometry::new(
        r3_atlas(),
        MetricField::new(smooth(WarpedMetric)),
        FrameField::new(smooth(PlaneFrame), smooth(WarpedVertical)),
    )
    .with_g_star(smooth(WarpedCometric));
    ModelSpace {
        name: "warped_control",
        summary: "g = dx² + dy² + e^{2x}dz², H = span(∂x, ∂y), V = span(∂z); fibers not totally geodesic",
        geometry,
        submersion: Some(plane_submersion()),
        bundle: None,
        declared: DeclaredProperties {
            orthogonal: true,
            v_integrable: true,
            totally_geodesic: false,
            riemannian_foliation: true,
            principal_bundle: false,
        },
        domain: SampleDomain::Ball { radius: 1.0 },
        covector_scale: 1.0,
        interesting: vec![origin()],
        canonical: canonical(),
    }
}

/// Euclidean `ℝ³` with `V` along `∂z + ½∂x`, not orthogonal to `H`.
pub fn skewed_split() -> ModelSpace {
    let geometry = Geometry::new(
        r3_atlas(),
        MetricField::new(smooth(Identity3)),
        FrameField::new(smooth(PlaneFrame), smooth(SkewedVertical)),
    )
    .with_g_star(smooth(Identity3));
    ModelSpace {
        name: "skewed_split",
        summary: "Euclidean R³, H = span(∂x, ∂y), V = span(∂z + ½∂x), π = (x − z/2, y); V not orthogonal to H",
        geometry,
        submersion: Some(Submersion {
            base_dim: 2,
            pi: smooth(SkewedProjection),
            base_metric: smooth(Identity2),
            pi_ambient: smooth(SkewedProjection),
            base_embed: smooth(Identity2Embed),
        }),
        bundle: None,
        declared: DeclaredProperties {
            orthogonal: false,
            v_integrable: true,
            totally_geodesic: true,
            riemannian_foliation: true,
            principal_bundle: false,
        },
        domain: SampleDomain::Ball { radius: 2.0 },
        covector_scale: 1.0,
        interesting: vec![origin()],
        canonical: CanonicalState {
            x: origin(),
            p: vec![0.0, 0.0, 1.0],
        },
    }
}

/// Heisenberg metric with the roles swapped: `H = span(∂z)`, `V = span(X, Y)`.
/// `V` is not integrable, so the cocurvature is nonzero.
pub fn vertical_heisenberg() -> ModelSpace {
    let geometry = Geometry::new(
        r3_atlas(),
        MetricField::new(smooth(HeisenbergMetric)),
        FrameField::new(smooth(AxisZ), smooth(HeisenbergXY)),
    )
    .with_g_star(smooth(HeisenbergCometric));
    ModelSpace {
        name: "vertical_heisenberg",
        summary: "Heisenberg metric, H = span(∂z), V = span(X, Y); V bracket-generating",
        geometry,
        submersion: None,
        bundle: None,
        declared: DeclaredProperties {
            orthogonal: true,
            v_integrable: false,
            totally_geodesic: true,
            riemannian_foliation: true,
            principal_bundle: false,
        },
        domain: SampleDomain::Ball { radius: 2.0 },
        covector_scale: 1.0,
        interesting: vec![origin()],
        canonical: canonical(),
    }
}

/// Closed-form normal geodesic of the Heisenberg structure at time `t`.
///
/// With `(a, b, c) = (p(X), p(Y), p(∂z))` at `x0`, the curve is
/// `x0 · (ζ, z)` with `ζ = (a+ib)(e^{ict}−1)/(ic)` and
/// `z = (a²+b²)(ct − sin ct)/(2c²)`.
pub fn heisenberg_geodesic(x0: &[f64], p: &[f64], t: f64) -> [f64; 3] {
    let (x, y) = (x0[0], x0[1]);
    let a = p[0] - 0.5 * y * p[2];
    let b = p[1] + 0.5 * x * p[2];
    let cc = p[2];
    let k2 = a * a + b * b;
    let ct = cc * t;
    let (re, im, z) = if ct.abs() < 1e-4 {
        // series in ct to avoid cancellation
        let re_f = t * (1.0 - ct * ct / 6.0);
        let im_f = t * (ct / 2.0 - ct * ct * ct / 24.0);
        (a * re_f - b * im_f, a * im_f + b * re_f, k2 * t * t * t * cc / 12.0 * (1.0 - ct * ct / 20.0))
    } else {
        // (e^{ict} − 1)/(ic) = (sin ct + i(1 − cos ct))/c
        let re_f = ct.sin() / cc;
        let im_f = (1.0 - ct.cos()) / cc;
        (a * re_f - b * im_f, a * im_f + b * re_f, k2 * (ct - ct.sin()) / (2.0 * cc * cc))
    };
    [x + re, y + im, x0[2] + z + 0.5 * (x * im - y * re)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_line_when_pz_vanishes() {
        let q = heisenberg_geodesic(&[0.0; 3], &[1.0, 0.0, 0.0], 0.7);
        assert_eq!(q, [0.7, 0.0, 0.0]);
    }

    #[test]
    fn series_branch_is_continuous() {
        let p1 = [0.3, -0.8, 1e-6];
        let p2 = [0.3, -0.8, 2e-4];
        let a = heisenberg_geodesic(&[0.2, 0.1, 0.0], &p1, 1.0);
        let b = heisenberg_geodesic(&[0.2, 0.1, 0.0], &p2, 1.0);
        for i in 0..3 {
            assert!((a[i] - b[i]).abs() < 1e-4);
        }
    }
}
