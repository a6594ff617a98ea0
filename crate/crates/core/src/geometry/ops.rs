//! Pointwise geometry operations on tangent and cotangent vectors.

use super::chart::{CotangentVec, Point, TangentVec};
use super::fields::{CometricField, FrameField, FrameGram, MetricField, Subspace};
use super::split::{projectors, Extension, SplitJet, VJet};
use super::Geometry;
use crate::config::Tolerances;
use crate::error::{GeoError, Result};
use crate::jet::{directional, ChartFn, Scalar};
use std::sync::Arc;

/// `♯p = g(x)⁻¹ p`.
pub fn sharp(metric: &MetricField, p: &CotangentVec) -> Result<TangentVec> {
    let g = metric.check_spd(&p.base, Tolerances::default().spd_tol)?;
    let v = g.solve(&p.p).map_err(|e| GeoError::MetricDegenerate {
        chart: p.base.chart,
        x: p.base.x.clone(),
        pivot: e.pivot,
    })?;
    Ok(TangentVec::new(p.base.clone(), v))
}

/// `♯ˢp = s*(x) p`.
pub fn sharp_sub(s: &CometricField, p: &CotangentVec) -> TangentVec {
    let m = s.at::<f64>(p.base.chart, &p.base.x);
    TangentVec::new(p.base.clone(), m.mul_vec(&p.p))
}

/// `s* = AAᵀ` from the selected frame, after checking orthonormality at `samples`.
pub fn cometric_from_frame(
    frame: &FrameField,
    metric: &MetricField,
    which: Subspace,
    samples: &[Point],
    frame_tol: f64,
) -> Result<CometricField> {
    for p in samples {
        frame.check_orthonormal(metric, which, p, frame_tol)?;
    }
    Ok(CometricField::new(
        Arc::new(FrameGram {
            frame: frame.field(which).clone(),
        }),
        frame.rank(which),
    ))
}

/// Projection onto `H` or `V` along the declared complement.
pub fn project(frame: &FrameField, v: &TangentVec, onto: Subspace) -> Result<TangentVec> {
    let (_, _, _, ph, pv) = projectors::<f64>(frame, v.base.chart, &v.base.x)?;
    let p = match onto {
        Subspace::H => ph,
        Subspace::V => pv,
    };
    Ok(TangentVec::new(v.base.clone(), p.mul_vec(&v.v)))
}

/// `[X, Y] = DY·X − DX·Y` at `at`.
pub fn lie_bracket(x: &dyn ChartFn, y: &dyn ChartFn, at: &Point) -> Result<TangentVec> {
    let xv = x.eval_f64(at.chart, &at.x);
    let yv = y.eval_f64(at.chart, &at.x);
    let (_, dy_x) = directional::<f64>(y, at.chart, &at.x, &xv);
    let (_, dx_y) = directional::<f64>(x, at.chart, &at.x, &yv);
    let out: Vec<f64> = dy_x.iter().zip(&dx_y).map(|(a, b)| a - b).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(GeoError::DifferentiationError(format!(
            "non-finite bracket at chart {} x={:?}",
            at.chart, at.x
        )));
    }
    Ok(TangentVec::new(at.clone(), out))
}

/// Bracket of the `of`-parts of two fields, projected onto the complement.
/// `of = H` gives the curvature `R`, `of = V` the cocurvature `R̄`.
pub fn tensor_curvature<S: Scalar>(sj: &SplitJet<S>, x: &VJet<S>, y: &VJet<S>, of: Subspace) -> Vec<S> {
    let xp = sj.project(of, x);
    let yp = sj.project(of, y);
    let other = match of {
        Subspace::H => Subspace::V,
        Subspace::V => Subspace::H,
    };
    sj.s.proj(other).mul_vec(&sj.bracket(&xp, &yp))
}

fn curvature_impl(geo: &Geometry, v: &TangentVec, w: &TangentVec, ext: Extension, of: Subspace) -> Result<TangentVec> {
    assert_eq!(v.base, w.base, "curvature arguments must share a base point");
    let sj = geo.jet_at(&v.base)?;
    let x = sj.extend(&v.v, ext);
    let y = sj.extend(&w.v, ext);
    let out = tensor_curvature(&sj, &x, &y, of);
    if out.iter().any(|c| !c.is_finite()) {
        return Err(GeoError::DifferentiationError("non-finite curvature".into()));
    }
    Ok(TangentVec::new(v.base.clone(), out))
}

/// `R(v,w) = pr_V [pr_H X, pr_H Y]` with `X`, `Y` extended as requested.
pub fn curvature(geo: &Geometry, v: &TangentVec, w: &TangentVec, ext: Extension) -> Result<TangentVec> {
    curvature_impl(geo, v, w, ext, Subspace::H)
}

/// `R̄(v,w) = pr_H [pr_V X, pr_V Y]`.
pub fn cocurvature(geo: &Geometry, v: &TangentVec, w: &TangentVec, ext: Extension) -> Result<TangentVec> {
    curvature_impl(geo, v, w, ext, Subspace::V)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Atlas, ConstantField};
    use crate::jet::{smooth, ChartId, SmoothFn};
    use crate::Real;

    struct Diag(Vec<f64>);
    impl SmoothFn for Diag {
        fn shape(&self) -> (usize, usize) {
            (self.0.len(), self.0.len())
        }
        fn eval<S: Real>(&self, _: ChartId, _: &[S]) -> Vec<S> {
            let n = self.0.len();
            (0..n * n)
                .map(|i| if i % (n + 1) == 0 { S::cst(self.0[i / n]) } else { S::zero() })
                .collect()
        }
    }

    struct Cols(Vec<Vec<f64>>);
    impl SmoothFn for Cols {
        fn shape(&self) -> (usize, usize) {
            (self.0[0].len(), self.0.len())
        }
        fn eval<S: Real>(&self, _: ChartId, _: &[S]) -> Vec<S> {
            let (n, k) = self.shape();
            (0..n * k).map(|i| S::cst(self.0[i % k][i / k])).collect()
        }
    }

    fn base() -> Point {
        Point::new(0, vec![0.1, 0.2, 0.3])
    }

    #[test]
    fn sharp_identity_and_diagonal() {
        let g = MetricField::new(smooth(Diag(vec![1.0, 1.0, 1.0])));
        let v = sharp(&g, &CotangentVec::new(base(), vec![1.0, 2.0, 3.0])).unwrap();
        assert_eq!(v.v, vec![1.0, 2.0, 3.0]);
        let g = MetricField::new(smooth(Diag(vec![4.0, 1.0, 1.0])));
        let v = sharp(&g, &CotangentVec::new(base(), vec![1.0, 0.0, 0.0])).unwrap();
        assert_eq!(v.v, vec![0.25, 0.0, 0.0]);
    }

    #[test]
    fn sharp_rejects_degenerate_metric() {
        let g = MetricField::new(smooth(Diag(vec![1.0, 0.0, 1.0])));
        let err = sharp(&g, &CotangentVec::new(base(), vec![1.0, 0.0, 0.0]));
        assert!(matches!(err, Err(GeoError::MetricDegenerate { .. })));
    }

    #[test]
    fn flat_brackets_vanish() {
        let dx = ConstantField { v: vec![1.0, 0.0, 0.0] };
        let dy = ConstantField { v: vec![0.0, 1.0, 0.0] };
        let b = lie_bracket(&dx, &dy, &base()).unwrap();
        assert_eq!(b.v, vec![0.0; 3]);
    }

    #[test]
    fn oblique_projection_is_complementary() {
        let h = smooth(Cols(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]));
        let v = smooth(Cols(vec![vec![0.5, 0.0, 1.0]]));
        let frame = FrameField::new(h, v);
        let t = TangentVec::new(base(), vec![0.0, 0.0, 2.0]);
        let ph = project(&frame, &t, Subspace::H).unwrap();
        let pv = project(&frame, &t, Subspace::V).unwrap();
        assert!((ph.v[0] + 1.0).abs() < 1e-15);
        assert!((pv.v[0] - 1.0).abs() < 1e-15 && (pv.v[2] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_frame_is_reported() {
        let h = smooth(Cols(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]));
        let v = smooth(Cols(vec![vec![1.0, 1.0, 0.0]]));
        let frame = FrameField::new(h, v);
        let t = TangentVec::new(base(), vec![0.0, 0.0, 1.0]);
        assert!(matches!(project(&frame, &t, Subspace::H), Err(GeoError::FrameDegenerate { .. })));
    }

    #[test]
    fn flat_curvatures_vanish() {
        let h = smooth(Cols(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]));
        let v = smooth(Cols(vec![vec![0.0, 0.0, 1.0]]));
        let geo = Geometry::new(
            Arc::new(Atlas::euclidean(3, 1e4)),
            MetricField::new(smooth(Diag(vec![1.0; 3]))),
            FrameField::new(h, v),
        );
        let a = TangentVec::new(base(), vec![1.0, 2.0, 0.5]);
        let b = TangentVec::new(base(), vec![-0.3, 0.2, 1.5]);
        for ext in [Extension::Constant, Extension::FrameCoefficients] {
            assert_eq!(curvature(&geo, &a, &b, ext).unwrap().v, vec![0.0; 3]);
            assert_eq!(cocurvature(&geo, &a, &b, ext).unwrap().v, vec![0.0; 3]);
        }
    }
}
