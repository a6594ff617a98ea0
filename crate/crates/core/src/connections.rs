//! Levi-Civita and ∇̂ connections, torsion, covariant derivatives,
//! parallel transport and foliation diagnostics.
//!
//! Coefficients follow `gamma[i][(k, j)] = Γ^i_{kj} = (∇_{∂k} ∂j)^i`.
//! For ∇̂ they come from the four-term formula applied to constant
//! coordinate fields, which is valid because ∇̂ is an affine connection.

use crate::config::Tolerances;
use crate::dual::D1;
use crate::error::{GeoError, Result};
use crate::geometry::{
    tensor_curvature, Extension, Geometry, Point, Subspace, SplitJet, TangentVec, VJet,
};
use crate::jet::{seeded_axis, ChartFn, Lift, Scalar};
use crate::linalg::{max_abs, Mat};
use crate::models::ModelSpace;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionKind {
    LeviCivita,
    Rnabla,
}

/// Connection coefficients sampled at one point.
#[derive(Clone, Debug)]
pub struct ConnectionCoeffs {
    pub kind: ConnectionKind,
    pub at: Point,
    pub gamma: Vec<Mat<f64>>,
}

impl ConnectionCoeffs {
    /// Largest `|Γ^i_{kj} − Γ^i_{jk}|`.
    pub fn torsion_defect(&self) -> f64 {
        self.gamma
            .iter()
            .map(|g| g.max_abs_diff(&g.transpose()))
            .fold(0.0, f64::max)
    }
}

fn unit_jet<S: Scalar>(n: usize, k: usize) -> VJet<S> {
    VJet::constant(&crate::linalg::unit(n, k))
}

/// Coefficients of the requested connection from a split jet.
pub fn coefficients<S: Scalar>(sj: &SplitJet<S>, kind: ConnectionKind) -> Vec<Mat<S>> {
    match kind {
        ConnectionKind::LeviCivita => sj.gamma.clone(),
        ConnectionKind::Rnabla => {
            let n = sj.dim();
            let cols: Vec<Vec<Vec<S>>> = (0..n)
                .map(|k| {
                    let ek = unit_jet::<S>(n, k);
                    (0..n).map(|j| sj.rnabla(&ek, &unit_jet(n, j))).collect()
                })
                .collect();
            (0..n).map(|i| Mat::from_fn(n, n, |k, j| cols[k][j][i])).collect()
        }
    }
}

/// `Γ^i_{kj}` of the Levi-Civita connection at `x`.
pub fn christoffel(geo: &Geometry, x: &Point) -> Result<ConnectionCoeffs> {
    connection_at(geo, ConnectionKind::LeviCivita, x)
}

pub fn connection_at(geo: &Geometry, kind: ConnectionKind, x: &Point) -> Result<ConnectionCoeffs> {
    let sj = geo.jet_at(x)?;
    Ok(ConnectionCoeffs {
        kind,
        at: x.clone(),
        gamma: coefficients(&sj, kind),
    })
}

/// `Γ(u, w)^i = Γ^i_{kj} u^k w^j`.
pub fn apply<S: Scalar>(gamma: &[Mat<S>], u: &[S], w: &[S]) -> Vec<S> {
    gamma.iter().map(|g| g.bilinear(u, w)).collect()
}

/// `(Γ^*(u) λ)_j = Γ^i_{kj} u^k λ_i`, so `∇_u λ = u(λ) − Γ^*(u)λ`.
pub fn dual_apply<S: Scalar>(gamma: &[Mat<S>], u: &[S], lam: &[S]) -> Vec<S> {
    let n = u.len();
    (0..n)
        .map(|j| {
            let mut acc = S::zero();
            for (i, g) in gamma.iter().enumerate() {
                for (k, &uk) in u.iter().enumerate() {
                    acc += lam[i] * g[(k, j)] * uk;
                }
            }
            acc
        })
        .collect()
}

/// `(λ T(u, ·))_j = λ_i (Γ^i_{kj} − Γ^i_{jk}) u^k`.
pub fn torsion_contract<S: Scalar>(gamma: &[Mat<S>], u: &[S], lam: &[S]) -> Vec<S> {
    let n = u.len();
    (0..n)
        .map(|j| {
            let mut acc = S::zero();
            for (i, g) in gamma.iter().enumerate() {
                for (k, &uk) in u.iter().enumerate() {
                    acc += lam[i] * (g[(k, j)] - g[(j, k)]) * uk;
                }
            }
            acc
        })
        .collect()
}

/// `((∇_k s*)(λ, λ))_k` from `s*`, its partials `ds[k]` and the coefficients:
/// `(∇_k s)^{ij} = ∂_k s^{ij} + Γ^i_{kl} s^{lj} + Γ^j_{kl} s^{il}`.
pub fn cometric_derivative<S: Scalar>(gamma: &[Mat<S>], s: &Mat<S>, ds: &[Mat<S>], lam: &[S]) -> Vec<S> {
    let n = lam.len();
    let sl = s.mul_vec(lam);
    (0..n)
        .map(|k| {
            let mut acc = ds[k].bilinear(lam, lam);
            // Γ^i_{kl} s^{lj} λ_i λ_j appears twice by symmetry of s
            for (i, g) in gamma.iter().enumerate() {
                let mut row = S::zero();
                for l in 0..n {
                    row += g[(k, l)] * sl[l];
                }
                acc += lam[i] * row * 2.0;
            }
            acc
        })
        .collect()
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(GeoError::DifferentiationError(format!("non-finite {what}")))
    }
}

/// `∇_X Y` at `x` for vector fields given in chart components.
pub fn covderiv(geo: &Geometry, kind: ConnectionKind, x_field: &dyn ChartFn, y_field: &dyn ChartFn, at: &Point) -> Result<TangentVec> {
    let sj = geo.jet_at(at)?;
    let xj = VJet::<f64>::from_field(x_field, at.chart, &at.x);
    let yj = VJet::<f64>::from_field(y_field, at.chart, &at.x);
    let out = match kind {
        ConnectionKind::LeviCivita => sj.lc(&xj.v, &yj),
        ConnectionKind::Rnabla => {
            let r = sj.rnabla(&xj, &yj);
            debug_assert!(preserves_split(&sj, &yj, &r), "∇̂ left the declared subbundle");
            r
        }
    };
    check_finite(&out, "covariant derivative")?;
    Ok(TangentVec::new(at.clone(), out))
}

/// ∇̂ of a field lying in `H` (or `V`) to first order stays in it.
fn preserves_split(sj: &SplitJet<f64>, y: &VJet<f64>, out: &[f64]) -> bool {
    let scale = 1.0 + max_abs(&y.v) + y.d.iter().map(|d| max_abs(d)).fold(0.0, f64::max);
    let tol = 1e-8 * scale;
    for other in [Subspace::V, Subspace::H] {
        let off = sj.project(other, y);
        let lies_in = max_abs(&off.v) <= tol && off.d.iter().all(|d| max_abs(d) <= tol);
        if lies_in && max_abs(&sj.s.proj(other).mul_vec(out)) > tol * (1.0 + max_abs(out)) {
            return false;
        }
    }
    true
}

/// `T^∇̂(v, w) = ∇̂_X Y − ∇̂_Y X − [X, Y]` with the given extension.
pub fn rnabla_torsion(geo: &Geometry, v: &TangentVec, w: &TangentVec, ext: Extension) -> Result<TangentVec> {
    let sj = geo.jet_at(&v.base)?;
    let x = sj.extend(&v.v, ext);
    let y = sj.extend(&w.v, ext);
    let a = sj.rnabla(&x, &y);
    let b = sj.rnabla(&y, &x);
    let c = sj.bracket(&x, &y);
    let out: Vec<f64> = (0..a.len()).map(|i| a[i] - b[i] - c[i]).collect();
    check_finite(&out, "torsion")?;
    Ok(TangentVec::new(v.base.clone(), out))
}

/// `−R(v, w) − R̄(v, w)`, the expected torsion of ∇̂.
pub fn torsion_expected(geo: &Geometry, v: &TangentVec, w: &TangentVec, ext: Extension) -> Result<TangentVec> {
    let sj = geo.jet_at(&v.base)?;
    let x = sj.extend(&v.v, ext);
    let y = sj.extend(&w.v, ext);
    let r = tensor_curvature(&sj, &x, &y, Subspace::H);
    let rb = tensor_curvature(&sj, &x, &y, Subspace::V);
    Ok(TangentVec::new(v.base.clone(), (0..r.len()).map(|i| -r[i] - rb[i]).collect()))
}

fn nabla_closure<'a>(sj: &'a SplitJet<f64>, kind: ConnectionKind, x: &'a VJet<f64>) -> impl Fn(&VJet<f64>) -> Vec<f64> + 'a {
    move |w: &VJet<f64>| match kind {
        ConnectionKind::LeviCivita => sj.lc(&x.v, w),
        ConnectionKind::Rnabla => sj.rnabla(x, w),
    }
}

/// `(∇_v g)(w1, w2)`.
pub fn covderiv_metric(
    geo: &Geometry,
    kind: ConnectionKind,
    v: &TangentVec,
    w1: &[f64],
    w2: &[f64],
    ext: Extension,
) -> Result<f64> {
    let sj = geo.jet_at(&v.base)?;
    let x = sj.extend(&v.v, ext);
    let a = sj.extend(w1, ext);
    let b = sj.extend(w2, ext);
    let out = sj.metric_derivative(&x.v, &a, &b, nabla_closure(&sj, kind, &x));
    check_finite(&[out], "metric derivative")?;
    Ok(out)
}

/// `II(z1, z2) = pr_H ∇_{pr_V Z1} (pr_V Z2)`.
pub fn second_fundamental_form(geo: &Geometry, z1: &TangentVec, z2: &[f64], ext: Extension) -> Result<TangentVec> {
    let sj = geo.jet_at(&z1.base)?;
    let out = second_fundamental_jet(&sj, &z1.v, z2, ext);
    check_finite(&out, "second fundamental form")?;
    Ok(TangentVec::new(z1.base.clone(), out))
}

fn second_fundamental_jet(sj: &SplitJet<f64>, z1: &[f64], z2: &[f64], ext: Extension) -> Vec<f64> {
    let a = sj.project(Subspace::V, &sj.extend(z1, ext));
    let b = sj.project(Subspace::V, &sj.extend(z2, ext));
    sj.s.ph.mul_vec(&sj.lc(&a.v, &b))
}

/// A curve sample: time, position and velocity in the position's chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub t: f64,
    pub x: Point,
    pub v: Vec<f64>,
}

/// Coefficients of `kind` at a chart point.
pub fn gamma_at(geo: &Geometry, kind: ConnectionKind, chart: usize, x: &[f64]) -> Result<Vec<Mat<f64>>> {
    let sj = geo.split_jet::<f64>(chart, x)?;
    Ok(coefficients(&sj, kind))
}

/// Solves `∇_{γ̇} v = 0` with RK4 on the piecewise cubic Hermite
/// interpolant of the samples. Vectors follow the curve across charts.
pub fn parallel_transport(geo: &Geometry, kind: ConnectionKind, curve: &[CurveSample], v0: &[f64]) -> Result<Vec<TangentVec>> {
    let atlas = &geo.atlas;
    let mut out = Vec::with_capacity(curve.len());
    let Some(first) = curve.first() else {
        return Ok(out);
    };
    let mut v = v0.to_vec();
    out.push(TangentVec::new(first.x.clone(), v.clone()));
    for pair in curve.windows(2) {
        let (mut a, b) = (pair[0].clone(), &pair[1]);
        if a.x.chart != b.x.chart {
            let moved = atlas.tangent_to_chart(&TangentVec::new(a.x.clone(), a.v.clone()), b.x.chart);
            v = atlas.tangent_to_chart(&TangentVec::new(a.x.clone(), v.clone()), b.x.chart).v;
            a = CurveSample {
                t: a.t,
                x: moved.base,
                v: moved.v,
            };
        }
        let h = b.t - a.t;
        let chart = b.x.chart;
        let (x0, x1, u0, u1) = (&a.x.x, &b.x.x, &a.v, &b.v);
        let n = x0.len();
        let mid_x: Vec<f64> = (0..n).map(|i| 0.5 * (x0[i] + x1[i]) + h * (u0[i] - u1[i]) / 8.0).collect();
        let mid_u: Vec<f64> = (0..n).map(|i| 1.5 * (x1[i] - x0[i]) / h - 0.25 * (u0[i] + u1[i])).collect();
        let g0 = gamma_at(geo, kind, chart, x0)?;
        let gm = gamma_at(geo, kind, chart, &mid_x)?;
        let g1 = gamma_at(geo, kind, chart, x1)?;
        let rhs = |g: &[Mat<f64>], u: &[f64], w: &[f64]| -> Vec<f64> { apply(g, u, w).into_iter().map(|c| -c).collect() };
        let k1 = rhs(&g0, u0, &v);
        let v2: Vec<f64> = (0..n).map(|i| v[i] + 0.5 * h * k1[i]).collect();
        let k2 = rhs(&gm, &mid_u, &v2);
        let v3: Vec<f64> = (0..n).map(|i| v[i] + 0.5 * h * k2[i]).collect();
        let k3 = rhs(&gm, &mid_u, &v3);
        let v4: Vec<f64> = (0..n).map(|i| v[i] + h * k3[i]).collect();
        let k4 = rhs(&g1, u1, &v4);
        for i in 0..n {
            v[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(GeoError::TransportDiverged { t: b.t });
        }
        out.push(TangentVec::new(b.x.clone(), v.clone()));
    }
    Ok(out)
}

/// Sup residuals of the foliation conditions over a sample set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoliationReport {
    pub model: String,
    pub samples: usize,
    /// `sup |(L_X g)(Z, W)|` over unit frame fields `X ∈ H`, `Z, W ∈ V`.
    pub tg_residual: f64,
    /// `sup |(L_Z g)(X, Y)|` over unit frame fields `Z ∈ V`, `X, Y ∈ H`.
    pub rf_residual: f64,
    /// `sup |(∇̂_u g)(w1, w2)|` over frame vectors.
    pub rnabla_g_residual: f64,
    /// `sup |tr(X ↦ pr_H[pr_V Y, pr_V[pr_H Y, pr_H X]])|` over unit
    /// `Y = (X_a + Z_b)/√2`.
    pub trace_residual: f64,
    /// Difference of the trace between the two extension strategies.
    pub trace_extension_defect: f64,
    /// `sup |g(X_a, Z_b)|`.
    pub orthogonality_residual: f64,
    /// `sup |R̄(Z_a, Z_b)|`, zero iff `V` is integrable.
    pub cocurvature_residual: f64,
    pub foliation_tol: f64,
    pub cross_tol: f64,
    pub verdicts: FoliationVerdicts,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoliationVerdicts {
    pub orthogonal: bool,
    pub v_integrable: bool,
    pub totally_geodesic: bool,
    pub riemannian_foliation: bool,
    pub rnabla_parallel: bool,
    pub trace_vanishes: bool,
}

#[derive(Clone, Copy, Debug, Default)]
struct PointResiduals {
    tg: f64,
    rf: f64,
    rg: f64,
    trace: f64,
    trace_defect: f64,
    orth: f64,
    cocurv: f64,
}

/// Trace-map probes per point; capped to keep the nested jets affordable.
const TRACE_PROBES: usize = 3;

fn point_residuals(geo: &Geometry, p: &Point) -> Result<PointResiduals> {
    let sj = geo.jet_at(p)?;
    let n = sj.dim();
    let k = sj.s.a.cols();
    let m = n - k;
    let hs: Vec<VJet<f64>> = (0..k).map(|a| sj.frame_jet(Subspace::H, a)).collect();
    let vs: Vec<VJet<f64>> = (0..m).map(|b| sj.frame_jet(Subspace::V, b)).collect();
    let mut r = PointResiduals::default();
    for x in &hs {
        for (b, z) in vs.iter().enumerate() {
            for w in &vs[b..] {
                r.tg = r.tg.max(sj.lie_derivative_metric_pair(x, z, w).abs());
            }
        }
    }
    for z in &vs {
        for (a, x) in hs.iter().enumerate() {
            for y in &hs[a..] {
                r.rf = r.rf.max(sj.lie_derivative_metric_pair(z, x, y).abs());
            }
        }
    }
    let all: Vec<&VJet<f64>> = hs.iter().chain(vs.iter()).collect();
    for u in &all {
        for (i, w1) in all.iter().enumerate() {
            for w2 in &all[i..] {
                let d = sj.metric_derivative(&u.v, w1, w2, |w| sj.rnabla(u, w));
                r.rg = r.rg.max(d.abs());
            }
        }
    }
    for x in &hs {
        for z in &vs {
            r.orth = r.orth.max(sj.s.g.bilinear(&x.v, &z.v).abs());
        }
    }
    for (a, z) in vs.iter().enumerate() {
        for w in &vs[a + 1..] {
            r.cocurv = r.cocurv.max(max_abs(&tensor_curvature(&sj, z, w, Subspace::V)));
        }
    }
    if k > 0 && m > 0 {
        let lifted: Vec<SplitJet<D1>> = (0..n)
            .map(|i| geo.split_jet::<D1>(p.chart, &seeded_axis::<f64>(&p.x, i)))
            .collect::<Result<_>>()?;
        for a in 0..k.min(TRACE_PROBES) {
            for b in 0..m.min(TRACE_PROBES) {
                let y: Vec<f64> = (0..n)
                    .map(|i| (sj.s.a[(i, a)] + sj.s.b[(i, b)]) / std::f64::consts::SQRT_2)
                    .collect();
                let t_const = trace_map(&sj, &lifted, &y, Extension::Constant);
                let t_frame = trace_map(&sj, &lifted, &y, Extension::FrameCoefficients);
                r.trace = r.trace.max(t_const.abs());
                r.trace_defect = r.trace_defect.max((t_const - t_frame).abs());
            }
        }
    }
    Ok(r)
}

/// `tr(X ↦ pr_H[pr_V Y, pr_V[pr_H Y, pr_H X]])` at the primal point.
/// `lifted[i]` is the split jet seeded along `e_i`, giving exact first
/// partials of the inner bracket field.
pub fn trace_map(sj: &SplitJet<f64>, lifted: &[SplitJet<D1>], y: &[f64], ext: Extension) -> f64 {
    let n = sj.dim();
    let yv = sj.project(Subspace::V, &sj.extend(y, ext));
    let mut trace = 0.0;
    for j in 0..n {
        let ej = crate::linalg::unit(n, j);
        // inner field W = pr_V[pr_H Y, pr_H X] and its partials
        let mut w = VJet {
            v: vec![0.0; n],
            d: vec![vec![0.0; n]; n],
        };
        for (i, lj) in lifted.iter().enumerate() {
            let yh = lj.project(Subspace::H, &lj.extend(y, ext));
            let xh = lj.project(Subspace::H, &lj.extend(&ej, ext));
            let inner = lj.s.pv.mul_vec(&lj.bracket(&yh, &xh));
            if i == 0 {
                w.v = inner.iter().map(|c| <f64 as Lift>::value(*c)).collect();
            }
            w.d[i] = inner.iter().map(|c| <f64 as Lift>::tangent(*c)).collect();
        }
        let out = sj.s.ph.mul_vec(&sj.bracket(&yv, &w));
        // coefficient of e_j in L(e_j); with the frame extension X = e_j at
        // the point as well, so the trace is basis-consistent
        trace += out[j];
    }
    trace
}

/// Runs every foliation diagnostic on `samples`, in parallel with an
/// order-independent sup reduction.
pub fn foliation_diagnostics(model: &ModelSpace, samples: &[Point], tol: &Tolerances) -> Result<FoliationReport> {
    if samples.is_empty() {
        return Err(GeoError::InvalidConfig("empty sample set".into()));
    }
    let rows: Vec<PointResiduals> = samples
        .par_iter()
        .map(|p| point_residuals(&model.geometry, p))
        .collect::<Result<_>>()?;
    let sup = |f: fn(&PointResiduals) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let (tg, rf, rg) = (sup(|r| r.tg), sup(|r| r.rf), sup(|r| r.rg));
    let (trace, defect) = (sup(|r| r.trace), sup(|r| r.trace_defect));
    let (orth, cocurv) = (sup(|r| r.orth), sup(|r| r.cocurv));
    let ft = tol.foliation_tol;
    Ok(FoliationReport {
        model: model.name.to_string(),
        samples: samples.len(),
        tg_residual: tg,
        rf_residual: rf,
        rnabla_g_residual: rg,
        trace_residual: trace,
        trace_extension_defect: defect,
        orthogonality_residual: orth,
        cocurvature_residual: cocurv,
        foliation_tol: ft,
        cross_tol: tol.cross_tol,
        verdicts: FoliationVerdicts {
            orthogonal: orth <= tol.frame_tol.max(ft),
            v_integrable: cocurv <= ft,
            totally_geodesic: tg <= ft,
            riemannian_foliation: rf <= ft,
            rnabla_parallel: rg <= ft,
            trace_vanishes: trace <= ft,
        },
    })
}

/// `∇̂` Christoffel-type operator applied at level `S`, for callers that
/// need the coefficients one derivative deeper.
pub fn coefficients_lifted<S: Lift>(geo: &Geometry, kind: ConnectionKind, chart: usize, x: &[S]) -> Result<Vec<Mat<S>>> {
    Ok(coefficients(&geo.split_jet::<S>(chart, x)?, kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{flat_split, heisenberg, warped_control};

    fn origin() -> Point {
        Point::new(0, vec![0.0; 3])
    }

    #[test]
    fn warped_christoffels_by_hand() {
        let m = warped_control();
        let c = christoffel(&m.geometry, &origin()).unwrap();
        assert!((c.gamma[2][(0, 2)] - 1.0).abs() < 1e-14);
        assert!((c.gamma[2][(2, 0)] - 1.0).abs() < 1e-14);
        assert!((c.gamma[0][(2, 2)] + 1.0).abs() < 1e-14);
        assert!(c.torsion_defect() < 1e-14);
    }

    #[test]
    fn flat_split_rnabla_is_flat() {
        let m = flat_split();
        let c = connection_at(&m.geometry, ConnectionKind::Rnabla, &Point::new(0, vec![0.3, -1.0, 2.0])).unwrap();
        assert!(c.gamma.iter().all(|g| g.max_abs() < 1e-15));
    }

    #[test]
    fn heisenberg_torsion_at_origin() {
        let m = heisenberg();
        let e = |i| TangentVec::new(origin(), crate::linalg::unit(3, i));
        let t = rnabla_torsion(&m.geometry, &e(0), &e(1), Extension::Constant).unwrap();
        assert!(crate::linalg::dist(&t.v, &[0.0, 0.0, -1.0]) < 1e-14);
    }

    #[test]
    fn warped_second_fundamental_form() {
        let m = warped_control();
        let z = TangentVec::new(origin(), vec![0.0, 0.0, 1.0]);
        let ii = second_fundamental_form(&m.geometry, &z, &[0.0, 0.0, 1.0], Extension::Constant).unwrap();
        assert!(crate::linalg::dist(&ii.v, &[-1.0, 0.0, 0.0]) < 1e-14);
    }

    #[test]
    fn warped_rnabla_metric_derivative() {
        let m = warped_control();
        for x0 in [0.0, 0.4, -0.7] {
            let p = Point::new(0, vec![x0, 0.2, 0.1]);
            let v = TangentVec::new(p, vec![1.0, 0.0, 0.0]);
            let d = covderiv_metric(&m.geometry, ConnectionKind::Rnabla, &v, &[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0], Extension::Constant).unwrap();
            assert!((d - 2.0 * (2.0 * x0).exp()).abs() < 1e-12, "{d}");
        }
    }
}
