//! Sub-Riemannian and Riemannian exponentials, the factorization of one
//! through the other, projection agreement, horizontal lifts and the
//! principal-bundle checks.

use crate::connections::{coefficients, covderiv, ConnectionKind};
use crate::convergence::{LadderStudy, Rung};
use crate::error::{GeoError, Result};
use crate::flows::{flow, flow_end, hamiltonian_rhs, integrate, ChartOde, FlowConfig, Layout, TrajectorySample};
use crate::geometry::{christoffel_from, curvature, CotangentVec, Extension, Geometry, Hamiltonian, Point, Subspace, TangentVec};
use crate::jet::{first_partials, ChartFn, ChartId, FiniteDiff};
use crate::linalg::{dist, max_abs, vsub, Mat};
use crate::models::ModelSpace;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Default evaluation times.
pub const DEFAULT_T_GRID: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 1.0];

/// `exp^{sr}(x, t p)`: base point of the `H^h` flow after time `t`.
pub fn exp_sr(geo: &Geometry, x: &Point, p: &[f64], t: f64, cfg: &FlowConfig) -> Result<Point> {
    Ok(flow_end(geo, Hamiltonian::H, &CotangentVec::new(x.clone(), p.to_vec()), t, cfg)?.base)
}

/// `H^g` flow with vectors carried along by parallel transport of the
/// chosen connection: `ẇ = −Γ(ẋ, w)`.
pub struct GeodesicTransportOde<'a> {
    pub geo: &'a Geometry,
    pub vectors: usize,
    pub kind: ConnectionKind,
}

impl ChartOde for GeodesicTransportOde<'_> {
    fn layout(&self) -> Layout {
        Layout {
            dim: self.geo.dim(),
            covectors: 1,
            vectors: self.vectors,
        }
    }

    fn rhs(&self, _t: f64, chart: ChartId, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.geo.dim();
        let x = &y[..n];
        let (xd, pd) = hamiltonian_rhs(&self.geo.g_star, chart, x, &y[n..2 * n]);
        let mut out = xd.clone();
        out.extend(pd);
        if self.vectors > 0 {
            let gamma = match self.kind {
                ConnectionKind::LeviCivita => {
                    let gi = self.geo.g_star.at::<f64>(chart, x);
                    let (_, dg) = first_partials::<f64>(self.geo.metric.g.as_ref(), chart, x);
                    let dg: Vec<Mat<f64>> = dg.into_iter().map(|d| Mat::from_vec(n, n, d)).collect();
                    christoffel_from(&gi, &dg)
                }
                ConnectionKind::Rnabla => coefficients(&self.geo.split_jet::<f64>(chart, x)?, ConnectionKind::Rnabla),
            };
            for v in 0..self.vectors {
                let w = &y[n * (2 + v)..n * (3 + v)];
                out.extend(gamma.iter().map(|g| -g.bilinear(&xd, w)));
            }
        }
        Ok(out)
    }
}

/// Result of a Riemannian geodesic run `s ↦ exp^r(x, s v)`, `s ∈ [0, t]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicRun {
    pub end: Point,
    /// `γ̇(t)` in the chart of `end`.
    pub velocity: Vec<f64>,
    /// Transports `P_t w` of the requested vectors, in the chart of `end`.
    pub transported: Vec<Vec<f64>>,
    /// Recorded `(t, x, p)` when requested.
    pub samples: Vec<TrajectorySample>,
}

/// Riemannian geodesic with initial velocity `v` for time `t`, carrying
/// `transport` along by Levi-Civita parallel transport.
pub fn exp_r(geo: &Geometry, x: &Point, v: &[f64], t: f64, transport: &[Vec<f64>], cfg: &FlowConfig, record: bool) -> Result<GeodesicRun> {
    exp_r_with(geo, x, v, t, transport, ConnectionKind::LeviCivita, cfg, record)
}

/// [`exp_r`] with transport by the connection `kind`.
#[allow(clippy::too_many_arguments)]
pub fn exp_r_with(
    geo: &Geometry,
    x: &Point,
    v: &[f64],
    t: f64,
    transport: &[Vec<f64>],
    kind: ConnectionKind,
    cfg: &FlowConfig,
    record: bool,
) -> Result<GeodesicRun> {
    let n = geo.dim();
    let g = geo.metric.at::<f64>(x.chart, &x.x);
    let mut y0 = x.x.clone();
    y0.extend(g.mul_vec(v));
    for w in transport {
        y0.extend_from_slice(w);
    }
    let ode = GeodesicTransportOde {
        geo,
        vectors: transport.len(),
        kind,
    };
    let mut samples = Vec::new();
    let end = integrate(&geo.atlas, &ode, x.chart, &y0, 0.0, &[t], cfg, |t, chart, y| {
        if record {
            samples.push(TrajectorySample {
                t,
                x: Point::new(chart, y[..n].to_vec()),
                p: y[n..2 * n].to_vec(),
                energy: f64::NAN,
            });
        }
    })?
    .pop()
    .expect("one stop");
    let at = Point::new(end.chart, end.y[..n].to_vec());
    let velocity = geo.g_star.at::<f64>(at.chart, &at.x).mul_vec(&end.y[n..2 * n]);
    let transported = (0..transport.len())
        .map(|v| end.y[n * (2 + v)..n * (3 + v)].to_vec())
        .collect();
    for s in samples.iter_mut() {
        s.energy = crate::flows::hamiltonian_at(&geo.g_star, &s.x, &s.p);
    }
    Ok(GeodesicRun {
        end: at,
        velocity,
        transported,
        samples,
    })
}

/// `♯p = g* p` at `x`.
pub fn sharp_g(geo: &Geometry, x: &Point, p: &[f64]) -> Vec<f64> {
    geo.g_star.at::<f64>(x.chart, &x.x).mul_vec(p)
}

fn pr_v(geo: &Geometry, x: &Point, v: &[f64]) -> Result<Vec<f64>> {
    Ok(geo.split::<f64>(x.chart, &x.x)?.pv.mul_vec(v))
}

/// Both sides of the factorization at one time `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorizationPoint {
    pub t: f64,
    /// `|exp^{sr}(x,tp) − exp^r(exp^r(x,t♯p), −t pr_V P_t ♯p)|`.
    pub primary: f64,
    /// `|exp^{sr}(x,tp) − exp^r(exp^r(x, −t pr_V ♯p), t P̃_t ♯p)|` with
    /// `P̃` Levi-Civita transport along the vertical geodesic.
    pub alternate: f64,
    /// The same with `P̃` replaced by ∇̂-transport, which is what the
    /// vertical flow `e^{−tH⃗^v}` actually carries.
    pub alternate_rnabla: f64,
    /// `|P_t ♯p − γ̇(t)|`: transport of the initial velocity is the velocity.
    pub transport_check: f64,
}

/// Primary and alternate residuals at one time and step.
pub fn factorization_at(geo: &Geometry, x: &Point, p: &[f64], t: f64, cfg: &FlowConfig) -> Result<FactorizationPoint> {
    let sr = exp_sr(geo, x, p, t, cfg)?;
    let v0 = sharp_g(geo, x, p);

    let first = exp_r(geo, x, &v0, t, std::slice::from_ref(&v0), cfg, false)?;
    let y = &first.end;
    // the second leg starts from the numerically obtained point
    let w: Vec<f64> = pr_v(geo, y, &first.transported[0])?.iter().map(|c| -t * c).collect();
    let primary = exp_r(geo, y, &w, 1.0, &[], cfg, false)?.end;

    let u: Vec<f64> = pr_v(geo, x, &v0)?.iter().map(|c| -c).collect();
    let alt_first = exp_r(geo, x, &u, t, std::slice::from_ref(&v0), cfg, false)?;
    let w2: Vec<f64> = alt_first.transported[0].iter().map(|c| t * c).collect();
    let alternate = exp_r(geo, &alt_first.end, &w2, 1.0, &[], cfg, false)?.end;
    let hat_first = exp_r_with(geo, x, &u, t, std::slice::from_ref(&v0), ConnectionKind::Rnabla, cfg, false)?;
    let w3: Vec<f64> = hat_first.transported[0].iter().map(|c| t * c).collect();
    let alternate_rnabla = exp_r(geo, &hat_first.end, &w3, 1.0, &[], cfg, false)?.end;

    Ok(FactorizationPoint {
        t,
        primary: geo.atlas.distance(&sr, &primary),
        alternate: geo.atlas.distance(&sr, &alternate),
        alternate_rnabla: geo.atlas.distance(&sr, &alternate_rnabla),
        transport_check: dist(&first.transported[0], &first.velocity),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub model: String,
    pub x: Point,
    pub p: Vec<f64>,
    pub step: f64,
    pub points: Vec<FactorizationPoint>,
    /// Residual at the last grid time against step.
    pub primary_ladder: Option<LadderStudy>,
    pub alternate_ladder: Option<LadderStudy>,
}

impl FactorizationReport {
    pub fn sup_primary(&self) -> f64 {
        self.points.iter().map(|p| p.primary).fold(0.0, f64::max)
    }

    pub fn sup_alternate(&self) -> f64 {
        self.points.iter().map(|p| p.alternate).fold(0.0, f64::max)
    }
}

/// Residuals of both factorization forms on `t_grid`, and, when a ladder
/// is given, their convergence at the last grid time.
pub fn factorization_check(
    model: &ModelSpace,
    x: &Point,
    p: &[f64],
    t_grid: &[f64],
    cfg: &FlowConfig,
    ladder: Option<&[f64]>,
) -> Result<FactorizationReport> {
    if !model.declared.v_integrable {
        return Err(GeoError::FoliationNotDeclared(model.name.to_string()));
    }
    let geo = &model.geometry;
    let points = t_grid
        .iter()
        .map(|&t| factorization_at(geo, x, p, t, cfg))
        .collect::<Result<Vec<_>>>()?;
    let (primary_ladder, alternate_ladder) = match (ladder, t_grid.last()) {
        (Some(steps), Some(&t)) => {
            let rows = steps
                .iter()
                .map(|&h| factorization_at(geo, x, p, t, &cfg.with_step(h)))
                .collect::<Result<Vec<_>>>()?;
            let study = |f: fn(&FactorizationPoint) -> f64| {
                LadderStudy::new(
                    steps
                        .iter()
                        .zip(&rows)
                        .map(|(&step, r)| Rung { step, residual: f(r) })
                        .collect(),
                )
            };
            (Some(study(|r| r.primary)?), Some(study(|r| r.alternate)?))
        }
        _ => (None, None),
    };
    Ok(FactorizationReport {
        model: model.name.to_string(),
        x: x.clone(),
        p: p.to_vec(),
        step: cfg.step,
        points,
        primary_ladder,
        alternate_ladder,
    })
}

/// A curve in the base's ambient space known at uniformly spaced samples
/// with velocities; evaluated between samples by cubic Hermite interpolation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseCurve {
    pub t0: f64,
    pub dt: f64,
    pub points: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
}

impl BaseCurve {
    /// Samples `f(s) = (b, ḃ)` at `samples + 1` uniformly spaced times.
    pub fn from_fn(t0: f64, t1: f64, samples: usize, f: impl Fn(f64) -> (Vec<f64>, Vec<f64>)) -> Self {
        let dt = (t1 - t0) / samples as f64;
        let (points, velocities) = (0..=samples).map(|i| f(t0 + i as f64 * dt)).unzip();
        BaseCurve {
            t0,
            dt,
            points,
            velocities,
        }
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.dt * (self.points.len() - 1) as f64
    }

    /// `(b(s), ḃ(s))`.
    pub fn at(&self, s: f64) -> (Vec<f64>, Vec<f64>) {
        let last = self.points.len() - 1;
        let u = ((s - self.t0) / self.dt).clamp(0.0, last as f64);
        let i = (u.floor() as usize).min(last.saturating_sub(1));
        let r = u - i as f64;
        if last == 0 || r == 0.0 {
            return (self.points[i].clone(), self.velocities[i].clone());
        }
        if (r - 1.0).abs() < 1e-12 {
            return (self.points[i + 1].clone(), self.velocities[i + 1].clone());
        }
        let h = self.dt;
        let (p0, p1, m0, m1) = (&self.points[i], &self.points[i + 1], &self.velocities[i], &self.velocities[i + 1]);
        let (r2, r3) = (r * r, r * r * r);
        let (h00, h10, h01, h11) = (2.0 * r3 - 3.0 * r2 + 1.0, r3 - 2.0 * r2 + r, -2.0 * r3 + 3.0 * r2, r3 - r2);
        let (d00, d10, d01, d11) = (6.0 * r2 - 6.0 * r, 3.0 * r2 - 4.0 * r + 1.0, -6.0 * r2 + 6.0 * r, 3.0 * r2 - 2.0 * r);
        let b = (0..p0.len())
            .map(|k| h00 * p0[k] + h10 * h * m0[k] + h01 * p1[k] + h11 * h * m1[k])
            .collect();
        let db = (0..p0.len())
            .map(|k| (d00 * p0[k] + d01 * p1[k]) / h + d10 * m0[k] + d11 * m1[k])
            .collect();
        (b, db)
    }
}

/// `π ∘ γ` of a recorded trajectory with velocities `Dπ γ̇`, where `γ̇ = s* p`.
pub fn projected_curve(model: &ModelSpace, which: Hamiltonian, samples: &[TrajectorySample]) -> Result<BaseCurve> {
    let sub = model
        .submersion
        .as_ref()
        .ok_or_else(|| GeoError::SubmersionNotDeclared(model.name.to_string()))?;
    let s = model.geometry.cometric(which);
    let mut points = Vec::with_capacity(samples.len());
    let mut velocities = Vec::with_capacity(samples.len());
    for smp in samples {
        let xdot = s.at::<f64>(smp.x.chart, &smp.x.x).mul_vec(&smp.p);
        let (b, db) = crate::jet::directional::<f64>(sub.pi_ambient.as_ref(), smp.x.chart, &smp.x.x, &xdot);
        points.push(b);
        velocities.push(db);
    }
    let dt = if samples.len() > 1 { samples[1].t - samples[0].t } else { 1.0 };
    Ok(BaseCurve {
        t0: samples.first().map_or(0.0, |s| s.t),
        dt,
        points,
        velocities,
    })
}

/// `h ν = A ((JA)ᵀ(JA))⁻¹ (JA)ᵀ ν` with `J = Dπ` into the base ambient space.
pub fn horizontal_lift_vector(model: &ModelSpace, chart: ChartId, x: &[f64], nu: &[f64]) -> Result<(Vec<f64>, f64)> {
    let sub = model
        .submersion
        .as_ref()
        .ok_or_else(|| GeoError::SubmersionNotDeclared(model.name.to_string()))?;
    let a = model.geometry.frame.at::<f64>(Subspace::H, chart, x);
    let (_, cols) = first_partials::<f64>(sub.pi_ambient.as_ref(), chart, x);
    let m = sub.ambient_dim();
    let jac = Mat::from_fn(m, x.len(), |i, k| cols[k][i]);
    let ja = jac.matmul(&a);
    let normal = ja.transpose().matmul(&ja);
    let c = normal.solve(&ja.tr_mul_vec(nu)).map_err(|_| GeoError::LiftDiverged {
        t: f64::NAN,
        reason: "Dπ restricted to H is singular".into(),
    })?;
    let defect = dist(&ja.mul_vec(&c), nu);
    Ok((a.mul_vec(&c), defect))
}

struct LiftOde<'a> {
    model: &'a ModelSpace,
    curve: &'a BaseCurve,
}

impl ChartOde for LiftOde<'_> {
    fn layout(&self) -> Layout {
        Layout {
            dim: self.model.dim(),
            covectors: 0,
            vectors: 0,
        }
    }

    fn rhs(&self, t: f64, chart: ChartId, y: &[f64]) -> Result<Vec<f64>> {
        let (_, nu) = self.curve.at(t);
        horizontal_lift_vector(self.model, chart, y, &nu)
            .map(|(v, _)| v)
            .map_err(|e| match e {
                GeoError::LiftDiverged { reason, .. } => GeoError::LiftDiverged { t, reason },
                other => other,
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lift {
    /// Lifted points at the requested stops.
    pub points: Vec<Point>,
    /// `sup |π(γ(s)) − b(s)|` over integrator nodes.
    pub tracking: f64,
    /// `sup |Dπ h ν − ν|`: the part of `ḃ` not reachable horizontally.
    pub normal_defect: f64,
}

/// Solves `γ̇ = h_γ ḃ` from `x0` and reports the lift at each of `stops`.
pub fn horizontal_lift(model: &ModelSpace, curve: &BaseCurve, x0: &Point, stops: &[f64], cfg: &FlowConfig) -> Result<Lift> {
    let sub = model
        .submersion
        .as_ref()
        .ok_or_else(|| GeoError::SubmersionNotDeclared(model.name.to_string()))?;
    let start_gap = dist(&sub.project_ambient(x0), &curve.points[0]);
    if start_gap > 1e-6 {
        return Err(GeoError::InvalidConfig(format!(
            "lift start does not project to the curve start (gap {start_gap:.3e})"
        )));
    }
    let ode = LiftOde { model, curve };
    let mut tracking: f64 = 0.0;
    let mut normal_defect: f64 = 0.0;
    let mut failure = None;
    let ends = integrate(&model.geometry.atlas, &ode, x0.chart, &x0.x, curve.t0, stops, cfg, |t, chart, y| {
        let (b, nu) = curve.at(t);
        tracking = tracking.max(dist(&sub.pi_ambient.eval_f64(chart, y), &b));
        match horizontal_lift_vector(model, chart, y, &nu) {
            Ok((_, d)) => normal_defect = normal_defect.max(d),
            Err(e) => failure = failure.take().or(Some(e)),
        }
    })
    .map_err(|e| match e {
        GeoError::StepFailure { t, reason } => GeoError::LiftDiverged { t, reason },
        other => other,
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(Lift {
        points: ends.into_iter().map(|e| Point::new(e.chart, e.y)).collect(),
        tracking,
        normal_defect,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionPoint {
    pub t: f64,
    /// `|π(exp^{sr}(x,tp)) − π(exp^r(x,t♯p))|` in the base ambient space.
    pub agreement: f64,
    /// `|exp^{sr}(x,tp) − lift of π ∘ exp^r(x, ·♯p) at t|`.
    pub lift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub model: String,
    pub x: Point,
    pub p: Vec<f64>,
    pub step: f64,
    pub points: Vec<ProjectionPoint>,
    pub lift_tracking: f64,
    pub lift_normal_defect: f64,
}

impl ProjectionReport {
    pub fn sup_agreement(&self) -> f64 {
        self.points.iter().map(|p| p.agreement).fold(0.0, f64::max)
    }

    pub fn sup_lift(&self) -> f64 {
        self.points.iter().map(|p| p.lift).fold(0.0, f64::max)
    }
}

/// Compares the projections of both exponentials on `t_grid` and lifts the
/// projected Riemannian geodesic back horizontally.
pub fn projection_agreement(model: &ModelSpace, x: &Point, p: &[f64], t_grid: &[f64], cfg: &FlowConfig) -> Result<ProjectionReport> {
    let sub = model
        .submersion
        .as_ref()
        .ok_or_else(|| GeoError::SubmersionNotDeclared(model.name.to_string()))?;
    let geo = &model.geometry;
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let mut grid = t_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let state = CotangentVec::new(x.clone(), p.to_vec());
    let sr_ends = crate::flows::flow_stops(geo, Hamiltonian::H, &state, &grid, cfg)?;
    // base curve sampled at a quarter step keeps interpolation below the integrator error
    let fine = cfg.with_step(cfg.step / 4.0);
    let riem = flow(geo, Hamiltonian::G, &state, t_max, &fine)?;
    let curve = projected_curve(model, Hamiltonian::G, &riem.samples)?;
    let lift = horizontal_lift(model, &curve, x, &grid, cfg)?;
    let mut points = Vec::with_capacity(grid.len());
    for (i, &t) in grid.iter().enumerate() {
        let (b_r, _) = curve.at(t);
        let b_sr = sub.project_ambient(&sr_ends[i].base);
        points.push(ProjectionPoint {
            t,
            agreement: dist(&b_sr, &b_r),
            lift: geo.atlas.distance(&sr_ends[i].base, &lift.points[i]),
        });
    }
    Ok(ProjectionReport {
        model: model.name.to_string(),
        x: x.clone(),
        p: p.to_vec(),
        step: cfg.step,
        points,
        lift_tracking: lift.tracking,
        lift_normal_defect: lift.normal_defect,
    })
}

fn bundle_of(model: &ModelSpace) -> Result<&Arc<dyn crate::models::PrincipalBundle>> {
    match (&model.bundle, model.declared.principal_bundle) {
        (Some(b), true) => Ok(b),
        _ => Err(GeoError::NotPrincipalBundle(model.name.to_string())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeReport {
    pub model: String,
    pub x: Point,
    pub p: Vec<f64>,
    pub step: f64,
    /// `ω(♯p)`.
    pub omega: Vec<f64>,
    /// `(t, |exp^{sr}(x,tp) − exp^r(x,t♯p)·exp^G(−tω(♯p))|)`.
    pub residuals: Vec<(f64, f64)>,
    /// `sup_s |ω(γ̇(s)) − ω(γ̇(0))|` along `exp^r(x, s♯p)`.
    pub omega_deviation: f64,
    /// `|exp^r(x, v) − x·exp^G(ω(v))|` for a vertical `v`.
    pub fiber_geodesic: f64,
}

impl GaugeReport {
    pub fn sup_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

pub fn gauge_formula_check(model: &ModelSpace, x: &Point, p: &[f64], t_grid: &[f64], cfg: &FlowConfig) -> Result<GaugeReport> {
    let bundle = bundle_of(model)?;
    let geo = &model.geometry;
    let v0 = sharp_g(geo, x, p);
    let omega = bundle.connection_form(x, &v0);
    let mut residuals = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let sr = exp_sr(geo, x, p, t, cfg)?;
        let r = exp_r(geo, x, &v0, t, &[], cfg, false)?.end;
        let a: Vec<f64> = omega.iter().map(|c| -t * c).collect();
        residuals.push((t, geo.atlas.distance(&sr, &bundle.act(&r, &a))));
    }
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let run = exp_r(geo, x, &v0, t_max, &[], cfg, true)?;
    let omega_deviation = run
        .samples
        .iter()
        .map(|s| {
            let v = sharp_g(geo, &s.x, &s.p);
            dist(&bundle.connection_form(&s.x, &v), &omega)
        })
        .fold(0.0, f64::max);
    // a pure fiber direction: 0.7 ξ_0 at x
    let xi = bundle.fundamental_field(0).eval_f64(x.chart, &x.x);
    let v: Vec<f64> = xi.iter().map(|c| 0.7 * c).collect();
    let along = exp_r(geo, x, &v, 1.0, &[], cfg, false)?.end;
    let fiber_geodesic = geo.atlas.distance(&along, &bundle.act(x, &bundle.connection_form(x, &v)));
    Ok(GaugeReport {
        model: model.name.to_string(),
        x: x.clone(),
        p: p.to_vec(),
        step: cfg.step,
        omega,
        residuals,
        omega_deviation,
        fiber_geodesic,
    })
}

/// Basic horizontal lift of the base coordinate field `∂_{b_i}`:
/// `A (J_b A)⁻¹ e_i` with `J_b` the Jacobian of `π` into the base chart.
fn basic_lift_value(model: &ModelSpace, chart: ChartId, x: &[f64], i: usize) -> Vec<f64> {
    let sub = model.submersion.as_ref().expect("submersion checked by caller");
    let a = model.geometry.frame.at::<f64>(Subspace::H, chart, x);
    let (_, cols) = first_partials::<f64>(sub.pi.as_ref(), chart, x);
    let k = sub.base_dim;
    let jb = Mat::from_fn(k, x.len(), |r, c| cols[c][r]);
    let e = crate::linalg::unit(k, i);
    match jb.matmul(&a).solve(&e) {
        Ok(c) => a.mul_vec(&c),
        Err(_) => vec![f64::NAN; x.len()],
    }
}

fn basic_lift_field(model: &ModelSpace, i: usize) -> Arc<dyn ChartFn> {
    let m = model.clone();
    let n = model.dim();
    Arc::new(FiniteDiff::new((n, 1), move |chart, x| basic_lift_value(&m, chart, x, i)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LcpbReport {
    pub model: String,
    pub samples: usize,
    /// `sup |∇_{hX}hY − h∇̌_X Y − ½R(hX, hY)|`.
    pub horizontal: f64,
    /// `sup |∇_{hX}ξ_A + ½♯g(ξ_A, R(hX, ·))|`.
    pub horizontal_vertical: f64,
    /// `sup |∇_{ξ_A}hX + ½♯g(ξ_A, R(hX, ·))|`.
    pub vertical_horizontal: f64,
    /// `sup |∇_{ξ_A}ξ_B − ½ξ_{[A,B]}|`.
    pub vertical: f64,
}

impl LcpbReport {
    pub fn max(&self) -> f64 {
        self.horizontal
            .max(self.horizontal_vertical)
            .max(self.vertical_horizontal)
            .max(self.vertical)
    }
}

#[derive(Clone, Copy, Default)]
struct LcpbRow {
    hh: f64,
    hv: f64,
    vh: f64,
    vv: f64,
}

/// Base chart coordinates further out than this are skipped: the basic
/// lifts of coordinate fields degenerate near the base chart's pole.
const BASE_CHART_LIMIT: f64 = 3.0;

/// Evaluates the Levi-Civita relations of a principal bundle metric at
/// `samples`, both sides computed independently.
pub fn lcpb_relations_check(model: &ModelSpace, samples: &[Point]) -> Result<LcpbReport> {
    let bundle = bundle_of(model)?;
    let sub = model
        .submersion
        .as_ref()
        .ok_or_else(|| GeoError::SubmersionNotDeclared(model.name.to_string()))?;
    let geo = &model.geometry;
    let k = sub.base_dim;
    let gd = bundle.group_dim();
    let lifts: Vec<Arc<dyn ChartFn>> = (0..k).map(|i| basic_lift_field(model, i)).collect();
    let xis: Vec<Arc<dyn ChartFn>> = (0..gd).map(|a| bundle.fundamental_field(a)).collect();
    let usable: Vec<&Point> = samples
        .iter()
        .filter(|x| crate::linalg::norm(&sub.project(x)) <= BASE_CHART_LIMIT)
        .collect();
    let rows = usable
        .par_iter()
        .map(|x| -> Result<LcpbRow> {
            let n = x.dim();
            let lc = |a: &dyn ChartFn, b: &dyn ChartFn| covderiv(geo, ConnectionKind::LeviCivita, a, b, x).map(|t| t.v);
            let hx: Vec<Vec<f64>> = lifts.iter().map(|f| f.eval_f64(x.chart, &x.x)).collect();
            let xi: Vec<Vec<f64>> = xis.iter().map(|f| f.eval_f64(x.chart, &x.x)).collect();
            let tv = |v: &[f64]| TangentVec::new((*x).clone(), v.to_vec());
            let curv = |u: &[f64], w: &[f64]| curvature(geo, &tv(u), &tv(w), Extension::FrameCoefficients).map(|t| t.v);
            // base Levi-Civita symbols at π(x)
            let b = sub.project(x);
            let (gb, dgb) = first_partials::<f64>(sub.base_metric.as_ref(), 0, &b);
            let gb = Mat::from_vec(k, k, gb);
            let dgb: Vec<Mat<f64>> = dgb.into_iter().map(|d| Mat::from_vec(k, k, d)).collect();
            let gbi = gb.inverse().map_err(|_| GeoError::MetricDegenerate {
                chart: 0,
                x: b.clone(),
                pivot: 0.0,
            })?;
            let gam_b = christoffel_from(&gbi, &dgb);
            let g = geo.metric.at::<f64>(x.chart, &x.x);
            let gi = geo.g_star.at::<f64>(x.chart, &x.x);
            let mut row = LcpbRow::default();
            for i in 0..k {
                for j in 0..k {
                    let lhs = lc(lifts[i].as_ref(), lifts[j].as_ref())?;
                    let r = curv(&hx[i], &hx[j])?;
                    let mut rhs: Vec<f64> = r.iter().map(|c| 0.5 * c).collect();
                    for (l, gl) in gam_b.iter().enumerate() {
                        let c = gl[(i, j)];
                        for m in 0..n {
                            rhs[m] += c * hx[l][m];
                        }
                    }
                    row.hh = row.hh.max(max_abs(&vsub(&lhs, &rhs)));
                }
                for a in 0..gd {
                    // covector e_m ↦ g(ξ_A, R(hX, e_m)), raised by g⁻¹
                    let gx = g.mul_vec(&xi[a]);
                    let cov = (0..n)
                        .map(|m| curv(&hx[i], &crate::linalg::unit(n, m)).map(|r| crate::linalg::dot(&gx, &r)))
                        .collect::<Result<Vec<f64>>>()?;
                    let rhs: Vec<f64> = gi.mul_vec(&cov).iter().map(|c| -0.5 * c).collect();
                    let hv = lc(lifts[i].as_ref(), xis[a].as_ref())?;
                    let vh = lc(xis[a].as_ref(), lifts[i].as_ref())?;
                    row.hv = row.hv.max(max_abs(&vsub(&hv, &rhs)));
                    row.vh = row.vh.max(max_abs(&vsub(&vh, &rhs)));
                }
            }
            for a in 0..gd {
                for bb in 0..gd {
                    let lhs = lc(xis[a].as_ref(), xis[bb].as_ref())?;
                    let br = bundle.lie_bracket(&crate::linalg::unit(gd, a), &crate::linalg::unit(gd, bb));
                    let mut rhs = vec![0.0; n];
                    for (c, coef) in br.iter().enumerate() {
                        for m in 0..n {
                            rhs[m] += 0.5 * coef * xi[c][m];
                        }
                    }
                    row.vv = row.vv.max(max_abs(&vsub(&lhs, &rhs)));
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let sup = |f: fn(&LcpbRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    Ok(LcpbReport {
        model: model.name.to_string(),
        samples: rows.len(),
        horizontal: sup(|r| r.hh),
        horizontal_vertical: sup(|r| r.hv),
        vertical_horizontal: sup(|r| r.vh),
        vertical: sup(|r| r.vv),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{flat_split, heisenberg, hopf_s3, warped_control};

    fn origin() -> Point {
        Point::new(0, vec![0.0; 3])
    }

    #[test]
    fn zero_time_is_identity() {
        let m = heisenberg();
        let x = Point::new(0, vec![0.3, -0.2, 0.1]);
        assert_eq!(exp_sr(&m.geometry, &x, &[1.0, 2.0, 3.0], 0.0, &FlowConfig::default()).unwrap(), x);
    }

    #[test]
    fn annihilator_covector_is_constant_curve() {
        let m = heisenberg();
        let x = Point::new(0, vec![0.3, -0.2, 0.1]);
        // p(X) = p(Y) = 0 at x
        let y = exp_sr(&m.geometry, &x, &[-0.1, -0.15, 1.0], 2.0, &FlowConfig::default()).unwrap();
        assert!(dist(&x.x, &y.x) < 1e-15);
    }

    #[test]
    fn heisenberg_sr_matches_closed_form() {
        let m = heisenberg();
        let y = exp_sr(&m.geometry, &origin(), &[1.0, 0.0, 1.0], 1.0, &FlowConfig::default()).unwrap();
        let exact = crate::models::heisenberg_geodesic(&[0.0; 3], &[1.0, 0.0, 1.0], 1.0);
        assert!(dist(&y.x, &exact) < 1e-10, "{:?} {:?}", y.x, exact);
    }

    #[test]
    fn sphere_pole_to_antipode() {
        let m = hopf_s3();
        let x = m.canonical.x.clone();
        // unit velocity in the round metric: g = 4I at the chart origin
        let v = vec![0.5, 0.0, 0.0];
        let run = exp_r(&m.geometry, &x, &v, std::f64::consts::PI, &[], &FlowConfig::default(), false).unwrap();
        let y = m.geometry.atlas.embed(&run.end);
        assert!(dist(&y, &[-1.0, 0.0, 0.0, 0.0]) < 1e-6, "{y:?}");
    }

    #[test]
    fn transport_is_isometric() {
        let m = hopf_s3();
        let x = m.interesting[2].clone();
        let v = vec![0.3, -0.1, 0.2];
        let w = vec![0.1, 0.4, -0.3];
        let run = exp_r(&m.geometry, &x, &v, 2.0, &[v.clone(), w.clone()], &FlowConfig::default(), false).unwrap();
        let g0 = m.geometry.metric.at::<f64>(x.chart, &x.x);
        let g1 = m.geometry.metric.at::<f64>(run.end.chart, &run.end.x);
        let (a, b) = (&run.transported[0], &run.transported[1]);
        assert!((g0.bilinear(&v, &w) - g1.bilinear(a, b)).abs() < 1e-9);
        assert!((g0.bilinear(&w, &w) - g1.bilinear(b, b)).abs() < 1e-9);
        assert!(dist(a, &run.velocity) < 1e-9);
    }

    #[test]
    fn flat_annihilator_of_v_reduces_to_riemannian() {
        let m = flat_split();
        let p = vec![0.4, -0.7, 0.0];
        let r = factorization_check(&m, &origin(), &p, &[0.5, 1.0], &FlowConfig::default(), None).unwrap();
        assert!(r.sup_primary() < 1e-13 && r.sup_alternate() < 1e-13, "{r:?}");
    }

    #[test]
    fn heisenberg_factorizes() {
        let m = heisenberg();
        let r = factorization_check(&m, &origin(), &[1.0, 0.0, 1.0], &[0.25, 0.5, 1.0], &FlowConfig::default(), None).unwrap();
        assert!(r.sup_primary() < 1e-6, "{r:?}");
        let hat = r.points.iter().map(|p| p.alternate_rnabla).fold(0.0, f64::max);
        assert!(hat < 1e-6, "{r:?}");
        // Levi-Civita transport rotates the horizontal part along the fiber
        assert!(r.points[2].alternate > 0.1, "{r:?}");
    }

    #[test]
    fn warped_does_not_factorize() {
        let m = warped_control();
        let r = factorization_check(&m, &origin(), &[1.0, 0.0, 1.0], &[1.0], &FlowConfig::default(), None).unwrap();
        assert!(r.points[0].primary > 1e-2, "{r:?}");
    }

    #[test]
    fn heisenberg_circle_lift_encloses_pi() {
        let m = heisenberg();
        let two_pi = 2.0 * std::f64::consts::PI;
        let curve = BaseCurve::from_fn(0.0, two_pi, 8000, |s| (vec![s.cos() - 1.0, s.sin()], vec![-s.sin(), s.cos()]));
        let lift = horizontal_lift(&m, &curve, &origin(), &[two_pi], &FlowConfig::default()).unwrap();
        let z = lift.points[0].x[2];
        assert!((z - std::f64::consts::PI).abs() < 1e-6, "{z}");
        assert!(lift.tracking < 1e-9);
    }

    #[test]
    fn constant_curve_lifts_to_constant() {
        let m = heisenberg();
        let x = Point::new(0, vec![0.2, 0.3, 0.4]);
        let curve = BaseCurve::from_fn(0.0, 1.0, 10, |_| (vec![0.2, 0.3], vec![0.0, 0.0]));
        let lift = horizontal_lift(&m, &curve, &x, &[1.0], &FlowConfig::default()).unwrap();
        assert_eq!(lift.points[0], x);
    }

    #[test]
    fn projections_agree_on_heisenberg_only() {
        let cfg = FlowConfig::default();
        let r = projection_agreement(&heisenberg(), &origin(), &[1.0, 0.0, 1.0], &[0.5, 1.0], &cfg).unwrap();
        assert!(r.sup_agreement() < 1e-6 && r.sup_lift() < 1e-6, "{r:?}");
        let w = projection_agreement(&warped_control(), &origin(), &[1.0, 0.0, 1.0], &[1.0], &cfg).unwrap();
        assert!(w.sup_agreement() > 5e-3, "{w:?}");
    }

    #[test]
    fn hopf_gauge_formula() {
        let m = hopf_s3();
        let r = gauge_formula_check(&m, &m.canonical.x, &m.canonical.p, &[0.5, 1.0], &FlowConfig::default()).unwrap();
        assert!((r.omega[0] - 0.5).abs() < 1e-12, "{r:?}");
        assert!(r.sup_residual() < 1e-6, "{r:?}");
        assert!(r.omega_deviation < 1e-8, "{r:?}");
        assert!(r.fiber_geodesic < 1e-8, "{r:?}");
    }

    #[test]
    fn octonionic_model_has_no_gauge_check() {
        let m = crate::models::octonionic_hopf();
        let err = gauge_formula_check(&m, &m.canonical.x, &m.canonical.p, &[1.0], &FlowConfig::default()).unwrap_err();
        assert!(matches!(err, GeoError::NotPrincipalBundle(_)));
    }

    #[test]
    fn hopf_levi_civita_relations() {
        let m = hopf_s3();
        let pts = crate::sampling::diagnostic_points(&m, 6);
        let r = lcpb_relations_check(&m, &pts).unwrap();
        assert!(r.samples >= 6);
        assert!(r.max() < 1e-6, "{r:?}");
    }
}
