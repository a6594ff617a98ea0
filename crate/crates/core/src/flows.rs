//! Hamiltonians `H^h`, `H^v`, `H^g` on the cotangent bundle, their vector
//! fields, Poisson brackets and flows with chart switching.
//!
//! Canonical equations for `H = ½ pᵀ s*(x) p`:
//! `ẋ = s* p`, `ṗ_i = −½ pᵀ (∂_i s*) p`.

use crate::config::Tolerances;
use crate::connections::{coefficients, cometric_derivative, dual_apply, torsion_contract, ConnectionKind};
use crate::error::{GeoError, Result};
use crate::geometry::{Atlas, CometricField, CotangentVec, Geometry, Hamiltonian, Point};
use crate::jet::{first_partials, ChartId};
use crate::linalg::{dist, dot, max_abs, Mat};
use serde::{Deserialize, Serialize};

/// A point `(x, p)` of `T*M` with the energy it started a flow with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: Point,
    pub p: Vec<f64>,
    pub energy_at_start: f64,
}

impl PhaseState {
    pub fn new(geo: &Geometry, which: Hamiltonian, x: Point, p: Vec<f64>) -> Self {
        let energy_at_start = hamiltonian_at(geo.cometric(which), &x, &p);
        PhaseState { x, p, energy_at_start }
    }

    pub fn covector(&self) -> CotangentVec {
        CotangentVec::new(self.x.clone(), self.p.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Rk4,
    Rk45Adaptive,
    ImplicitMidpoint,
}

impl Integrator {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rk4" => Some(Integrator::Rk4),
            "rk45" | "rk45_adaptive" => Some(Integrator::Rk45Adaptive),
            "implicit_midpoint" | "midpoint" => Some(Integrator::ImplicitMidpoint),
            _ => None,
        }
    }

    /// Classical order of the method.
    pub fn order(self) -> f64 {
        match self {
            Integrator::Rk4 => 4.0,
            Integrator::Rk45Adaptive => 5.0,
            Integrator::ImplicitMidpoint => 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub integrator: Integrator,
    /// Fixed step, or the initial step of the adaptive method.
    pub step: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_chart_switches: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            integrator: Integrator::Rk4,
            step: 1e-3,
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_chart_switches: 64,
        }
    }
}

impl FlowConfig {
    pub fn with_step(&self, step: f64) -> Self {
        FlowConfig { step, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.step > 0.0 && self.step.is_finite() && self.abs_tol > 0.0 && self.rel_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(GeoError::InvalidConfig(format!(
                "step and tolerances must be positive (step {}, abs_tol {}, rel_tol {})",
                self.step, self.abs_tol, self.rel_tol
            )))
        }
    }
}

/// `½ pᵀ s*(x) p`.
pub fn hamiltonian_at(s: &CometricField, x: &Point, p: &[f64]) -> f64 {
    0.5 * s.at::<f64>(x.chart, &x.x).bilinear(p, p)
}

pub fn hamiltonian(s: &CometricField, state: &PhaseState) -> f64 {
    hamiltonian_at(s, &state.x, &state.p)
}

/// Hamilton's equations at one chart point.
pub fn hamiltonian_rhs(s: &CometricField, chart: ChartId, x: &[f64], p: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (value, partials) = first_partials::<f64>(s.s_star.as_ref(), chart, x);
    let n = x.len();
    let sm = Mat::from_vec(n, n, value);
    let xdot = sm.mul_vec(p);
    let pdot = partials
        .into_iter()
        .map(|d| -0.5 * Mat::from_vec(n, n, d).bilinear(p, p))
        .collect();
    (xdot, pdot)
}

/// `(ẋ, ṗ)` of `H⃗^{s*}` at a state.
pub fn hamiltonian_vector_field(s: &CometricField, state: &CotangentVec) -> (Vec<f64>, Vec<f64>) {
    hamiltonian_rhs(s, state.base.chart, &state.base.x, &state.p)
}

/// Defect between the canonical `ṗ` and its connection form
/// `∇_ẋ p = −pT(ẋ, ·) − ½(∇_· s*)(p, p)` rewritten in coordinates, for
/// both the Levi-Civita connection and ∇̂. Both rows must vanish.
pub fn vector_field_cross_check(geo: &Geometry, which: Hamiltonian, state: &CotangentVec) -> Result<f64> {
    let s = geo.cometric(which);
    let x = &state.base;
    let p = &state.p;
    let (xdot, pdot) = hamiltonian_vector_field(s, state);
    let sj = geo.jet_at(x)?;
    let n = x.dim();
    let (sv, ds) = first_partials::<f64>(s.s_star.as_ref(), x.chart, &x.x);
    let sm = Mat::from_vec(n, n, sv);
    let dsm: Vec<Mat<f64>> = ds.into_iter().map(|d| Mat::from_vec(n, n, d)).collect();
    let mut worst: f64 = 0.0;
    for kind in [ConnectionKind::LeviCivita, ConnectionKind::Rnabla] {
        let gamma = coefficients(&sj, kind);
        let conn = dual_apply(&gamma, &xdot, p);
        let tor = torsion_contract(&gamma, &xdot, p);
        let cov = cometric_derivative(&gamma, &sm, &dsm, p);
        for k in 0..n {
            let predicted = conn[k] - tor[k] - 0.5 * cov[k];
            worst = worst.max((predicted - pdot[k]).abs());
        }
    }
    Ok(worst)
}

/// `{H1, H2} = Σ ∂_x H1 ∂_p H2 − ∂_p H1 ∂_x H2 = ẋ₁·ṗ₂ − ṗ₁·ẋ₂`.
pub fn poisson_bracket(s1: &CometricField, s2: &CometricField, state: &CotangentVec) -> f64 {
    let (x1, p1) = hamiltonian_vector_field(s1, state);
    let (x2, p2) = hamiltonian_vector_field(s2, state);
    dot(&x1, &p2) - dot(&p1, &x2)
}

/// Layout of an ODE state `[x | covectors | vectors]`, each block of chart dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub dim: usize,
    pub covectors: usize,
    pub vectors: usize,
}

impl Layout {
    pub fn len(&self) -> usize {
        self.dim * (1 + self.covectors + self.vectors)
    }

    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }
}

/// A time-dependent ODE on chart coordinates with tensorial payload.
pub trait ChartOde: Sync {
    fn layout(&self) -> Layout;
    fn rhs(&self, t: f64, chart: ChartId, y: &[f64]) -> Result<Vec<f64>>;
}

/// Moves an ODE state to another chart: `x` by the transition, covectors by
/// `J⁻ᵀ`, vectors by `J`.
pub fn change_chart(atlas: &Atlas, layout: Layout, from: ChartId, to: ChartId, y: &[f64]) -> Result<Vec<f64>> {
    let n = layout.dim;
    let (x_new, jac) = atlas
        .transition_jacobian(from, to, &y[..n])
        .ok_or_else(|| GeoError::InvalidConfig(format!("no transition from chart {from} to {to}")))?;
    let jt = jac.transpose();
    let mut out = x_new;
    for c in 0..layout.covectors {
        let blk = &y[n * (1 + c)..n * (2 + c)];
        let moved = jt.solve(blk).map_err(|_| GeoError::StepFailure {
            t: f64::NAN,
            reason: "singular transition Jacobian".into(),
        })?;
        out.extend(moved);
    }
    for v in 0..layout.vectors {
        let off = n * (1 + layout.covectors + v);
        out.extend(jac.mul_vec(&y[off..off + n]));
    }
    Ok(out)
}

/// End state of an integration and the chart switches it made.
#[derive(Clone, Debug, PartialEq)]
pub struct OdeEnd {
    pub chart: ChartId,
    pub y: Vec<f64>,
    pub switches: Vec<SwitchEvent>,
    pub steps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub t: f64,
    pub from: ChartId,
    pub to: ChartId,
}

fn finite(y: &[f64]) -> bool {
    y.iter().all(|c| c.is_finite())
}

fn lin(y: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

struct Stepper<'a, O: ChartOde + ?Sized> {
    ode: &'a O,
    cfg: &'a FlowConfig,
}

impl<O: ChartOde + ?Sized> Stepper<'_, O> {
    /// Increment of one RK4 step.
    fn rk4(&self, t: f64, chart: ChartId, y: &[f64], h: f64) -> Result<Vec<f64>> {
        let k1 = self.ode.rhs(t, chart, y)?;
        let k2 = self.ode.rhs(t + 0.5 * h, chart, &lin(y, 0.5 * h, &k1))?;
        let k3 = self.ode.rhs(t + 0.5 * h, chart, &lin(y, 0.5 * h, &k2))?;
        let k4 = self.ode.rhs(t + h, chart, &lin(y, h, &k3))?;
        Ok((0..y.len())
            .map(|i| h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]))
            .collect())
    }

    /// Increment of one implicit-midpoint step by fixed-point iteration.
    fn midpoint(&self, t: f64, chart: ChartId, y: &[f64], h: f64) -> Result<Vec<f64>> {
        let mut k = self.ode.rhs(t, chart, y)?;
        let scale = 1.0 + max_abs(y);
        for _ in 0..100 {
            let next = self.ode.rhs(t + 0.5 * h, chart, &lin(y, 0.5 * h, &k))?;
            let change = h * next.iter().zip(&k).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            k = next;
            if change <= 1e-15 * scale {
                return Ok(k.iter().map(|c| h * c).collect());
            }
        }
        Err(GeoError::StepFailure {
            t,
            reason: "implicit midpoint iteration did not converge".into(),
        })
    }

    /// Dormand–Prince 5(4): increment and scaled error estimate.
    fn dopri(&self, t: f64, chart: ChartId, y: &[f64], h: f64) -> Result<(Vec<f64>, f64)> {
        const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
        const A: [&[f64]; 6] = [
            &[1.0 / 5.0],
            &[3.0 / 40.0, 9.0 / 40.0],
            &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
            &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
            &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
            &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
        ];
        const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
        const B4: [f64; 7] = [
            5179.0 / 57600.0,
            0.0,
            7571.0 / 16695.0,
            393.0 / 640.0,
            -92097.0 / 339200.0,
            187.0 / 2100.0,
            1.0 / 40.0,
        ];
        let n = y.len();
        let mut ks: Vec<Vec<f64>> = vec![self.ode.rhs(t, chart, y)?];
        for s in 0..6 {
            let mut ys = y.to_vec();
            for (j, a) in A[s].iter().enumerate() {
                for i in 0..n {
                    ys[i] += h * a * ks[j][i];
                }
            }
            ks.push(self.ode.rhs(t + C[s] * h, chart, &ys)?);
        }
        let inc: Vec<f64> = (0..n).map(|i| h * (0..7).map(|s| B5[s] * ks[s][i]).sum::<f64>()).collect();
        let mut err: f64 = 0.0;
        for i in 0..n {
            let e = h * (0..7).map(|s| (B5[s] - B4[s]) * ks[s][i]).sum::<f64>();
            let sc = self.cfg.abs_tol + self.cfg.rel_tol * y[i].abs().max((y[i] + inc[i]).abs());
            err = err.max((e / sc).abs());
        }
        Ok((inc, err))
    }
}

/// Integrates from `t0` through the sorted `stops`, landing exactly on
/// each. Charts switch between steps; `observe` sees the start and every
/// accepted step. Returns the state at each stop.
#[allow(clippy::too_many_arguments)]
pub fn integrate<O: ChartOde + ?Sized>(
    atlas: &Atlas,
    ode: &O,
    chart0: ChartId,
    y0: &[f64],
    t0: f64,
    stops: &[f64],
    cfg: &FlowConfig,
    mut observe: impl FnMut(f64, ChartId, &[f64]),
) -> Result<Vec<OdeEnd>> {
    cfg.validate()?;
    let layout = ode.layout();
    let n = layout.dim;
    let stepper = Stepper { ode, cfg };
    let mut chart = chart0;
    let mut y = y0.to_vec();
    let mut comp = vec![0.0; y.len()];
    let mut t = t0;
    let mut switches = Vec::new();
    let mut steps = 0usize;
    let mut out = Vec::with_capacity(stops.len());
    atlas.check_point(&Point::new(chart, y[..n].to_vec()))?;
    observe(t, chart, &y);
    let mut h_adapt = cfg.step;
    for &stop in stops {
        let span = stop - t;
        let dir = if span < 0.0 { -1.0 } else { 1.0 };
        let fixed = |span: f64| -> (usize, f64) {
            let m = ((span.abs() / cfg.step) - 1e-9).ceil().max(1.0) as usize;
            (m, span / m as f64)
        };
        let (m_fixed, h_fixed) = fixed(span);
        let t_seg = t;
        let mut i = 0usize;
        while span != 0.0 && (t - stop) * dir < 0.0 {
            let (inc, t_next) = match cfg.integrator {
                Integrator::Rk4 | Integrator::ImplicitMidpoint => {
                    let t_next = if i + 1 == m_fixed { stop } else { t_seg + (i + 1) as f64 * h_fixed };
                    let h = t_next - t;
                    let inc = if cfg.integrator == Integrator::Rk4 {
                        stepper.rk4(t, chart, &y, h)?
                    } else {
                        stepper.midpoint(t, chart, &y, h)?
                    };
                    i += 1;
                    (inc, t_next)
                }
                Integrator::Rk45Adaptive => loop {
                    let remaining = (stop - t).abs();
                    let h = dir * h_adapt.min(remaining);
                    if h_adapt < 1e-14 * (1.0 + t.abs()) {
                        return Err(GeoError::StepFailure {
                            t,
                            reason: format!("adaptive step underflow (h = {h_adapt:.3e})"),
                        });
                    }
                    let (inc, err) = stepper.dopri(t, chart, &y, h)?;
                    let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    if err <= 1.0 && finite(&inc) {
                        let t_next = if h.abs() >= remaining { stop } else { t + h };
                        h_adapt *= factor;
                        break (inc, t_next);
                    }
                    h_adapt *= factor.min(0.9);
                },
            };
            // compensated update keeps roundoff below the truncation error
            for k in 0..y.len() {
                let d = inc[k] - comp[k];
                let s = y[k] + d;
                comp[k] = (s - y[k]) - d;
                y[k] = s;
            }
            t = t_next;
            steps += 1;
            if !finite(&y) {
                return Err(GeoError::StepFailure {
                    t,
                    reason: "non-finite state".into(),
                });
            }
            if let Some(target) = atlas.switch_target(&Point::new(chart, y[..n].to_vec())) {
                if switches.len() >= cfg.max_chart_switches {
                    return Err(GeoError::ChartExhausted {
                        max: cfg.max_chart_switches,
                    });
                }
                y = change_chart(atlas, layout, chart, target, &y)?;
                comp.iter_mut().for_each(|c| *c = 0.0);
                switches.push(SwitchEvent { t, from: chart, to: target });
                chart = target;
            }
            atlas.check_point(&Point::new(chart, y[..n].to_vec()))?;
            observe(t, chart, &y);
        }
        out.push(OdeEnd {
            chart,
            y: y.clone(),
            switches: switches.clone(),
            steps,
        });
    }
    Ok(out)
}

/// Hamilton's equations of one cometric.
pub struct HamiltonianOde<'a> {
    pub s: &'a CometricField,
}

impl ChartOde for HamiltonianOde<'_> {
    fn layout(&self) -> Layout {
        Layout {
            dim: self.s.dim(),
            covectors: 1,
            vectors: 0,
        }
    }

    fn rhs(&self, _t: f64, chart: ChartId, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.s.dim();
        let (mut xd, pd) = hamiltonian_rhs(self.s, chart, &y[..n], &y[n..]);
        xd.extend(pd);
        Ok(xd)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: Point,
    pub p: Vec<f64>,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub hamiltonian: Hamiltonian,
    pub samples: Vec<TrajectorySample>,
    pub switches: Vec<SwitchEvent>,
    /// `max |H(t) − H(0)|`.
    pub energy_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory has a start sample")
    }

    pub fn end_state(&self) -> CotangentVec {
        let s = self.last();
        CotangentVec::new(s.x.clone(), s.p.clone())
    }
}

/// Integrates `H⃗` from `state` for time `t`, recording every step.
pub fn flow(geo: &Geometry, which: Hamiltonian, state: &CotangentVec, t: f64, cfg: &FlowConfig) -> Result<Trajectory> {
    let s = geo.cometric(which);
    let ode = HamiltonianOde { s };
    let n = s.dim();
    let mut y0 = state.base.x.clone();
    y0.extend_from_slice(&state.p);
    let mut samples = Vec::new();
    let end = integrate(&geo.atlas, &ode, state.base.chart, &y0, 0.0, &[t], cfg, |t, chart, y| {
        let x = Point::new(chart, y[..n].to_vec());
        let energy = hamiltonian_at(s, &x, &y[n..]);
        samples.push(TrajectorySample {
            t,
            x,
            p: y[n..].to_vec(),
            energy,
        });
    })?;
    let e0 = samples[0].energy;
    let energy_drift = samples.iter().map(|s| (s.energy - e0).abs()).fold(0.0, f64::max);
    Ok(Trajectory {
        hamiltonian: which,
        samples,
        switches: end[0].switches.clone(),
        energy_drift,
    })
}

/// End state of a flow without recording the path.
pub fn flow_end(geo: &Geometry, which: Hamiltonian, state: &CotangentVec, t: f64, cfg: &FlowConfig) -> Result<CotangentVec> {
    flow_stops(geo, which, state, &[t], cfg).map(|mut v| v.pop().expect("one stop"))
}

/// States at each of the sorted times `stops`, sharing one integration.
pub fn flow_stops(geo: &Geometry, which: Hamiltonian, state: &CotangentVec, stops: &[f64], cfg: &FlowConfig) -> Result<Vec<CotangentVec>> {
    let s = geo.cometric(which);
    let n = s.dim();
    let mut y0 = state.base.x.clone();
    y0.extend_from_slice(&state.p);
    let ends = integrate(&geo.atlas, &HamiltonianOde { s }, state.base.chart, &y0, 0.0, stops, cfg, |_, _, _| {})?;
    Ok(ends
        .into_iter()
        .map(|e| CotangentVec::new(Point::new(e.chart, e.y[..n].to_vec()), e.y[n..].to_vec()))
        .collect())
}

/// Chart-invariant distance between two cotangent states: ambient base
/// distance, and covector components compared in the first state's chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateDistance {
    pub base: f64,
    pub covector: f64,
}

impl StateDistance {
    pub fn max(&self) -> f64 {
        self.base.max(self.covector)
    }
}

pub fn state_distance(atlas: &Atlas, a: &CotangentVec, b: &CotangentVec) -> StateDistance {
    let base = atlas.distance(&a.base, &b.base);
    let b_here = atlas.cotangent_to_chart(b, a.base.chart);
    StateDistance {
        base,
        covector: dist(&a.p, &b_here.p),
    }
}

/// Which commutation pattern to test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommutePair {
    /// `e^{sH⃗^h} ∘ e^{tH⃗^g}` against `e^{tH⃗^g} ∘ e^{sH⃗^h}`.
    HG,
    /// `e^{sH⃗^h} ∘ e^{tH⃗^v}` against `e^{tH⃗^v} ∘ e^{sH⃗^h}`.
    HV,
}

impl CommutePair {
    pub fn second(self) -> Hamiltonian {
        match self {
            CommutePair::HG => Hamiltonian::G,
            CommutePair::HV => Hamiltonian::V,
        }
    }
}

pub fn flow_commutation_residual(
    geo: &Geometry,
    pair: CommutePair,
    state: &CotangentVec,
    s: f64,
    t: f64,
    cfg: &FlowConfig,
) -> Result<StateDistance> {
    let other = pair.second();
    let a = flow_end(geo, Hamiltonian::H, &flow_end(geo, other, state, t, cfg)?, s, cfg)?;
    let b = flow_end(geo, other, &flow_end(geo, Hamiltonian::H, state, s, cfg)?, t, cfg)?;
    Ok(state_distance(&geo.atlas, &a, &b))
}

/// Five-point central derivative of uniformly spaced values.
fn five_point(v: [&[f64]; 5], h: f64) -> Vec<f64> {
    (0..v[0].len())
        .map(|i| (v[0][i] - 8.0 * v[1][i] + 8.0 * v[3][i] - v[4][i]) / (12.0 * h))
        .collect()
}

/// Stencil of five consecutive samples re-expressed in the chart of the middle one.
fn stencil(atlas: &Atlas, samples: &[TrajectorySample], mid: usize) -> Vec<CotangentVec> {
    let chart = samples[mid].x.chart;
    (mid - 2..=mid + 2)
        .map(|j| atlas.cotangent_to_chart(&CotangentVec::new(samples[j].x.clone(), samples[j].p.clone()), chart))
        .collect()
}

/// Sup residuals of the normal-geodesic equations along an `H^h` trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicResidual {
    pub connection: ConnectionKind,
    /// `sup |∇_γ̇λ + λT(γ̇, ·) + ½(∇_· h*)(λ, λ)|`.
    pub covector_equation: f64,
    /// `sup |γ̇ − ♯^h λ|`.
    pub velocity: f64,
    pub sample_times: usize,
}

impl GeodesicResidual {
    pub fn max(&self) -> f64 {
        self.covector_equation.max(self.velocity)
    }
}

/// Evaluates the normal-geodesic equations on a recorded trajectory, with
/// derivatives of the numerical path taken by a five-point stencil.
pub fn normal_geodesic_residual(geo: &Geometry, traj: &Trajectory, kind: ConnectionKind, max_samples: usize) -> Result<GeodesicResidual> {
    let s = geo.cometric(traj.hamiltonian);
    let samples = &traj.samples;
    let mut res = GeodesicResidual {
        connection: kind,
        covector_equation: 0.0,
        velocity: 0.0,
        sample_times: 0,
    };
    if samples.len() < 5 {
        return Ok(res);
    }
    let interior = samples.len() - 4;
    let stride = interior.div_ceil(max_samples.max(1)).max(1);
    for mid in (2..samples.len() - 2).step_by(stride) {
        let h = samples[mid + 1].t - samples[mid].t;
        if ((samples[mid].t - samples[mid - 1].t) - h).abs() > 1e-9 * h.abs()
            || ((samples[mid + 2].t - samples[mid + 1].t) - h).abs() > 1e-9 * h.abs()
        {
            continue;
        }
        let st = stencil(&geo.atlas, samples, mid);
        let xs: Vec<&[f64]> = st.iter().map(|c| c.base.x.as_slice()).collect();
        let ps: Vec<&[f64]> = st.iter().map(|c| c.p.as_slice()).collect();
        let xdot = five_point([xs[0], xs[1], xs[2], xs[3], xs[4]], h);
        let pdot = five_point([ps[0], ps[1], ps[2], ps[3], ps[4]], h);
        let here = &st[2];
        let sj = geo.jet_at(&here.base)?;
        let gamma = coefficients(&sj, kind);
        let n = here.base.dim();
        let (sv, ds) = first_partials::<f64>(s.s_star.as_ref(), here.base.chart, &here.base.x);
        let sm = Mat::from_vec(n, n, sv);
        let dsm: Vec<Mat<f64>> = ds.into_iter().map(|d| Mat::from_vec(n, n, d)).collect();
        let conn = dual_apply(&gamma, &xdot, &here.p);
        let tor = torsion_contract(&gamma, &xdot, &here.p);
        let cov = cometric_derivative(&gamma, &sm, &dsm, &here.p);
        let eq: Vec<f64> = (0..n).map(|k| pdot[k] - conn[k] + tor[k] + 0.5 * cov[k]).collect();
        let sharp = sm.mul_vec(&here.p);
        res.covector_equation = res.covector_equation.max(max_abs(&eq));
        res.velocity = res.velocity.max(dist(&xdot, &sharp));
        res.sample_times += 1;
    }
    Ok(res)
}

/// Residuals of a vertical flow `λ(t) = e^{tH⃗^v}(p)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerticalFlowReport {
    /// `sup |∇̂_γ̇ λ|`.
    pub rnabla_parallel: f64,
    /// `sup |γ̇ − ♯^v λ|`.
    pub velocity: f64,
    /// `sup |∇^g_γ̇ (pr_V^* λ)|`, present when fibers are declared totally geodesic.
    pub levi_civita_parallel: Option<f64>,
    /// `sup |π(γ(t)) − π(γ(0))|` in the base ambient space, when a submersion exists.
    pub fiber_drift: Option<f64>,
    pub energy_drift: f64,
}

pub fn vertical_flow_check(
    model: &crate::models::ModelSpace,
    state: &CotangentVec,
    t: f64,
    cfg: &FlowConfig,
    max_samples: usize,
) -> Result<VerticalFlowReport> {
    let geo = &model.geometry;
    let traj = flow(geo, Hamiltonian::V, state, t, cfg)?;
    let samples = &traj.samples;
    let mut rn: f64 = 0.0;
    let mut vel: f64 = 0.0;
    let mut lc: f64 = 0.0;
    if samples.len() >= 5 {
        let stride = (samples.len() - 4).div_ceil(max_samples.max(1)).max(1);
        for mid in (2..samples.len() - 2).step_by(stride) {
            let h = samples[mid + 1].t - samples[mid].t;
            let st = stencil(&geo.atlas, samples, mid);
            let xs: Vec<&[f64]> = st.iter().map(|c| c.base.x.as_slice()).collect();
            let ps: Vec<&[f64]> = st.iter().map(|c| c.p.as_slice()).collect();
            let xdot = five_point([xs[0], xs[1], xs[2], xs[3], xs[4]], h);
            let pdot = five_point([ps[0], ps[1], ps[2], ps[3], ps[4]], h);
            let here = &st[2];
            let sj = geo.jet_at(&here.base)?;
            let gh = coefficients(&sj, ConnectionKind::Rnabla);
            let conn = dual_apply(&gh, &xdot, &here.p);
            rn = rn.max((0..pdot.len()).map(|k| (pdot[k] - conn[k]).abs()).fold(0.0, f64::max));
            let vs = geo.v_star.at::<f64>(here.base.chart, &here.base.x);
            vel = vel.max(dist(&xdot, &vs.mul_vec(&here.p)));
            if model.declared.totally_geodesic {
                // μ = pr_V^* λ along the stencil, then its Levi-Civita derivative
                let mus: Vec<Vec<f64>> = st
                    .iter()
                    .map(|c| {
                        let sp = geo.split::<f64>(c.base.chart, &c.base.x)?;
                        Ok(sp.pv.tr_mul_vec(&c.p))
                    })
                    .collect::<Result<_>>()?;
                let mudot = five_point([&mus[0], &mus[1], &mus[2], &mus[3], &mus[4]], h);
                let c2 = dual_apply(&sj.gamma, &xdot, &mus[2]);
                lc = lc.max((0..mudot.len()).map(|k| (mudot[k] - c2[k]).abs()).fold(0.0, f64::max));
            }
        }
    }
    let fiber_drift = model.submersion.as_ref().map(|sub| {
        let b0 = sub.project_ambient(&samples[0].x);
        samples
            .iter()
            .map(|s| dist(&sub.project_ambient(&s.x), &b0))
            .fold(0.0, f64::max)
    });
    Ok(VerticalFlowReport {
        rnabla_parallel: rn,
        velocity: vel,
        levi_civita_parallel: model.declared.totally_geodesic.then_some(lc),
        fiber_drift,
        energy_drift: traj.energy_drift,
    })
}

/// Sup of `|{H^h, H^v}|` over the given states.
pub fn bracket_sup(geo: &Geometry, states: &[CotangentVec]) -> f64 {
    states
        .iter()
        .map(|s| poisson_bracket(&geo.h_star, &geo.v_star, s).abs())
        .fold(0.0, f64::max)
}

/// Energy additivity defect `|H^g − H^h − H^v|`.
pub fn additivity_defect(geo: &Geometry, state: &CotangentVec) -> f64 {
    let h = |w| hamiltonian_at(geo.cometric(w), &state.base, &state.p);
    (h(Hamiltonian::G) - h(Hamiltonian::H) - h(Hamiltonian::V)).abs()
}

/// Energy drift must stay within `energy_tol`.
pub fn energy_ok(traj: &Trajectory, tol: &Tolerances) -> bool {
    traj.energy_drift <= tol.energy_tol
}
