//! Verification suites: each runs an identity on a model, decides whether
//! it holds, and compares that with what the model declares. A negative
//! control passes by violating the identity it is expected to violate.

use crate::config::Tolerances;
use crate::connections::{foliation_diagnostics, ConnectionKind, FoliationReport};
use crate::convergence::{validate_ladder, LadderStudy, Rung, DEFAULT_LADDER};
use crate::error::{GeoError, Result};
use crate::exponential::{
    factorization_check, gauge_formula_check, lcpb_relations_check, projection_agreement, FactorizationReport, GaugeReport,
    LcpbReport, ProjectionReport, DEFAULT_T_GRID,
};
use crate::flows::{bracket_sup, flow, flow_commutation_residual, normal_geodesic_residual, CommutePair, FlowConfig};
use crate::geometry::{CotangentVec, Hamiltonian};
use crate::models::{ModelDescriptor, ModelSpace};
use crate::sampling::{diagnostic_points, random_covectors_at, random_states, SampleSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Commute,
    Factorization,
    Projection,
    Foliation,
    Gauge,
    Lcpb,
    Geodesic,
    All,
}

impl Suite {
    pub const SINGLE: [Suite; 7] = [
        Suite::Foliation,
        Suite::Commute,
        Suite::Geodesic,
        Suite::Factorization,
        Suite::Projection,
        Suite::Gauge,
        Suite::Lcpb,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "commute" => Some(Suite::Commute),
            "factorization" => Some(Suite::Factorization),
            "projection" => Some(Suite::Projection),
            "foliation" => Some(Suite::Foliation),
            "gauge" => Some(Suite::Gauge),
            "lcpb" => Some(Suite::Lcpb),
            "geodesic" => Some(Suite::Geodesic),
            "all" => Some(Suite::All),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Commute => "commute",
            Suite::Factorization => "factorization",
            Suite::Projection => "projection",
            Suite::Foliation => "foliation",
            Suite::Gauge => "gauge",
            Suite::Lcpb => "lcpb",
            Suite::Geodesic => "geodesic",
            Suite::All => "all",
        }
    }
}

/// Everything a verification run depends on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifySettings {
    pub seed: u64,
    /// Random phase states for bracket sampling.
    pub states: usize,
    /// Random covectors at the model's canonical base point.
    pub covectors: usize,
    /// Diagnostic points for pointwise tensor checks.
    pub samples: usize,
    pub t_grid: Vec<f64>,
    pub ladder: Vec<f64>,
    pub flow: FlowConfig,
    pub tolerances: Tolerances,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            seed: 7,
            states: 100,
            covectors: 10,
            samples: 50,
            t_grid: DEFAULT_T_GRID.to_vec(),
            ladder: DEFAULT_LADDER.to_vec(),
            flow: FlowConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl VerifySettings {
    pub fn validate(&self) -> Result<()> {
        self.flow.validate()?;
        validate_ladder(&self.ladder)?;
        if self.t_grid.is_empty() || self.t_grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(GeoError::InvalidConfig("t_grid must be non-empty and positive".into()));
        }
        if self.states == 0 || self.covectors == 0 || self.samples == 0 {
            return Err(GeoError::InvalidConfig("sample counts must be positive".into()));
        }
        Ok(())
    }

    fn t_max(&self) -> f64 {
        self.t_grid.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Observation agrees with the declaration.
    Match,
    Mismatch,
}

/// One identity: what the declaration predicts and what was measured.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub identity: String,
    pub expected_to_hold: bool,
    pub holds: bool,
    /// The residual the decision was based on and its threshold.
    pub residual: f64,
    pub threshold: f64,
    pub status: Status,
    pub summary: String,
}

impl Verdict {
    fn new(identity: &str, expected: bool, residual: f64, threshold: f64) -> Self {
        let holds = residual <= threshold;
        let status = if holds == expected { Status::Match } else { Status::Mismatch };
        let summary = match (expected, holds) {
            (true, true) => "identity holds as declared",
            (false, false) => "identity violated as declared",
            (true, false) => "identity violated but declared to hold",
            (false, true) => "identity holds but declared to fail",
        };
        Verdict {
            identity: identity.to_string(),
            expected_to_hold: expected,
            holds,
            residual,
            threshold,
            status,
            summary: summary.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommuteDetails {
    pub bracket_sup: f64,
    pub bracket_states: usize,
    /// `sup` over states of the `(H^h, H^g)` commutation distance at `s = t = t_max`.
    pub hg_residual: f64,
    /// The same for `(H^h, H^v)`.
    pub hv_residual: f64,
    pub flow_states: usize,
    /// `(H^h, H^v)` at the canonical state against step.
    pub ladder: LadderStudy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicDetails {
    pub levi_civita: f64,
    pub rnabla: f64,
    pub states: usize,
    pub ladder_levi_civita: LadderStudy,
    pub ladder_rnabla: LadderStudy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorizationDetails {
    pub sup_primary: f64,
    pub sup_alternate: f64,
    pub sup_alternate_rnabla: f64,
    /// `sup` over covectors at each ladder step, at the last grid time.
    pub primary_ladder: LadderStudy,
    pub alternate_ladder: LadderStudy,
    pub runs: Vec<FactorizationReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionDetails {
    pub sup_agreement: f64,
    pub sup_lift: f64,
    pub runs: Vec<ProjectionReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeDetails {
    pub sup_residual: f64,
    pub sup_omega_deviation: f64,
    pub sup_fiber_geodesic: f64,
    pub runs: Vec<GaugeReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SuiteDetails {
    Commute(CommuteDetails),
    Geodesic(GeodesicDetails),
    Factorization(FactorizationDetails),
    Projection(ProjectionDetails),
    Foliation(FoliationReport),
    Gauge(GaugeDetails),
    Lcpb(LcpbReport),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub verdicts: Vec<Verdict>,
    pub details: SuiteDetails,
}

impl SuiteReport {
    pub fn all_match(&self) -> bool {
        self.verdicts.iter().all(|v| v.status == Status::Match)
    }
}

/// A suite that could not run on this model, and why.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub suite: Suite,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub model: ModelDescriptor,
    pub requested: Suite,
    pub settings: VerifySettings,
    pub suites: Vec<SuiteReport>,
    pub skipped: Vec<Skipped>,
    pub all_match: bool,
}

fn canonical_covectors(model: &ModelSpace, st: &VerifySettings) -> Vec<CotangentVec> {
    let mut out = vec![CotangentVec::new(model.canonical.x.clone(), model.canonical.p.clone())];
    out.extend(random_covectors_at(
        model,
        &model.canonical.x,
        SampleSpec {
            seed: st.seed,
            count: st.covectors.saturating_sub(1),
        },
    ));
    out
}

fn ladder_of(steps: &[f64], f: impl Fn(&FlowConfig) -> Result<f64> + Sync, base: &FlowConfig) -> Result<LadderStudy> {
    let res = steps
        .par_iter()
        .map(|&h| f(&base.with_step(h)))
        .collect::<Result<Vec<_>>>()?;
    LadderStudy::new(
        steps
            .iter()
            .zip(res)
            .map(|(&step, residual)| Rung { step, residual })
            .collect(),
    )
}

fn sup(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, f64::max)
}

pub fn commute_suite(model: &ModelSpace, st: &VerifySettings) -> Result<SuiteReport> {
    let geo = &model.geometry;
    let states = random_states(
        model,
        SampleSpec {
            seed: st.seed,
            count: st.states,
        },
    );
    let bracket = bracket_sup(geo, &states);
    let flow_states: Vec<CotangentVec> = canonical_covectors(model, st).into_iter().take(3).collect();
    let t = st.t_max();
    let pair_sup = |pair| -> Result<f64> {
        let r = flow_states
            .par_iter()
            .map(|s| flow_commutation_residual(geo, pair, s, t, t, &st.flow).map(|d| d.max()))
            .collect::<Result<Vec<_>>>()?;
        Ok(sup(r))
    };
    let hg = pair_sup(CommutePair::HG)?;
    let hv = pair_sup(CommutePair::HV)?;
    let canon = &flow_states[0];
    let ladder = ladder_of(
        &st.ladder,
        |cfg| flow_commutation_residual(geo, CommutePair::HV, canon, t, t, cfg).map(|d| d.max()),
        &st.flow,
    )?;
    let expected = model.declared.rnabla_parallel();
    let tol = &st.tolerances;
    Ok(SuiteReport {
        suite: Suite::Commute,
        verdicts: vec![
            Verdict::new("poisson_bracket_hv_vanishes", expected, bracket, tol.foliation_tol),
            Verdict::new("flows_h_g_commute", expected, hg, tol.identity_tol),
            Verdict::new("flows_h_v_commute", expected, hv, tol.identity_tol),
        ],
        details: SuiteDetails::Commute(CommuteDetails {
            bracket_sup: bracket,
            bracket_states: states.len(),
            hg_residual: hg,
            hv_residual: hv,
            flow_states: flow_states.len(),
            ladder,
        }),
    })
}

pub fn geodesic_suite(model: &ModelSpace, st: &VerifySettings) -> Result<SuiteReport> {
    let geo = &model.geometry;
    let states = canonical_covectors(model, st);
    let t = st.t_max();
    let residual = |state: &CotangentVec, kind, cfg: &FlowConfig| -> Result<f64> {
        let tr = flow(geo, Hamiltonian::H, state, t, cfg)?;
        Ok(normal_geodesic_residual(geo, &tr, kind, 200)?.max())
    };
    let sup_kind = |kind| -> Result<f64> {
        let r = states
            .par_iter()
            .map(|s| residual(s, kind, &st.flow))
            .collect::<Result<Vec<_>>>()?;
        Ok(sup(r))
    };
    let lc = sup_kind(ConnectionKind::LeviCivita)?;
    let hat = sup_kind(ConnectionKind::Rnabla)?;
    let canon = &states[0];
    let ladder_steps = GEODESIC_LADDER;
    let ladder_levi_civita = ladder_of(&ladder_steps, |cfg| residual(canon, ConnectionKind::LeviCivita, cfg), &st.flow)?;
    let ladder_rnabla = ladder_of(&ladder_steps, |cfg| residual(canon, ConnectionKind::Rnabla, cfg), &st.flow)?;
    let tol = st.tolerances.identity_tol;
    Ok(SuiteReport {
        suite: Suite::Geodesic,
        verdicts: vec![
            Verdict::new("normal_geodesic_equation_levi_civita", true, lc, tol),
            Verdict::new("normal_geodesic_equation_rnabla", true, hat, tol),
        ],
        details: SuiteDetails::Geodesic(GeodesicDetails {
            levi_civita: lc,
            rnabla: hat,
            states: states.len(),
            ladder_levi_civita,
            ladder_rnabla,
        }),
    })
}

/// Ladder for the geodesic-equation residual, coarse enough that the
/// stencil and integrator errors stay above roundoff.
pub const GEODESIC_LADDER: [f64; 3] = [0.05, 0.025, 0.0125];

pub fn factorization_suite(model: &ModelSpace, st: &VerifySettings) -> Result<SuiteReport> {
    let covs = canonical_covectors(model, st);
    let runs = covs
        .par_iter()
        .map(|c| factorization_check(model, &c.base, &c.p, &st.t_grid, &st.flow, Some(&st.ladder)))
        .collect::<Result<Vec<_>>>()?;
    let sup_primary = sup(runs.iter().map(|r| r.sup_primary()));
    let sup_alternate = sup(runs.iter().map(|r| r.sup_alternate()));
    let sup_alternate_rnabla = sup(runs.iter().flat_map(|r| r.points.iter().map(|p| p.alternate_rnabla)));
    let merged = |pick: fn(&FactorizationReport) -> &Option<LadderStudy>| {
        LadderStudy::new(
            st.ladder
                .iter()
                .enumerate()
                .map(|(i, &step)| Rung {
                    step,
                    residual: sup(runs.iter().map(|r| pick(r).as_ref().map_or(f64::NAN, |l| l.rungs[i].residual))),
                })
                .collect(),
        )
    };
    let primary_ladder = merged(|r| &r.primary_ladder)?;
    let alternate_ladder = merged(|r| &r.alternate_ladder)?;
    let expected = model.declared.factorizes();
    let tol = st.tolerances.identity_tol;
    Ok(SuiteReport {
        suite: Suite::Factorization,
        verdicts: vec![
            Verdict::new("factorization_primary", expected, sup_primary, tol),
            Verdict::new("factorization_alternate_rnabla_transport", expected, sup_alternate_rnabla, tol),
        ],
        details: SuiteDetails::Factorization(FactorizationDetails {
            sup_primary,
            sup_alternate,
            sup_alternate_rnabla,
            primary_ladder,
            alternate_ladder,
            runs,
        }),
    })
}

pub fn projection_suite(model: &ModelSpace, st: &VerifySettings) -> Result<SuiteReport> {
    if model.submersion.is_none() {
        return Err(GeoError::SubmersionNotDeclared(model.name.to_string()));
    }
    let covs = canonical_covectors(model, st);
    let runs = covs
        .par_iter()
        .map(|c| projection_agreement(model, &c.base, &c.p, &st.t_grid, &st.flow))
        .collect::<Result<Vec<_>>>()?;
    let sup_agreement = sup(runs.iter().map(|r| r.sup_agreement()));
    let sup_lift = sup(runs.iter().map(|r| r.sup_lift()));
    let expected = model.declared.projections_agree();
    let tol = st.tolerances.identity_tol;
    Ok(SuiteReport {
        suite: Suite::Projection,
        verdicts: vec![
            Verdict::new("projections_agree", expected, sup_agreement, tol),
            Verdict::new("sr_is_lift_of_projected_geodesic", expected, sup_lift, tol),
        ],
        details: SuiteDetails::Projection(ProjectionDetails {
            sup_agreement,
            sup_lift,
            runs,
        }),
    })
}

pub fn foliation_suite(model: &ModelSpace, st: &VerifySettings) -> Result<SuiteReport> {
    let pts = diagnostic_points(model, st.samples);
    let rep = foliation_diagnostics(model, &pts, &st.tolerances)?;
    let d = &model.declared;
    let ft = rep.foliation_tol;
    let orth_tol = st.tolerances.frame_tol.max(ft);
    Ok(SuiteReport {
        suite: Suite::Foliation,
        verdicts: vec![
            Verdict::new("orthogonal", d.orthogonal, rep.orthogonality_residual, orth_tol),
            Verdict::new("v_integrable", d.v_integrable, rep.cocurvature_residual, ft),
            Verdict::new("totally_geodesic", d.totally_geodesic, rep.tg_residual, ft),
            Verdict::new("riemannian_foliation", d.riemannian_foliation, rep.rf_residual, ft),
            Verdict::new("rnabla_g_vanishes", d.rnabla_parallel(), rep.rnabla_g_residual, ft),
        ],
        details: SuiteDetails::Foliation(rep),
    })
}

pub fn gauge_suite(model: &ModelSpace, st: &VerifySettings) -> Result<SuiteReport> {
    let covs = canonical_covectors(model, st);
    let runs = covs
        .par_iter()
        .map(|c| gauge_formula_check(model, &c.base, &c.p, &st.t_grid, &st.flow))
        .collect::<Result<Vec<_>>>()?;
    let sup_residual = sup(runs.iter().map(|r| r.sup_residual()));
    let sup_omega_deviation = sup(runs.iter().map(|r| r.omega_deviation));
    let sup_fiber_geodesic = sup(runs.iter().map(|r| r.fiber_geodesic));
    let tol = &st.tolerances;
    Ok(SuiteReport {
        suite: Suite::Gauge,
        verdicts: vec![
            Verdict::new("gauge_formula", true, sup_residual, tol.identity_tol),
            Verdict::new("omega_constant_along_geodesics", true, sup_omega_deviation, tol.energy_tol),
            Verdict::new("fiber_geodesic_is_group_orbit", true, sup_fiber_geodesic, tol.identity_tol),
        ],
        details: SuiteDetails::Gauge(GaugeDetails {
            sup_residual,
            sup_omega_deviation,
            sup_fiber_geodesic,
            runs,
        }),
    })
}

pub fn lcpb_suite(model: &ModelSpace, st: &VerifySettings) -> Result<SuiteReport> {
    let pts = diagnostic_points(model, st.samples.min(20));
    let rep = lcpb_relations_check(model, &pts)?;
    let tol = st.tolerances.identity_tol;
    Ok(SuiteReport {
        suite: Suite::Lcpb,
        verdicts: vec![
            Verdict::new("horizontal_horizontal", true, rep.horizontal, tol),
            Verdict::new("horizontal_vertical", true, rep.horizontal_vertical, tol),
            Verdict::new("vertical_horizontal", true, rep.vertical_horizontal, tol),
            Verdict::new("vertical_vertical", true, rep.vertical, tol),
        ],
        details: SuiteDetails::Lcpb(rep),
    })
}

/// Why `suite` cannot run on `model`, if it cannot.
pub fn precondition(model: &ModelSpace, suite: Suite) -> Option<GeoError> {
    let name = model.name.to_string();
    match suite {
        Suite::Factorization if !model.declared.v_integrable => Some(GeoError::FoliationNotDeclared(name)),
        Suite::Projection if model.submersion.is_none() => Some(GeoError::SubmersionNotDeclared(name)),
        Suite::Gauge | Suite::Lcpb if !(model.declared.principal_bundle && model.bundle.is_some()) => {
            Some(GeoError::NotPrincipalBundle(name))
        }
        Suite::Lcpb if model.submersion.is_none() => Some(GeoError::SubmersionNotDeclared(name)),
        _ => None,
    }
}

pub fn run_suite(model: &ModelSpace, suite: Suite, st: &VerifySettings) -> Result<SuiteReport> {
    if let Some(e) = precondition(model, suite) {
        return Err(e);
    }
    match suite {
        Suite::Commute => commute_suite(model, st),
        Suite::Geodesic => geodesic_suite(model, st),
        Suite::Factorization => factorization_suite(model, st),
        Suite::Projection => projection_suite(model, st),
        Suite::Foliation => foliation_suite(model, st),
        Suite::Gauge => gauge_suite(model, st),
        Suite::Lcpb => lcpb_suite(model, st),
        Suite::All => Err(GeoError::InvalidConfig("`all` is not a single suite".into())),
    }
}

/// Runs one suite, or every applicable suite for [`Suite::All`]. A single
/// suite whose preconditions fail is an error; under `all` it is skipped.
pub fn verify(model: &ModelSpace, suite: Suite, st: &VerifySettings) -> Result<VerifyReport> {
    st.validate()?;
    let mut suites = Vec::new();
    let mut skipped = Vec::new();
    if suite == Suite::All {
        for s in Suite::SINGLE {
            match precondition(model, s) {
                Some(e) => skipped.push(Skipped {
                    suite: s,
                    reason: e.to_string(),
                }),
                None => suites.push(run_suite(model, s, st)?),
            }
        }
    } else {
        suites.push(run_suite(model, suite, st)?);
    }
    let all_match = suites.iter().all(SuiteReport::all_match);
    Ok(VerifyReport {
        model: ModelDescriptor::of(model),
        requested: suite,
        settings: st.clone(),
        suites,
        skipped,
        all_match,
    })
}

/// A ladder study of one suite's headline residual.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub model: String,
    pub suite: Suite,
    pub quantity: String,
    pub study: LadderStudy,
    /// `|slope| ≤ 0.5` with a residual above `violation_tol`.
    pub non_vanishing_limit: bool,
}

/// Residual against step for the canonical state of `model`.
pub fn convergence(model: &ModelSpace, suite: Suite, steps: &[f64], st: &VerifySettings) -> Result<ConvergenceReport> {
    validate_ladder(steps)?;
    if let Some(e) = precondition(model, suite) {
        return Err(e);
    }
    let geo = &model.geometry;
    let canon = CotangentVec::new(model.canonical.x.clone(), model.canonical.p.clone());
    let t = st.t_max();
    let (quantity, study) = match suite {
        Suite::Commute => (
            "flow commutation distance (h, v)",
            ladder_of(steps, |c| flow_commutation_residual(geo, CommutePair::HV, &canon, t, t, c).map(|d| d.max()), &st.flow)?,
        ),
        Suite::Factorization => (
            "factorization residual (primary form)",
            ladder_of(
                steps,
                |c| crate::exponential::factorization_at(geo, &canon.base, &canon.p, t, c).map(|r| r.primary),
                &st.flow,
            )?,
        ),
        Suite::Projection => (
            "projection agreement",
            ladder_of(
                steps,
                |c| projection_agreement(model, &canon.base, &canon.p, &[t], c).map(|r| r.sup_agreement()),
                &st.flow,
            )?,
        ),
        Suite::Geodesic => (
            "normal geodesic residual (levi-civita)",
            ladder_of(
                steps,
                |c| {
                    let tr = flow(geo, Hamiltonian::H, &canon, t, c)?;
                    Ok(normal_geodesic_residual(geo, &tr, ConnectionKind::LeviCivita, 200)?.max())
                },
                &st.flow,
            )?,
        ),
        Suite::Gauge => (
            "gauge formula residual",
            ladder_of(
                steps,
                |c| gauge_formula_check(model, &canon.base, &canon.p, &[t], c).map(|r| r.sup_residual()),
                &st.flow,
            )?,
        ),
        other => {
            return Err(GeoError::InvalidConfig(format!(
                "suite `{}` has no step dependence",
                other.name()
            )))
        }
    };
    let non_vanishing_limit = study.fitted_order.abs() <= 0.5 && study.finest() > st.tolerances.violation_tol;
    Ok(ConvergenceReport {
        model: model.name.to_string(),
        suite,
        quantity: quantity.to_string(),
        study,
        non_vanishing_limit,
    })
}
