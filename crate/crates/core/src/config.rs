//! Every numeric tolerance in one record.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// forward∘inverse of chart transitions.
    pub transition_tol: f64,
    /// Smallest admissible metric eigenvalue.
    pub spd_tol: f64,
    /// Relative singular-value cutoff for cometric rank.
    pub rank_tol: f64,
    /// Symmetry of mixed second partials.
    pub fd_symmetry_tol: f64,
    /// Agreement between two independent routes to the same quantity.
    pub cross_check_tol: f64,
    /// Slack in the ∇̂g decomposition inequality.
    pub cross_tol: f64,
    /// Energy drift along a single flow.
    pub energy_tol: f64,
    /// Threshold for foliation verdicts.
    pub foliation_tol: f64,
    /// Horizontality and tracking of horizontal lifts.
    pub lift_tol: f64,
    /// Orthonormality of declared frames.
    pub frame_tol: f64,
    /// Residual bound for flow identities at the working step.
    pub identity_tol: f64,
    /// Residuals above this are a genuine violation, not integrator noise.
    pub violation_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            transition_tol: 1e-12,
            spd_tol: 1e-12,
            rank_tol: 1e-9,
            fd_symmetry_tol: 1e-6,
            cross_check_tol: 1e-7,
            cross_tol: 1e-9,
            energy_tol: 1e-8,
            foliation_tol: 1e-7,
            lift_tol: 1e-6,
            frame_tol: 1e-10,
            identity_tol: 1e-6,
            violation_tol: 1e-3,
        }
    }
}
