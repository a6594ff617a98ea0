//! Step-size ladders and fitted convergence orders.

use crate::error::{GeoError, Result};
use serde::{Deserialize, Serialize};

/// Residuals at or below this are indistinguishable from roundoff.
pub const ROUNDOFF_FLOOR: f64 = 1e-13;

/// Default ladder for order studies.
pub const DEFAULT_LADDER: [f64; 3] = [4e-3, 2e-3, 1e-3];

/// One rung of a ladder: a step and the residual it produced.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub step: f64,
    pub residual: f64,
}

/// Residuals against step with the fitted slope of `log r` on `log h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderStudy {
    pub rungs: Vec<Rung>,
    pub fitted_order: f64,
    /// Every residual is at roundoff, so the slope carries no information.
    pub roundoff_limited: bool,
}

impl LadderStudy {
    pub fn new(rungs: Vec<Rung>) -> Result<Self> {
        let fitted_order = fit_order(&rungs)?;
        let roundoff_limited = rungs.iter().all(|r| r.residual <= ROUNDOFF_FLOOR);
        Ok(LadderStudy {
            rungs,
            fitted_order,
            roundoff_limited,
        })
    }

    /// Residual at the finest step.
    pub fn finest(&self) -> f64 {
        self.rungs
            .iter()
            .min_by(|a, b| a.step.total_cmp(&b.step))
            .map(|r| r.residual)
            .unwrap_or(f64::NAN)
    }
}

/// Rejects ladders too short to fit a slope.
pub fn validate_ladder(steps: &[f64]) -> Result<()> {
    if steps.len() < 3 {
        return Err(GeoError::InvalidConfig(format!(
            "a convergence ladder needs at least 3 steps, got {}",
            steps.len()
        )));
    }
    if steps.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(GeoError::InvalidConfig("ladder steps must be positive".into()));
    }
    Ok(())
}

/// Least-squares slope of `log r` against `log h`. Zero residuals are
/// floored at the smallest positive double so the fit stays finite.
pub fn fit_order(rungs: &[Rung]) -> Result<f64> {
    validate_ladder(&rungs.iter().map(|r| r.step).collect::<Vec<_>>())?;
    let pts: Vec<(f64, f64)> = rungs
        .iter()
        .map(|r| (r.step.ln(), r.residual.max(f64::MIN_POSITIVE).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(GeoError::InvalidConfig("ladder steps must be distinct".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law() {
        let rungs: Vec<Rung> = DEFAULT_LADDER
            .iter()
            .map(|&h| Rung { step: h, residual: 3.0 * h.powi(4) })
            .collect();
        assert!((fit_order(&rungs).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn short_ladder_is_rejected() {
        assert!(validate_ladder(&[1e-3]).is_err());
        assert!(validate_ladder(&[1e-3, 5e-4]).is_err());
    }
}
