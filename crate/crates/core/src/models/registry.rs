//! Model registry by name.

use super::{flat_split, heisenberg, hopf_s3, octonionic_hopf, skewed_split, vertical_heisenberg, warped_control};
use super::{DeclaredProperties, ModelSpace, SampleDomain};
use crate::error::{GeoError, Result};
use serde::{Deserialize, Serialize};

const BUILDERS: &[(&str, fn() -> ModelSpace)] = &[
    ("flat_split", flat_split),
    ("heisenberg", heisenberg),
    ("hopf_s3", hopf_s3),
    ("octonionic_hopf", octonionic_hopf),
    ("skewed_split", skewed_split),
    ("vertical_heisenberg", vertical_heisenberg),
    ("warped_control", warped_control),
];

pub fn model_names() -> Vec<&'static str> {
    BUILDERS.iter().map(|(n, _)| *n).collect()
}

/// Builds a model without re-verifying its declarations.
pub fn model_by_name(name: &str) -> Result<ModelSpace> {
    BUILDERS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, f)| f())
        .ok_or_else(|| GeoError::UnknownModel(name.to_string()))
}

/// Documentation descriptor of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub name: String,
    pub summary: String,
    pub dim: usize,
    pub h_rank: usize,
    pub v_rank: usize,
    pub charts: usize,
    pub base_dim: Option<usize>,
    pub group_dim: Option<usize>,
    pub declared: DeclaredProperties,
    pub domain: SampleDomain,
}

impl ModelDescriptor {
    pub fn of(m: &ModelSpace) -> Self {
        ModelDescriptor {
            name: m.name.to_string(),
            summary: m.summary.to_string(),
            dim: m.dim(),
            h_rank: m.h_rank(),
            v_rank: m.v_rank(),
            charts: m.geometry.atlas.charts.len(),
            base_dim: m.submersion.as_ref().map(|s| s.base_dim),
            group_dim: m.bundle.as_ref().map(|b| b.group_dim()),
            declared: m.declared,
            domain: m.domain,
        }
    }
}

/// Builds a model and checks its declared foliation properties against
/// diagnostics on `samples` points. A contradiction is an error.
pub fn load(name: &str, tol: &crate::config::Tolerances, samples: usize) -> Result<ModelSpace> {
    let m = model_by_name(name)?;
    let pts = crate::sampling::diagnostic_points(&m, samples);
    let rep = crate::connections::foliation_diagnostics(&m, &pts, tol)?;
    let d = m.declared;
    let ft = rep.foliation_tol;
    let checks = [
        ("orthogonal", d.orthogonal, rep.orthogonality_residual, tol.frame_tol.max(ft)),
        ("v_integrable", d.v_integrable, rep.cocurvature_residual, ft),
        ("totally_geodesic", d.totally_geodesic, rep.tg_residual, ft),
        ("riemannian_foliation", d.riemannian_foliation, rep.rf_residual, ft),
    ];
    for (property, declared, residual, thr) in checks {
        if declared != (residual <= thr) {
            return Err(GeoError::DeclarationMismatch {
                model: name.to_string(),
                property: property.to_string(),
                residual,
            });
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_model_loads_consistently() {
        let tol = crate::config::Tolerances::default();
        for n in model_names() {
            load(n, &tol, 8).unwrap_or_else(|e| panic!("{n}: {e}"));
        }
    }

    #[test]
    fn unknown_model() {
        assert!(matches!(model_by_name("torus"), Err(GeoError::UnknownModel(_))));
    }
}
