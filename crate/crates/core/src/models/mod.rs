//! Built-in model spaces.

pub mod algebra;
pub mod bundle;
pub mod euclidean;
pub mod hopf;
pub mod octonionic;
pub mod registry;
pub mod sphere;

pub use algebra::{octonion_multiply, quaternion_multiply, Octonion, Quaternion};
pub use bundle::PrincipalBundle;
pub use euclidean::{flat_split, heisenberg, heisenberg_geodesic, skewed_split, vertical_heisenberg, warped_control};
pub use hopf::{hopf_s3, hopf_s3_rotated};
pub use octonionic::octonionic_hopf;
pub use registry::{load, model_by_name, model_names, ModelDescriptor};

use crate::geometry::{Geometry, Point};
use crate::jet::ChartFn;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Structural hypotheses a model claims; diagnostics supply the evidence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeclaredProperties {
    /// `V = H^⊥` with respect to `g`.
    pub orthogonal: bool,
    pub v_integrable: bool,
    pub totally_geodesic: bool,
    pub riemannian_foliation: bool,
    pub principal_bundle: bool,
}

impl DeclaredProperties {
    /// `∇̂g = 0`, equivalently the flows of `H^h` and `H^v` commute.
    pub fn rnabla_parallel(&self) -> bool {
        self.totally_geodesic && self.riemannian_foliation
    }

    /// Hypotheses of the exponential factorization.
    pub fn factorizes(&self) -> bool {
        self.orthogonal && self.v_integrable && self.totally_geodesic && self.riemannian_foliation
    }

    /// Projections of the two exponentials agree (orthogonal complement and
    /// totally geodesic fibers).
    pub fn projections_agree(&self) -> bool {
        self.orthogonal && self.totally_geodesic
    }
}

/// A submersion `π: M → B` with a single base chart.
#[derive(Clone)]
pub struct Submersion {
    pub base_dim: usize,
    /// Chart coordinates of `M` to base chart coordinates.
    pub pi: Arc<dyn ChartFn>,
    /// Base metric in the base chart.
    pub base_metric: Arc<dyn ChartFn>,
    /// Chart coordinates of `M` to an ambient Euclidean space containing `B`.
    pub pi_ambient: Arc<dyn ChartFn>,
    /// Base chart coordinates to the same ambient space.
    pub base_embed: Arc<dyn ChartFn>,
}

impl Submersion {
    pub fn ambient_dim(&self) -> usize {
        self.pi_ambient.shape().0
    }

    pub fn project(&self, p: &Point) -> Vec<f64> {
        self.pi.eval_f64(p.chart, &p.x)
    }

    pub fn project_ambient(&self, p: &Point) -> Vec<f64> {
        self.pi_ambient.eval_f64(p.chart, &p.x)
    }
}

/// Region from which diagnostic samples are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SampleDomain {
    /// Ball of the given radius in chart 0.
    Ball { radius: f64 },
    /// The whole unit sphere, located in the nearer chart.
    Sphere,
}

/// Canonical initial state used by examples and negative controls.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalState {
    pub x: Point,
    pub p: Vec<f64>,
}

#[derive(Clone)]
pub struct ModelSpace {
    pub name: &'static str,
    pub summary: &'static str,
    pub geometry: Geometry,
    pub submersion: Option<Submersion>,
    pub bundle: Option<Arc<dyn PrincipalBundle>>,
    pub declared: DeclaredProperties,
    pub domain: SampleDomain,
    /// Typical covector scale for random states.
    pub covector_scale: f64,
    pub interesting: Vec<Point>,
    pub canonical: CanonicalState,
}

impl ModelSpace {
    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    pub fn h_rank(&self) -> usize {
        self.geometry.h_star.rank
    }

    pub fn v_rank(&self) -> usize {
        self.geometry.v_star.rank
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self.domain, SampleDomain::Sphere)
    }
}

/// Defines a unit struct implementing [`crate::jet::SmoothFn`] from a body
/// generic in the scalar type `S`.
macro_rules! smooth_field {
    ($(#[$m:meta])* $name:ident, ($r:expr, $c:expr), |$x:ident| $body:expr) => {
        $(#[$m])*
        pub struct $name;
        impl $crate::jet::SmoothFn for $name {
            fn shape(&self) -> (usize, usize) {
                ($r, $c)
            }
            #[allow(unused_variables)]
            fn eval<S: $crate::dual::Real>(&self, _: $crate::jet::ChartId, $x: &[S]) -> Vec<S> {
                $body
            }
        }
    };
}
pub(crate) use smooth_field;
