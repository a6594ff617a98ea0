//! Riemannian and sub-Riemannian geodesic flows on coordinate manifolds.

pub mod config;
pub mod connections;
pub mod convergence;
pub mod dual;
pub mod error;
pub mod exponential;
pub mod flows;
pub mod geometry;
pub mod jet;
pub mod linalg;
pub mod models;
pub mod sampling;
pub mod verify;

pub use config::Tolerances;
pub use dual::{Dual, Real, D1, D2};
pub use error::{GeoError, Result};
pub use geometry::{CotangentVec, Geometry, Hamiltonian, Point, Subspace, TangentVec};
pub use jet::{ChartFn, ChartId, DiffMode, JetRequest, JetResult};
pub use linalg::Mat;
