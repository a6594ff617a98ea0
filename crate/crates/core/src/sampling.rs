//! Reproducible sample points and phase states.
//!
//! Diagnostics use Halton points (deterministic, no seed). Random states for
//! flow tests come from a seeded ChaCha8 generator.

use crate::geometry::{CotangentVec, Point};
use crate::models::{ModelSpace, SampleDomain};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

const PRIMES: [u8; 18] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61];

/// Points of the `i`-th Halton vector in `[0,1)^d`, skipping index 0.
fn halton_vec(i: usize, d: usize) -> Vec<f64> {
    (0..d).map(|k| halton::number(PRIMES[k], i + 1)).collect()
}

fn gaussian_from_uniform(u: &[f64]) -> Vec<f64> {
    // Box–Muller on consecutive pairs
    let mut out = Vec::with_capacity(u.len());
    for pair in u.chunks(2) {
        let r = (-2.0 * (1.0 - pair[0]).ln()).sqrt();
        let th = 2.0 * std::f64::consts::PI * pair.get(1).copied().unwrap_or(0.25);
        out.push(r * th.cos());
        out.push(r * th.sin());
    }
    out.truncate(u.len());
    out
}

fn ball_point(dir: &[f64], radial: f64, radius: f64) -> Vec<f64> {
    let n = crate::linalg::norm(dir).max(1e-300);
    let r = radius * radial.powf(1.0 / dir.len() as f64);
    dir.iter().map(|c| c * r / n).collect()
}

fn place(model: &ModelSpace, gauss: &[f64], radial: f64) -> Point {
    match model.domain {
        SampleDomain::Ball { radius } => Point::new(0, ball_point(gauss, radial, radius)),
        SampleDomain::Sphere => {
            let n = crate::linalg::norm(gauss).max(1e-300);
            let y: Vec<f64> = gauss.iter().map(|c| c / n).collect();
            model.geometry.atlas.locate(&y)
        }
    }
}

fn ambient_dim(model: &ModelSpace) -> usize {
    match model.domain {
        SampleDomain::Ball { .. } => model.dim(),
        SampleDomain::Sphere => model.dim() + 1,
    }
}

/// `count` low-discrepancy points in the model's sample domain, preceded
/// by its declared interesting points.
pub fn diagnostic_points(model: &ModelSpace, count: usize) -> Vec<Point> {
    let d = ambient_dim(model);
    let mut pts = model.interesting.clone();
    for i in 0..count {
        let u = halton_vec(i, d + 1);
        let g = gaussian_from_uniform(&u[..d]);
        pts.push(place(model, &g, u[d]));
    }
    pts
}

/// Seed and count of a random state batch, recorded in reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub seed: u64,
    pub count: usize,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_point(model: &ModelSpace, rng: &mut ChaCha8Rng) -> Point {
    let d = ambient_dim(model);
    let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let radial: f64 = rng.gen();
    place(model, &g, radial)
}

/// Random covector at `x` with `g*`-norm in `[½, 1]·covector_scale`.
pub fn random_covector(model: &ModelSpace, x: &Point, rng: &mut ChaCha8Rng) -> CotangentVec {
    let n = model.dim();
    let raw: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let target = model.covector_scale * (0.5 + 0.5 * rng.gen::<f64>());
    let gs = model.geometry.g_star.at::<f64>(x.chart, &x.x);
    let len = gs.bilinear(&raw, &raw).sqrt().max(1e-300);
    CotangentVec::new(x.clone(), raw.iter().map(|c| c * target / len).collect())
}

/// `count` random states from `seed`, in order.
pub fn random_states(model: &ModelSpace, spec: SampleSpec) -> Vec<CotangentVec> {
    let mut r = rng(spec.seed);
    (0..spec.count)
        .map(|_| {
            let x = random_point(model, &mut r);
            random_covector(model, &x, &mut r)
        })
        .collect()
}

/// `count` random covectors at a fixed base point.
pub fn random_covectors_at(model: &ModelSpace, x: &Point, spec: SampleSpec) -> Vec<CotangentVec> {
    let mut r = rng(spec.seed);
    (0..spec.count).map(|_| random_covector(model, x, &mut r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{heisenberg, hopf_s3};

    #[test]
    fn states_are_reproducible() {
        let m = heisenberg();
        let spec = SampleSpec { seed: 7, count: 5 };
        assert_eq!(random_states(&m, spec), random_states(&m, spec));
    }

    #[test]
    fn sphere_points_lie_in_safe_region() {
        let m = hopf_s3();
        for p in diagnostic_points(&m, 64) {
            assert!(crate::linalg::norm(&p.x) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn ball_points_respect_radius() {
        let m = heisenberg();
        for p in diagnostic_points(&m, 64) {
            assert!(crate::linalg::norm(&p.x) <= 2.0 + 1e-12);
        }
    }
}
