//! Property tests for structural invariants of the models, the split and the flows.

use geoflow::connections::{coefficients, cometric_derivative, dual_apply, torsion_contract, ConnectionKind};
use geoflow::exponential::{exp_r, exp_sr};
use geoflow::flows::{flow_end, hamiltonian_at, hamiltonian_vector_field, poisson_bracket, FlowConfig};
use geoflow::geometry::Subspace;
use geoflow::jet::{directional, first_partials};
use geoflow::models::octonionic::fiber_tangents_fd;
use geoflow::models::sphere::Stereo;
use geoflow::models::{
    flat_split, heisenberg, hopf_s3, model_by_name, model_names, octonion_multiply, octonionic_hopf, warped_control, ModelSpace,
    Octonion,
};
use geoflow::sampling::{random_covector, random_point, rng};
use geoflow::{CotangentVec, Hamiltonian, Mat, Point, TangentVec};
use proptest::prelude::*;

fn octonion() -> impl Strategy<Value = Octonion<f64>> {
    prop::array::uniform8(-2.0f64..2.0).prop_map(|c| Octonion::from_slice(&c))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn state(model: &ModelSpace, seed: u64) -> CotangentVec {
    let mut r = rng(seed);
    let x = random_point(model, &mut r);
    random_covector(model, &x, &mut r)
}

/// Residual of `v` after projection onto the span of `basis` (Gram-Schmidt).
fn out_of_span(basis: &[Vec<f64>], v: &[f64]) -> f64 {
    let mut q: Vec<Vec<f64>> = Vec::new();
    for b in basis {
        let mut w = b.clone();
        for e in &q {
            let c: f64 = w.iter().zip(e).map(|(a, b)| a * b).sum();
            w.iter_mut().zip(e).for_each(|(a, b)| *a -= c * b);
        }
        let n = norm(&w);
        q.push(w.into_iter().map(|c| c / n).collect());
    }
    let mut r = v.to_vec();
    for e in &q {
        let c: f64 = r.iter().zip(e).map(|(a, b)| a * b).sum();
        r.iter_mut().zip(e).for_each(|(a, b)| *a -= c * b);
    }
    norm(&r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn octonion_norm_composes(u in octonion(), v in octonion()) {
        let uv = octonion_multiply(u, v);
        let expected = u.norm2() * v.norm2();
        prop_assert!((uv.norm2() - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn octonions_are_alternative(u in octonion(), v in octonion()) {
        let left = octonion_multiply(octonion_multiply(u, u), v);
        let right = octonion_multiply(u, octonion_multiply(u, v));
        prop_assert!(diff(&left.to_array(), &right.to_array()) < 1e-11);
        let left = octonion_multiply(octonion_multiply(u, v), v);
        let right = octonion_multiply(u, octonion_multiply(v, v));
        prop_assert!(diff(&left.to_array(), &right.to_array()) < 1e-11);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projectors_split_the_tangent_space(seed in any::<u64>(), m in 0usize..7) {
        let model = model_by_name(model_names()[m]).unwrap();
        let x = random_point(&model, &mut rng(seed));
        let s = model.geometry.split::<f64>(x.chart, &x.x).unwrap();
        let n = model.dim();
        prop_assert!(s.ph.add(&s.pv).max_abs_diff(&Mat::identity(n)) < 1e-10);
        prop_assert!(s.ph.matmul(&s.ph).max_abs_diff(&s.ph) < 1e-10);
        prop_assert!(s.ph.matmul(&s.pv).max_abs() < 1e-10);
        prop_assert!(s.ph.matmul(&s.a).max_abs_diff(&s.a) < 1e-10);
        prop_assert!(s.pv.matmul(&s.b).max_abs_diff(&s.b) < 1e-10);
    }

    #[test]
    fn orthogonal_splits_decompose_the_cometric(seed in any::<u64>(), m in 0usize..7) {
        let model = model_by_name(model_names()[m]).unwrap();
        prop_assume!(model.declared.orthogonal);
        let geo = &model.geometry;
        let x = random_point(&model, &mut rng(seed));
        let h = geo.h_star.at::<f64>(x.chart, &x.x);
        let v = geo.v_star.at::<f64>(x.chart, &x.x);
        let g = geo.g_star.at::<f64>(x.chart, &x.x);
        prop_assert!(h.add(&v).max_abs_diff(&g) <= 1e-10);
    }

    #[test]
    fn bracket_is_antisymmetric(seed in any::<u64>(), m in 0usize..7) {
        let model = model_by_name(model_names()[m]).unwrap();
        let geo = &model.geometry;
        let st = state(&model, seed);
        let hv = poisson_bracket(&geo.h_star, &geo.v_star, &st);
        let vh = poisson_bracket(&geo.v_star, &geo.h_star, &st);
        prop_assert!((hv + vh).abs() < 1e-12 * (1.0 + hv.abs()));
        prop_assert!(poisson_bracket(&geo.g_star, &geo.g_star, &st).abs() < 1e-12);
    }

    #[test]
    fn connection_form_is_invariant_under_the_action(seed in any::<u64>(), a in -3.0f64..3.0) {
        let model = hopf_s3();
        let bundle = model.bundle.clone().unwrap();
        let st = state(&model, seed);
        let v = TangentVec::new(st.base.clone(), st.p.clone());
        let moved = bundle.act_tangent(&v, &[a]);
        let w0 = bundle.connection_form(&v.base, &v.v);
        let w1 = bundle.connection_form(&moved.base, &moved.v);
        prop_assert!(diff(&bundle.ad_inverse(&[a], &w0), &w1) < 1e-10);
    }

    #[test]
    fn connection_form_kills_horizontal_and_reproduces_generators(seed in any::<u64>()) {
        let model = hopf_s3();
        let bundle = model.bundle.clone().unwrap();
        let x = random_point(&model, &mut rng(seed));
        let a = model.geometry.frame.at::<f64>(Subspace::H, x.chart, &x.x);
        for j in 0..a.cols() {
            prop_assert!(norm(&bundle.connection_form(&x, &a.col(j))) < 1e-12);
        }
        let xi = bundle.fundamental_field(0).eval_f64(x.chart, &x.x);
        prop_assert!((bundle.connection_form(&x, &xi)[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_is_constant_on_fibers(seed in any::<u64>(), a in -3.0f64..3.0) {
        let model = hopf_s3();
        let sub = model.submersion.clone().unwrap();
        let x = random_point(&model, &mut rng(seed));
        let moved = model.bundle.as_ref().unwrap().act(&x, &[a]);
        prop_assert!(diff(&sub.project_ambient(&x), &sub.project_ambient(&moved)) < 1e-12);
    }

    #[test]
    fn hopf_maps_land_on_the_half_sphere(seed in any::<u64>()) {
        for model in [hopf_s3(), octonionic_hopf()] {
            let x = random_point(&model, &mut rng(seed));
            let n = norm(&model.submersion.as_ref().unwrap().project_ambient(&x));
            prop_assert!((n - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn flows_do_not_depend_on_the_chart(seed in any::<u64>()) {
        let model = hopf_s3();
        let geo = &model.geometry;
        let st = state(&model, seed);
        let other = geo.atlas.cotangent_to_chart(&st, 1 - st.base.chart);
        let h0 = hamiltonian_at(&geo.h_star, &st.base, &st.p);
        let h1 = hamiltonian_at(&geo.h_star, &other.base, &other.p);
        prop_assert!((h0 - h1).abs() < 1e-12 * (1.0 + h0));
        let cfg = FlowConfig::default().with_step(4e-3);
        let e0 = flow_end(geo, Hamiltonian::H, &st, 0.8, &cfg).unwrap();
        let e1 = flow_end(geo, Hamiltonian::H, &other, 0.8, &cfg).unwrap();
        prop_assert!(geo.atlas.distance(&e0.base, &e1.base) < 1e-9);
    }

    #[test]
    fn sr_exponential_is_homogeneous(seed in any::<u64>(), c in 0.3f64..2.0) {
        let model = heisenberg();
        let geo = &model.geometry;
        let st = state(&model, seed);
        let cfg = FlowConfig::default().with_step(2e-3);
        let scaled: Vec<f64> = st.p.iter().map(|v| v * c).collect();
        let a = exp_sr(geo, &st.base, &scaled, 0.7, &cfg).unwrap();
        let b = exp_sr(geo, &st.base, &st.p, 0.7 * c, &cfg).unwrap();
        prop_assert!(geo.atlas.distance(&a, &b) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn numerical_fiber_tangents_span_the_vertical_frame(seed in any::<u64>()) {
        let model = octonionic_hopf();
        let stereo = Stereo::new(15);
        let x = random_point(&model, &mut rng(seed));
        let amb = stereo.embed(x.chart, &x.x);
        let halves_ok = norm(&amb[..8]) > 0.2;
        prop_assume!(halves_ok);
        let b = model.geometry.frame.at::<f64>(Subspace::V, x.chart, &x.x);
        let dpsi = stereo.dembed(x.chart, &x.x);
        let pushed: Vec<Vec<f64>> = (0..b.cols()).map(|j| dpsi.mul_vec(&b.col(j))).collect();
        for t in fiber_tangents_fd(&amb, 1e-5) {
            prop_assert!(out_of_span(&pushed, &t) < 1e-8 * (1.0 + norm(&t)));
        }
    }

    #[test]
    fn horizontal_frames_are_isometric_onto_the_base(seed in any::<u64>(), oct in any::<bool>()) {
        let model = if oct { octonionic_hopf() } else { hopf_s3() };
        let sub = model.submersion.clone().unwrap();
        let x = random_point(&model, &mut rng(seed));
        let a = model.geometry.frame.at::<f64>(Subspace::H, x.chart, &x.x);
        let b = sub.project(&x);
        prop_assume!(norm(&b) < 3.0);
        let k = sub.base_dim;
        let gb = Mat::from_vec(k, k, sub.base_metric.eval_f64(0, &b));
        let images: Vec<Vec<f64>> = (0..a.cols()).map(|j| directional::<f64>(sub.pi.as_ref(), x.chart, &x.x, &a.col(j)).1).collect();
        for i in 0..a.cols() {
            for j in 0..a.cols() {
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((gb.bilinear(&images[i], &images[j]) - expected).abs() < 1e-9);
            }
        }
    }
}

/// The covector equation with `+(∇ h*)(λ,λ)` instead of `−½(∇ h*)(λ,λ)`
/// disagrees with Hamilton's equations wherever `∇h* ≠ 0`. For ∇̂ the term
/// vanishes identically, so only Levi-Civita bookkeeping tells them apart.
#[test]
fn covector_equation_needs_minus_half() {
    let model = warped_control();
    let geo = &model.geometry;
    let st = CotangentVec::new(Point::new(0, vec![0.3, -0.2, 0.4]), vec![1.0, 0.5, 1.0]);
    let x = &st.base;
    let (xdot, pdot) = hamiltonian_vector_field(&geo.h_star, &st);
    let n = 3;
    let (sv, ds) = first_partials::<f64>(geo.h_star.s_star.as_ref(), x.chart, &x.x);
    let s = Mat::from_vec(n, n, sv);
    let ds: Vec<Mat<f64>> = ds.into_iter().map(|d| Mat::from_vec(n, n, d)).collect();
    let sj = geo.jet_at(x).unwrap();
    let residuals = |kind| {
        let gamma = coefficients(&sj, kind);
        let conn = dual_apply(&gamma, &xdot, &st.p);
        let tor = torsion_contract(&gamma, &xdot, &st.p);
        let cov = cometric_derivative(&gamma, &s, &ds, &st.p);
        let verified: Vec<f64> = (0..n).map(|k| conn[k] - tor[k] - 0.5 * cov[k]).collect();
        let printed: Vec<f64> = (0..n).map(|k| conn[k] - tor[k] + cov[k]).collect();
        (diff(&verified, &pdot), diff(&printed, &pdot), norm(&cov))
    };
    let (verified, printed, _) = residuals(ConnectionKind::LeviCivita);
    assert!(verified < 1e-12);
    assert!(printed > 1e-2, "{printed}");
    let (verified, printed, cov) = residuals(ConnectionKind::Rnabla);
    assert!(verified < 1e-12 && printed < 1e-12 && cov < 1e-12);
}

#[test]
fn great_circles_close_after_two_pi() {
    let model = hopf_s3();
    let geo = &model.geometry;
    let x = Point::new(0, vec![0.2, -0.1, 0.3]);
    let g = geo.metric.at::<f64>(0, &x.x);
    let v = [0.4, 0.7, -0.2];
    let len = g.bilinear(&v, &v).sqrt();
    let unit: Vec<f64> = v.iter().map(|c| c / len).collect();
    let run = exp_r(geo, &x, &unit, 2.0 * std::f64::consts::PI, &[], &FlowConfig::default(), false).unwrap();
    assert!(geo.atlas.distance(&run.end, &x) < 1e-6);
}

#[test]
fn flat_model_has_straight_geodesics() {
    let model = flat_split();
    let geo = &model.geometry;
    let x = Point::new(0, vec![0.1, 0.2, -0.3]);
    let run = exp_r(geo, &x, &[0.5, -0.25, 1.0], 1.0, &[], &FlowConfig::default(), false).unwrap();
    assert!(diff(&run.end.x, &[0.6, -0.05, 0.7]) < 1e-13);
}
