//! Pointwise H ⊕ V data and first-order jets of vector fields.
//!
//! Every tensorial quantity (brackets, ∇̂, curvature, second fundamental
//! form, Lie derivatives of g) is evaluated from a [`SplitJet`] and
//! [`VJet`]s of the extension fields. Nesting one scalar level up yields the
//! jet of any computed field, which is how iterated brackets get exact
//! derivatives.

use super::fields::{FrameField, MetricField, Subspace};
use crate::error::{GeoError, Result};
use crate::jet::{first_partials, seeded_axis, ChartFn, ChartId, Lift, Scalar};
use crate::linalg::{dot, Mat};

/// Oblique projectors along the declared decomposition at one point.
#[derive(Clone, Debug)]
pub struct Split<S> {
    pub g: Mat<S>,
    pub a: Mat<S>,
    pub b: Mat<S>,
    /// `[A B]⁻¹`: rows give frame coefficients.
    pub coef: Mat<S>,
    pub ph: Mat<S>,
    pub pv: Mat<S>,
}

impl<S: Scalar> Split<S> {
    pub fn dim(&self) -> usize {
        self.g.rows()
    }

    pub fn proj(&self, which: Subspace) -> &Mat<S> {
        match which {
            Subspace::H => &self.ph,
            Subspace::V => &self.pv,
        }
    }
}

pub fn projectors<S: Scalar>(frame: &FrameField, chart: ChartId, x: &[S]) -> Result<(Mat<S>, Mat<S>, Mat<S>, Mat<S>, Mat<S>)> {
    let a = frame.at::<S>(Subspace::H, chart, x);
    let b = frame.at::<S>(Subspace::V, chart, x);
    let (n, k) = (a.rows(), a.cols());
    let full = Mat::from_fn(n, n, |i, j| if j < k { a[(i, j)] } else { b[(i, j - k)] });
    let coef = full.inverse().map_err(|_| GeoError::FrameDegenerate {
        chart,
        x: x.iter().map(|v| v.re()).collect(),
    })?;
    let ch = Mat::from_fn(k, n, |i, j| coef[(i, j)]);
    let cv = Mat::from_fn(n - k, n, |i, j| coef[(i + k, j)]);
    let ph = a.matmul(&ch);
    let pv = b.matmul(&cv);
    Ok((a, b, coef, ph, pv))
}

pub fn split_at<S: Scalar>(metric: &MetricField, frame: &FrameField, chart: ChartId, x: &[S]) -> Result<Split<S>> {
    let g = metric.at::<S>(chart, x);
    let (a, b, coef, ph, pv) = projectors(frame, chart, x)?;
    Ok(Split { g, a, b, coef, ph, pv })
}

/// Split data with first partials and Levi-Civita symbols.
#[derive(Clone, Debug)]
pub struct SplitJet<S> {
    pub chart: ChartId,
    pub s: Split<S>,
    pub gi: Mat<S>,
    pub dg: Vec<Mat<S>>,
    pub da: Vec<Mat<S>>,
    pub db: Vec<Mat<S>>,
    pub dph: Vec<Mat<S>>,
    pub dpv: Vec<Mat<S>>,
    /// `gamma[i][(k, j)] = Γ^i_{kj}`, the `i`-component of `∇_{∂k} ∂j`.
    pub gamma: Vec<Mat<S>>,
}

fn value_of<S: Lift>(m: &Mat<S::Up>) -> Mat<S> {
    Mat::from_fn(m.rows(), m.cols(), |i, j| S::value(m[(i, j)]))
}

fn tangent_of<S: Lift>(m: &Mat<S::Up>) -> Mat<S> {
    Mat::from_fn(m.rows(), m.cols(), |i, j| S::tangent(m[(i, j)]))
}

pub fn split_jet<S: Lift>(metric: &MetricField, frame: &FrameField, chart: ChartId, x: &[S]) -> Result<SplitJet<S>> {
    let n = x.len();
    let mut parts = Vec::with_capacity(n);
    for k in 0..n {
        parts.push(split_at::<S::Up>(metric, frame, chart, &seeded_axis(x, k))?);
    }
    let s0 = &parts[0];
    let s = Split {
        g: value_of::<S>(&s0.g),
        a: value_of::<S>(&s0.a),
        b: value_of::<S>(&s0.b),
        coef: value_of::<S>(&s0.coef),
        ph: value_of::<S>(&s0.ph),
        pv: value_of::<S>(&s0.pv),
    };
    let dg: Vec<Mat<S>> = parts.iter().map(|p| tangent_of::<S>(&p.g)).collect();
    let da = parts.iter().map(|p| tangent_of::<S>(&p.a)).collect();
    let db = parts.iter().map(|p| tangent_of::<S>(&p.b)).collect();
    let dph = parts.iter().map(|p| tangent_of::<S>(&p.ph)).collect();
    let dpv = parts.iter().map(|p| tangent_of::<S>(&p.pv)).collect();
    let gi = s.g.inverse().map_err(|e| GeoError::MetricDegenerate {
        chart,
        x: x.iter().map(|v| v.re()).collect(),
        pivot: e.pivot,
    })?;
    let gamma = christoffel_from(&gi, &dg);
    Ok(SplitJet { chart, s, gi, dg, da, db, dph, dpv, gamma })
}

/// `Γ^i_{kj} = ½ g^{il}(∂_k g_{jl} + ∂_j g_{kl} − ∂_l g_{kj})`.
pub fn christoffel_from<S: Scalar>(gi: &Mat<S>, dg: &[Mat<S>]) -> Vec<Mat<S>> {
    let n = gi.rows();
    let lowered: Vec<Mat<S>> = (0..n)
        .map(|l| Mat::from_fn(n, n, |k, j| (dg[k][(j, l)] + dg[j][(k, l)] - dg[l][(k, j)]) * 0.5))
        .collect();
    (0..n)
        .map(|i| {
            Mat::from_fn(n, n, |k, j| {
                let mut acc = S::zero();
                for l in 0..n {
                    acc += gi[(i, l)] * lowered[l][(k, j)];
                }
                acc
            })
        })
        .collect()
}

/// Value and first partials of a vector field; `d[k] = ∂_k v`.
#[derive(Clone, Debug, PartialEq)]
pub struct VJet<S> {
    pub v: Vec<S>,
    pub d: Vec<Vec<S>>,
}

impl<S: Scalar> VJet<S> {
    pub fn constant(v: &[f64]) -> Self {
        VJet {
            v: v.iter().map(|&c| S::cst(c)).collect(),
            d: vec![vec![S::zero(); v.len()]; v.len()],
        }
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// Derivative along `u`: `Σ_k u^k ∂_k v`.
    pub fn along(&self, u: &[S]) -> Vec<S> {
        let n = self.v.len();
        (0..n)
            .map(|i| {
                let mut acc = S::zero();
                for (k, &uk) in u.iter().enumerate() {
                    acc += uk * self.d[k][i];
                }
                acc
            })
            .collect()
    }

    pub fn scaled_sum(&self, o: &Self, a: f64, b: f64) -> Self {
        let comb = |x: &[S], y: &[S]| -> Vec<S> { x.iter().zip(y).map(|(&p, &q)| p * a + q * b).collect() };
        VJet {
            v: comb(&self.v, &o.v),
            d: self.d.iter().zip(&o.d).map(|(x, y)| comb(x, y)).collect(),
        }
    }
}

impl<S: Lift> VJet<S> {
    pub fn from_field(f: &dyn ChartFn, chart: ChartId, x: &[S]) -> Self {
        let (v, d) = first_partials::<S>(f, chart, x);
        VJet { v, d }
    }
}

/// How a tangent vector at a point is extended to a local vector field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// Constant chart components.
    Constant,
    /// Constant coefficients in the adapted frame `[A B]`.
    FrameCoefficients,
}

impl<S: Scalar> SplitJet<S> {
    pub fn dim(&self) -> usize {
        self.s.dim()
    }

    pub fn dproj(&self, which: Subspace) -> &[Mat<S>] {
        match which {
            Subspace::H => &self.dph,
            Subspace::V => &self.dpv,
        }
    }

    /// Extends `v` (given at the primal point) to a field.
    pub fn extend(&self, v: &[f64], how: Extension) -> VJet<S> {
        match how {
            Extension::Constant => VJet::constant(v),
            Extension::FrameCoefficients => {
                let n = self.dim();
                let k = self.s.a.cols();
                let coef = self.s.coef.to_f64();
                let c: Vec<S> = coef.mul_vec(v).into_iter().map(S::cst).collect();
                let full = |a: &Mat<S>, b: &Mat<S>| -> Vec<S> {
                    (0..n)
                        .map(|i| {
                            let mut acc = S::zero();
                            for j in 0..n {
                                let f = if j < k { a[(i, j)] } else { b[(i, j - k)] };
                                acc += f * c[j];
                            }
                            acc
                        })
                        .collect()
                };
                VJet {
                    v: full(&self.s.a, &self.s.b),
                    d: (0..n).map(|l| full(&self.da[l], &self.db[l])).collect(),
                }
            }
        }
    }

    /// Jet of `pr X` as a field.
    pub fn project(&self, which: Subspace, x: &VJet<S>) -> VJet<S> {
        let p = self.s.proj(which);
        let dp = self.dproj(which);
        let n = self.dim();
        VJet {
            v: p.mul_vec(&x.v),
            d: (0..n)
                .map(|k| {
                    let a = dp[k].mul_vec(&x.v);
                    let b = p.mul_vec(&x.d[k]);
                    a.into_iter().zip(b).map(|(u, w)| u + w).collect()
                })
                .collect(),
        }
    }

    /// `[X, Y] = DY·X − DX·Y`.
    pub fn bracket(&self, x: &VJet<S>, y: &VJet<S>) -> Vec<S> {
        let a = y.along(&x.v);
        let b = x.along(&y.v);
        a.into_iter().zip(b).map(|(u, w)| u - w).collect()
    }

    /// `Γ(u, w)^i = Γ^i_{kj} u^k w^j`.
    pub fn gamma_apply(&self, u: &[S], w: &[S]) -> Vec<S> {
        self.gamma.iter().map(|gi| gi.bilinear(u, w)).collect()
    }

    /// Levi-Civita `∇_u Y`.
    pub fn lc(&self, u: &[S], y: &VJet<S>) -> Vec<S> {
        let a = y.along(u);
        let b = self.gamma_apply(u, &y.v);
        a.into_iter().zip(b).map(|(p, q)| p + q).collect()
    }

    /// `∇̂_X Y = P∇_{PX}PY + Q∇_{QX}QY + P[QX, PY] + Q[PX, QY]`.
    pub fn rnabla(&self, x: &VJet<S>, y: &VJet<S>) -> Vec<S> {
        let (xh, xv) = (self.project(Subspace::H, x), self.project(Subspace::V, x));
        let (yh, yv) = (self.project(Subspace::H, y), self.project(Subspace::V, y));
        let ph = &self.s.ph;
        let pv = &self.s.pv;
        let t1 = ph.mul_vec(&self.lc(&xh.v, &yh));
        let t2 = pv.mul_vec(&self.lc(&xv.v, &yv));
        let t3 = ph.mul_vec(&self.bracket(&xv, &yh));
        let t4 = pv.mul_vec(&self.bracket(&xh, &yv));
        (0..self.dim()).map(|i| t1[i] + t2[i] + t3[i] + t4[i]).collect()
    }

    /// `(∇_X g)(W1, W2) = X g(W1,W2) − g(∇_X W1, W2) − g(W1, ∇_X W2)` for a
    /// covariant derivative supplied as a closure.
    pub fn metric_derivative(
        &self,
        u: &[S],
        w1: &VJet<S>,
        w2: &VJet<S>,
        nabla: impl Fn(&VJet<S>) -> Vec<S>,
    ) -> S {
        // u(g(W1, W2)) by the product rule
        let g = &self.s.g;
        let mut dg = S::zero();
        for (k, &uk) in u.iter().enumerate() {
            dg += uk * self.dg[k].bilinear(&w1.v, &w2.v);
        }
        let dw = dot(&w1.along(u), &g.mul_vec(&w2.v)) + dot(&w1.v, &g.mul_vec(&w2.along(u)));
        dg + dw - g.bilinear(&nabla(w1), &w2.v) - g.bilinear(&w1.v, &nabla(w2))
    }

    /// Jet of the `j`-th column of the declared frame as a field.
    pub fn frame_jet(&self, which: Subspace, j: usize) -> VJet<S> {
        let (m, dm) = match which {
            Subspace::H => (&self.s.a, &self.da),
            Subspace::V => (&self.s.b, &self.db),
        };
        VJet {
            v: m.col(j),
            d: dm.iter().map(|d| d.col(j)).collect(),
        }
    }

    /// `(L_X g)(Z, W) = X(g(Z,W)) − g([X,Z], W) − g(Z, [X,W])`.
    pub fn lie_derivative_metric_pair(&self, x: &VJet<S>, z: &VJet<S>, w: &VJet<S>) -> S {
        let g = &self.s.g;
        let mut xg = S::zero();
        for (k, &xk) in x.v.iter().enumerate() {
            xg += xk * self.dg[k].bilinear(&z.v, &w.v);
        }
        xg += dot(&z.along(&x.v), &g.mul_vec(&w.v)) + dot(&z.v, &g.mul_vec(&w.along(&x.v)));
        xg - g.bilinear(&self.bracket(x, z), &w.v) - g.bilinear(&z.v, &self.bracket(x, w))
    }

    /// `(L_X g)(Z, Z) = X(g(Z,Z)) − 2 g([X,Z], Z)`.
    pub fn lie_derivative_metric(&self, x: &VJet<S>, z: &VJet<S>) -> S {
        let g = &self.s.g;
        let mut xg = S::zero();
        for (k, &xk) in x.v.iter().enumerate() {
            xg += xk * self.dg[k].bilinear(&z.v, &z.v);
        }
        xg += dot(&z.along(&x.v), &g.mul_vec(&z.v)) * 2.0;
        xg - g.bilinear(&self.bracket(x, z), &z.v) * 2.0
    }
}
