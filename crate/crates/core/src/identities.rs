//! Named residual checks evaluated on one [`ExtrinsicData`] instance.
//!
//! Each check draws random tangent vectors (coordinate components) and random
//! normal vectors (components in the adapted normal frame) and compares the two
//! sides of an identity assembled from different fields of the package.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ambient::AmbientModel;
use crate::error::GeomError;
use crate::submanifold::{relative_gap, ExtrinsicData};

/// Random vector tuples drawn per identity and point.
pub const TUPLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub id: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl IdentityCheck {
    fn new(id: &str, residual: f64, tolerance: f64) -> Self {
        Self {
            id: id.to_string(),
            residual,
            tolerance,
            // NaN residuals must fail
            passed: residual <= tolerance,
        }
    }
}

/// `(id, default tolerance, statement)` for every registered check, in report order.
pub const REGISTRY: &[(&str, f64, &str)] = &[
    ("ambient_hermitian", 1e-10, "g̃(JX, JY) = g̃(X, Y)"),
    ("ambient_parallel_j", 1e-9, "∇̃J = 0"),
    ("ambient_curvature_closed_form", 1e-8, "chart curvature equals the space-form closed form"),
    ("ambient_holomorphic_curvature", 1e-8, "K(X, JX) = c"),
    ("complex_tangent_space", 1e-9, "J(TF) ⊂ TF"),
    ("induced_metric_parallel", 1e-9, "∇g = 0"),
    ("normal_frame_orthonormal", 1e-10, "g̃(n_α, n_β) = δ_αβ and g̃(n_α, ∂_i) = 0"),
    ("normal_connection_antisymmetric", 1e-10, "Γ⊥_αβ|i + Γ⊥_βα|i = 0"),
    ("gauss_equation", 1e-8, "R = R̃ − g̃(b(X,Z), b(Y,W)) + g̃(b(X,W), b(Y,Z))"),
    ("codazzi_equation", 1e-8, "(∇̄_X b)(Y,Z) − (∇̄_Y b)(X,Z) = (R̃(X,Y)Z)⊥"),
    ("ambient_curvature_normal_part", 1e-9, "(R̃(X,Y)Z)⊥ = 0 on a complex submanifold"),
    ("codazzi_symmetry", 1e-8, "∇̄b is totally symmetric"),
    ("ricci_equation", 1e-8, "R⊥(X,Y,ξ,η) = R̃(X,Y,ξ,η) + g([A_ξ, A_η]X, Y)"),
    ("shape_duality", 1e-8, "g̃(b(X,Y), ξ) = g(A_ξ X, Y)"),
    ("shape_trace", 1e-9, "tr A_ξ = 0"),
    ("nabla_shape_duality", 1e-8, "g((∇̄_Z A)_ξ X, Y) = g̃((∇̄_Z b)(X,Y), ξ)"),
    ("nabla_shape_self_adjoint", 1e-8, "g((∇̄_Z A)_ξ X, Y) = g(X, (∇̄_Z A)_ξ Y)"),
    ("nabla_shape_normal_j", 1e-8, "(∇̄_X A)_{Jξ} = J(∇̄_X A)_ξ"),
    ("levi_civita_j", 1e-8, "∇_X JY = J∇_X Y"),
    ("second_fundamental_form_j", 1e-8, "J b(X,Y) = b(X, JY)"),
    ("shape_normal_j", 1e-8, "A_{Jξ} = J A_ξ"),
    ("normal_connection_j", 1e-8, "D_X Jξ = J D_X ξ"),
    ("nabla_b_j", 1e-8, "(∇̄_{JZ} b)(X,Y) = J(∇̄_Z b)(X,Y)"),
    ("nabla_shape_tangent_j", 1e-8, "(∇̄_{JZ} A)_ξ = −J(∇̄_Z A)_ξ"),
    ("shape_anticommutes_j", 1e-8, "J A_ξ = −A_ξ J"),
    ("nabla_shape_anticommutes_j", 1e-8, "J(∇̄_Z A)_ξ = −(∇̄_Z A)_ξ J"),
    ("kaehler_form_parallel", 1e-8, "∇̄_Z(g̃(X, JY) Jξ) = 0"),
    ("normal_curvature_closed_form", 1e-8, "R⊥(X,Y)ξ = (c/2) g̃(X, JY) Jξ + b(X, A_ξ Y) − b(Y, A_ξ X)"),
    ("nabla_normal_curvature_expansion", 1e-8, "∇̄R⊥ in terms of ∇̄b, b, ∇̄A and A"),
    ("nabla_normal_curvature_commutator", 1e-8, "(∇̄_Z R⊥)(X,Y,ξ,η) = g([(∇̄_Z A)_ξ, A_η]X, Y) + g([A_ξ, (∇̄_Z A)_η]X, Y)"),
    ("nabla_normal_curvature_j", 1e-8, "(∇̄_{JZ} R⊥)(X,Y,ξ,η) = (∇̄_Z R⊥)(X,Y,Jξ,η) − 2g([(∇̄_Z A)_{Jξ}, A_η]X, Y)"),
    ("path_nabla_b", 1e-9, "coordinate ∇̄b equals the frame-field evaluation"),
    ("path_normal_curvature", 1e-8, "connection-curvature R⊥ equals the Ricci-equation R⊥"),
    ("path_intrinsic_curvature", 1e-8, "intrinsic R equals the Gauss-equation R"),
    ("path_nabla_riemann", 1e-8, "∇R expanded in b and ∇̄b equals direct differentiation"),
];

pub fn check_ids() -> impl Iterator<Item = &'static str> {
    REGISTRY.iter().map(|(id, _, _)| *id)
}

pub fn is_registered(id: &str) -> bool {
    check_ids().any(|k| k == id)
}

/// Tolerance table with per-id overrides on top of the registry defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Tolerances {
    overrides: BTreeMap<String, f64>,
}

impl Tolerances {
    /// Fails with the offending id if it is not registered.
    pub fn set(&mut self, id: &str, tol: f64) -> Result<(), String> {
        if !is_registered(id) {
            return Err(id.to_string());
        }
        self.overrides.insert(id.to_string(), tol);
        Ok(())
    }

    pub fn get(&self, id: &str) -> f64 {
        if let Some(&t) = self.overrides.get(id) {
            return t;
        }
        REGISTRY
            .iter()
            .find(|(k, _, _)| *k == id)
            .map(|(_, t, _)| *t)
            .unwrap_or_else(|| panic!("unregistered check id {id}"))
    }
}

/// Worst normalised gap over the tuples seen so far.
#[derive(Default)]
struct Gap(f64);

impl Gap {
    fn push(&mut self, lhs: &[f64], rhs: &[f64]) {
        let r = relative_gap(lhs, rhs);
        self.0 = if r.is_nan() { f64::NAN } else { self.0.max(r) };
    }

    fn push_scalar(&mut self, lhs: f64, rhs: f64) {
        self.push(&[lhs], &[rhs]);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn scaled(a: &[f64], k: f64) -> Vec<f64> {
    a.iter().map(|x| k * x).collect()
}

/// Contractions of the package fields with frame-component vectors.
struct Frame<'a> {
    d: &'a ExtrinsicData,
    n: usize,
    p: usize,
}

impl<'a> Frame<'a> {
    fn new(d: &'a ExtrinsicData) -> Self {
        Self { d, n: d.n(), p: d.p() }
    }

    fn g(&self, x: &[f64], y: &[f64]) -> f64 {
        let g = &self.d.metric;
        (0..self.n).map(|i| (0..self.n).map(|j| x[i] * g[[i, j]] * y[j]).sum::<f64>()).sum()
    }

    fn jt(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|k| (0..self.n).map(|i| self.d.j_tan[[k, i]] * x[i]).sum()).collect()
    }

    fn jn(&self, xi: &[f64]) -> Vec<f64> {
        (0..self.p).map(|b| (0..self.p).map(|a| self.d.j_nor[[b, a]] * xi[a]).sum()).collect()
    }

    /// `b(X, Y)` in normal-frame components.
    fn b(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        (0..self.p)
            .map(|a| {
                let mut s = 0.0;
                for i in 0..self.n {
                    for j in 0..self.n {
                        s += self.d.b[[a, i, j]] * x[i] * y[j];
                    }
                }
                s
            })
            .collect()
    }

    /// `A_ξ X` in coordinate components.
    fn a(&self, xi: &[f64], x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|k| {
                let mut s = 0.0;
                for a in 0..self.p {
                    for i in 0..self.n {
                        s += xi[a] * self.d.shape[[a, i, k]] * x[i];
                    }
                }
                s
            })
            .collect()
    }

    fn nabla_b(&self, z: &[f64], x: &[f64], y: &[f64]) -> Vec<f64> {
        (0..self.p)
            .map(|a| {
                let mut s = 0.0;
                for q in 0..self.n {
                    for i in 0..self.n {
                        for j in 0..self.n {
                            s += self.d.nabla_b[[q, a, i, j]] * z[q] * x[i] * y[j];
                        }
                    }
                }
                s
            })
            .collect()
    }

    /// `(∇̄_Z A)_ξ X`
    fn nabla_a(&self, z: &[f64], xi: &[f64], x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|k| {
                let mut s = 0.0;
                for q in 0..self.n {
                    for a in 0..self.p {
                        for j in 0..self.n {
                            s += self.d.nabla_shape[[q, a, j, k]] * z[q] * xi[a] * x[j];
                        }
                    }
                }
                s
            })
            .collect()
    }

    /// `R⊥(X, Y)ξ` in normal-frame components, from the connection path.
    fn rperp(&self, x: &[f64], y: &[f64], xi: &[f64]) -> Vec<f64> {
        (0..self.p)
            .map(|b| {
                let mut s = 0.0;
                for i in 0..self.n {
                    for j in 0..self.n {
                        for a in 0..self.p {
                            s += self.d.normal_curvature[[i, j, a, b]] * x[i] * y[j] * xi[a];
                        }
                    }
                }
                s
            })
            .collect()
    }

    /// `(∇̄_Z R⊥)(X, Y)ξ` in normal-frame components.
    fn nabla_rperp(&self, z: &[f64], x: &[f64], y: &[f64], xi: &[f64]) -> Vec<f64> {
        (0..self.p)
            .map(|b| {
                let mut s = 0.0;
                for q in 0..self.n {
                    for i in 0..self.n {
                        for j in 0..self.n {
                            for a in 0..self.p {
                                s += self.d.nabla_normal_curvature[[q, i, j, a, b]] * z[q] * x[i] * y[j] * xi[a];
                            }
                        }
                    }
                }
                s
            })
            .collect()
    }

    fn riemann(&self, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        s += self.d.riemann[[i, j, k, l]] * x[i] * y[j] * z[k] * w[l];
                    }
                }
            }
        }
        s
    }

    fn tangent_ambient(&self, x: &[f64]) -> Vec<f64> {
        let dim = self.d.tangent.ncols();
        (0..dim).map(|c| (0..self.n).map(|i| x[i] * self.d.tangent[[i, c]]).sum()).collect()
    }

    fn normal_ambient(&self, xi: &[f64]) -> Vec<f64> {
        let dim = self.d.normal.ncols();
        (0..dim).map(|c| (0..self.p).map(|a| xi[a] * self.d.normal[[a, c]]).sum()).collect()
    }

    fn ambient_ip(&self, a: &[f64], b: &[f64]) -> f64 {
        let g = &self.d.ambient_metric;
        let dim = a.len();
        (0..dim).map(|i| (0..dim).map(|j| a[i] * g[[i, j]] * b[j]).sum::<f64>()).sum()
    }

    /// Normal-frame components of an ambient vector.
    fn normal_components(&self, v: &[f64]) -> Vec<f64> {
        (0..self.p)
            .map(|a| self.ambient_ip(&self.normal_ambient(&unit(self.p, a)), v))
            .collect()
    }
}

fn unit(len: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[k] = 1.0;
    v
}

/// Seeded random vectors in `[-1, 1]`.
struct Draw(ChaCha8Rng);

impl Draw {
    fn vec(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.0.random_range(-1.0..1.0)).collect()
    }
}

/// Evaluates every registered check with default tolerances.
pub fn run_identity_suite(
    data: &ExtrinsicData,
    ambient: &AmbientModel,
    rng_seed: u64,
) -> Result<Vec<IdentityCheck>, GeomError> {
    run_identity_suite_with(data, ambient, rng_seed, &Tolerances::default())
}

pub fn run_identity_suite_with(
    data: &ExtrinsicData,
    ambient: &AmbientModel,
    rng_seed: u64,
    tolerances: &Tolerances,
) -> Result<Vec<IdentityCheck>, GeomError> {
    let residuals = residuals(data, ambient, rng_seed)?;
    Ok(REGISTRY
        .iter()
        .map(|(id, _, _)| IdentityCheck::new(id, residuals[id], tolerances.get(id)))
        .collect())
}

fn max_abs<'a>(it: impl IntoIterator<Item = &'a f64>) -> f64 {
    it.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Raw residual of every registered check, keyed by id.
pub fn residuals(
    data: &ExtrinsicData,
    ambient: &AmbientModel,
    rng_seed: u64,
) -> Result<BTreeMap<&'static str, f64>, GeomError> {
    let f = Frame::new(data);
    let (n, p) = (f.n, f.p);
    let mut out: BTreeMap<&'static str, f64> = BTreeMap::new();
    let mut rng = Draw(ChaCha8Rng::seed_from_u64(rng_seed));

    let kaehler = ambient.check_kaehler(&data.point)?;
    let curvature = ambient.check_curvature(&data.point, rng.0.random(), TUPLES)?;
    let gscale = 1.0 + max_abs(&data.ambient_metric);
    out.insert("ambient_hermitian", kaehler.hermitian / gscale);
    out.insert("ambient_parallel_j", kaehler.parallel_j / gscale);
    out.insert("ambient_curvature_closed_form", curvature.closed_form);
    out.insert("ambient_holomorphic_curvature", curvature.holomorphic_error / (1.0 + ambient.c().abs()));
    out.insert("complex_tangent_space", data.tangent_j_residual / (1.0 + max_abs(&data.tangent)));

    let mut gap = Gap::default();
    for s in 0..n {
        let lhs: Vec<f64> = (0..n * n).map(|ij| data.metric_deriv[[s, ij / n, ij % n]]).collect();
        let rhs: Vec<f64> = (0..n * n)
            .map(|ij| {
                let (i, j) = (ij / n, ij % n);
                (0..n)
                    .map(|t| data.christoffel[[t, s, i]] * data.metric[[t, j]] + data.christoffel[[t, s, j]] * data.metric[[i, t]])
                    .sum()
            })
            .collect();
        gap.push(&lhs, &rhs);
    }
    out.insert("induced_metric_parallel", gap.0);

    let mut worst = 0.0_f64;
    for a in 0..p {
        let na = f.normal_ambient(&unit(p, a));
        for b in 0..p {
            let nb = f.normal_ambient(&unit(p, b));
            worst = worst.max((f.ambient_ip(&na, &nb) - if a == b { 1.0 } else { 0.0 }).abs());
        }
        for i in 0..n {
            let t = f.tangent_ambient(&unit(n, i));
            let scale = f.ambient_ip(&t, &t).sqrt();
            worst = worst.max(f.ambient_ip(&na, &t).abs() / (1.0 + scale));
        }
    }
    out.insert("normal_frame_orthonormal", worst);

    let gp = &data.normal_connection;
    let mut worst = 0.0_f64;
    for a in 0..p {
        for b in 0..p {
            for i in 0..n {
                worst = worst.max((gp[[a, b, i]] + gp[[b, a, i]]).abs() / (1.0 + gp[[a, b, i]].abs()));
            }
        }
    }
    out.insert("normal_connection_antisymmetric", worst);

    // Gauss: intrinsic path against the closed-form ambient term plus b.
    let mut gap = Gap::default();
    for _ in 0..TUPLES {
        let (x, y, z, w) = (rng.vec(n), rng.vec(n), rng.vec(n), rng.vec(n));
        let amb = ambient_form(&f, ambient, &f.tangent_ambient(&x), &f.tangent_ambient(&y), &f.tangent_ambient(&z), &f.tangent_ambient(&w));
        let rhs = amb - dot(&f.b(&x, &z), &f.b(&y, &w)) + dot(&f.b(&x, &w), &f.b(&y, &z));
        gap.push_scalar(f.riemann(&x, &y, &z, &w), rhs);
    }
    out.insert("gauss_equation", gap.0);

    let (mut codazzi, mut normal_part, mut symmetry) = (Gap::default(), 0.0_f64, Gap::default());
    for _ in 0..TUPLES {
        let (x, y, z) = (rng.vec(n), rng.vec(n), rng.vec(n));
        let lhs = sub(&f.nabla_b(&x, &y, &z), &f.nabla_b(&y, &x, &z));
        let r = ambient.curvature_with_metric(
            data.ambient_metric.view(),
            ndarray::ArrayView1::from(&f.tangent_ambient(&x)),
            ndarray::ArrayView1::from(&f.tangent_ambient(&y)),
            ndarray::ArrayView1::from(&f.tangent_ambient(&z)),
        );
        let perp = f.normal_components(&r);
        codazzi.push(&lhs, &perp);
        normal_part = normal_part.max(max_abs(&perp) / (1.0 + max_abs(&r)));

        let base = f.nabla_b(&x, &y, &z);
        symmetry.push(&base, &f.nabla_b(&y, &x, &z));
        symmetry.push(&base, &f.nabla_b(&z, &y, &x));
        symmetry.push(&base, &f.nabla_b(&x, &z, &y));
    }
    out.insert("codazzi_equation", codazzi.0);
    out.insert("ambient_curvature_normal_part", normal_part);
    out.insert("codazzi_symmetry", symmetry.0);

    let mut gap = Gap::default();
    for _ in 0..TUPLES {
        let (x, y, xi, eta) = (rng.vec(n), rng.vec(n), rng.vec(p), rng.vec(p));
        let lhs = dot(&f.rperp(&x, &y, &xi), &eta);
        let amb = ambient_form(&f, ambient, &f.tangent_ambient(&x), &f.tangent_ambient(&y), &f.normal_ambient(&xi), &f.normal_ambient(&eta));
        let comm = f.g(&f.a(&xi, &f.a(&eta, &x)), &y) - f.g(&f.a(&eta, &f.a(&xi, &x)), &y);
        gap.push_scalar(lhs, amb + comm);
    }
    out.insert("ricci_equation", gap.0);

    let (mut duality, mut trace) = (Gap::default(), 0.0_f64);
    for _ in 0..TUPLES {
        let (x, y, xi) = (rng.vec(n), rng.vec(n), rng.vec(p));
        duality.push_scalar(dot(&f.b(&x, &y), &xi), f.g(&f.a(&xi, &x), &y));
    }
    for a in 0..p {
        let op = data.shape.index_axis(ndarray::Axis(0), a);
        let tr: f64 = (0..n).map(|i| op[[i, i]]).sum();
        trace = trace.max(tr.abs() / (1.0 + max_abs(op.iter())));
    }
    out.insert("shape_duality", duality.0);
    out.insert("shape_trace", trace);

    let (mut duality, mut adjoint, mut normal_j) = (Gap::default(), Gap::default(), Gap::default());
    for _ in 0..TUPLES {
        let (z, x, y, xi) = (rng.vec(n), rng.vec(n), rng.vec(n), rng.vec(p));
        let na = f.nabla_a(&z, &xi, &x);
        duality.push_scalar(f.g(&na, &y), dot(&f.nabla_b(&z, &x, &y), &xi));
        adjoint.push_scalar(f.g(&na, &y), f.g(&x, &f.nabla_a(&z, &xi, &y)));
        normal_j.push(&f.nabla_a(&z, &f.jn(&xi), &x), &f.jt(&na));
    }
    out.insert("nabla_shape_duality", duality.0);
    out.insert("nabla_shape_self_adjoint", adjoint.0);
    out.insert("nabla_shape_normal_j", normal_j.0);

    out.insert("levi_civita_j", levi_civita_j(&f, &mut rng));
    out.insert("normal_connection_j", normal_connection_j(&f, &mut rng));

    let (mut bj, mut aj, mut anti) = (Gap::default(), Gap::default(), Gap::default());
    for _ in 0..TUPLES {
        let (x, y, xi) = (rng.vec(n), rng.vec(n), rng.vec(p));
        bj.push(&f.jn(&f.b(&x, &y)), &f.b(&x, &f.jt(&y)));
        aj.push(&f.a(&f.jn(&xi), &x), &f.jt(&f.a(&xi, &x)));
        anti.push(&f.jt(&f.a(&xi, &x)), &scaled(&f.a(&xi, &f.jt(&x)), -1.0));
    }
    out.insert("second_fundamental_form_j", bj.0);
    out.insert("shape_normal_j", aj.0);
    out.insert("shape_anticommutes_j", anti.0);

    let (mut nbj, mut naj, mut nanti) = (Gap::default(), Gap::default(), Gap::default());
    for _ in 0..TUPLES {
        let (z, x, y, xi) = (rng.vec(n), rng.vec(n), rng.vec(n), rng.vec(p));
        nbj.push(&f.nabla_b(&f.jt(&z), &x, &y), &f.jn(&f.nabla_b(&z, &x, &y)));
        naj.push(&f.nabla_a(&f.jt(&z), &xi, &x), &scaled(&f.jt(&f.nabla_a(&z, &xi, &x)), -1.0));
        nanti.push(&f.jt(&f.nabla_a(&z, &xi, &x)), &scaled(&f.nabla_a(&z, &xi, &f.jt(&x)), -1.0));
    }
    out.insert("nabla_b_j", nbj.0);
    out.insert("nabla_shape_tangent_j", naj.0);
    out.insert("nabla_shape_anticommutes_j", nanti.0);

    out.insert("kaehler_form_parallel", kaehler_form_parallel(&f, &mut rng));

    let c = data.c;
    let mut gap = Gap::default();
    for _ in 0..TUPLES {
        let (x, y, xi) = (rng.vec(n), rng.vec(n), rng.vec(p));
        let first = scaled(&f.jn(&xi), 0.5 * c * f.g(&x, &f.jt(&y)));
        let rhs = add(&first, &sub(&f.b(&x, &f.a(&xi, &y)), &f.b(&y, &f.a(&xi, &x))));
        gap.push(&f.rperp(&x, &y, &xi), &rhs);
    }
    out.insert("normal_curvature_closed_form", gap.0);

    let (mut expansion, mut commutator, mut jvar) = (Gap::default(), Gap::default(), Gap::default());
    // g([P, Q]X, Y) for tangent endomorphisms given as closures
    let bracket = |pq: &dyn Fn(&[f64]) -> Vec<f64>, qp: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], y: &[f64]| {
        f.g(&sub(&pq(x), &qp(x)), y)
    };
    for _ in 0..TUPLES {
        let (z, x, y, xi, eta) = (rng.vec(n), rng.vec(n), rng.vec(n), rng.vec(p), rng.vec(p));
        let lhs = f.nabla_rperp(&z, &x, &y, &xi);
        let rhs = sub(
            &add(&f.nabla_b(&z, &x, &f.a(&xi, &y)), &f.b(&x, &f.nabla_a(&z, &xi, &y))),
            &add(&f.nabla_b(&z, &y, &f.a(&xi, &x)), &f.b(&y, &f.nabla_a(&z, &xi, &x))),
        );
        expansion.push(&lhs, &rhs);

        let lhs_s = dot(&lhs, &eta);
        let t1 = bracket(
            &|v| f.nabla_a(&z, &xi, &f.a(&eta, v)),
            &|v| f.a(&eta, &f.nabla_a(&z, &xi, v)),
            &x,
            &y,
        );
        let t2 = bracket(
            &|v| f.a(&xi, &f.nabla_a(&z, &eta, v)),
            &|v| f.nabla_a(&z, &eta, &f.a(&xi, v)),
            &x,
            &y,
        );
        commutator.push_scalar(lhs_s, t1 + t2);

        let jxi = f.jn(&xi);
        let left = dot(&f.nabla_rperp(&f.jt(&z), &x, &y, &xi), &eta);
        let shifted = dot(&f.nabla_rperp(&z, &x, &y, &jxi), &eta);
        let corr = bracket(
            &|v| f.nabla_a(&z, &jxi, &f.a(&eta, v)),
            &|v| f.a(&eta, &f.nabla_a(&z, &jxi, v)),
            &x,
            &y,
        );
        jvar.push_scalar(left, shifted - 2.0 * corr);
    }
    out.insert("nabla_normal_curvature_expansion", expansion.0);
    out.insert("nabla_normal_curvature_commutator", commutator.0);
    out.insert("nabla_normal_curvature_j", jvar.0);

    out.insert("path_nabla_b", relative_gap(&data.nabla_b, &data.nabla_b_frame));
    out.insert(
        "path_normal_curvature",
        relative_gap(&data.normal_curvature, &data.normal_curvature_ricci),
    );
    out.insert("path_intrinsic_curvature", relative_gap(&data.riemann, &data.riemann_gauss));
    out.insert("path_nabla_riemann", relative_gap(&data.nabla_riemann, &data.nabla_riemann_direct));

    debug_assert_eq!(out.len(), REGISTRY.len());
    Ok(out)
}

fn ambient_form(f: &Frame<'_>, ambient: &AmbientModel, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
    let r = ambient.curvature_with_metric(
        f.d.ambient_metric.view(),
        ndarray::ArrayView1::from(x),
        ndarray::ArrayView1::from(y),
        ndarray::ArrayView1::from(z),
    );
    f.ambient_ip(&r, w)
}

/// `∇_X(JY)` against `J∇_X Y` for a field `Y` with constant coordinate components.
fn levi_civita_j(f: &Frame<'_>, rng: &mut Draw) -> f64 {
    let (n, d) = (f.n, f.d);
    let mut gap = Gap::default();
    for _ in 0..TUPLES {
        let (x, y) = (rng.vec(n), rng.vec(n));
        let lhs: Vec<f64> = (0..n)
            .map(|k| {
                let mut s = 0.0;
                for q in 0..n {
                    for i in 0..n {
                        s += x[q] * d.j_tan_deriv[[q, k, i]] * y[i];
                        for t in 0..n {
                            s += x[q] * d.christoffel[[k, q, t]] * d.j_tan[[t, i]] * y[i];
                        }
                    }
                }
                s
            })
            .collect();
        let nabla_y: Vec<f64> = (0..n)
            .map(|t| {
                let mut s = 0.0;
                for q in 0..n {
                    for i in 0..n {
                        s += d.christoffel[[t, q, i]] * x[q] * y[i];
                    }
                }
                s
            })
            .collect();
        gap.push(&lhs, &f.jt(&nabla_y));
    }
    gap.0
}

/// `D_X(Jξ)` against `J D_X ξ` for `ξ` with constant normal-frame components.
fn normal_connection_j(f: &Frame<'_>, rng: &mut Draw) -> f64 {
    let (n, p, d) = (f.n, f.p, f.d);
    let gp = &d.normal_connection;
    let mut gap = Gap::default();
    for _ in 0..TUPLES {
        let (x, xi) = (rng.vec(n), rng.vec(p));
        let jxi = f.jn(&xi);
        let lhs: Vec<f64> = (0..p)
            .map(|g| {
                let mut s = 0.0;
                for i in 0..n {
                    for a in 0..p {
                        s += x[i] * d.j_nor_deriv[[i, g, a]] * xi[a] + x[i] * gp[[g, a, i]] * jxi[a];
                    }
                }
                s
            })
            .collect();
        let dxi: Vec<f64> = (0..p)
            .map(|a| {
                let mut s = 0.0;
                for i in 0..n {
                    for b in 0..p {
                        s += x[i] * gp[[a, b, i]] * xi[b];
                    }
                }
                s
            })
            .collect();
        gap.push(&lhs, &f.jn(&dxi));
    }
    gap.0
}

/// Expands `∇̄_Z(ω(X,Y) Jξ)` with `ω(X,Y) = g(X, JY)` into `(∇_Z ω)(X,Y) Jξ + ω(X,Y)(D_Z J)ξ`.
/// The two partial terms are compared against their sum being zero.
fn kaehler_form_parallel(f: &Frame<'_>, rng: &mut Draw) -> f64 {
    let (n, p, d) = (f.n, f.p, f.d);
    let gp = &d.normal_connection;
    // ω_ij = g_ik J^k_j and its derivatives
    let omega = |i: usize, j: usize| (0..n).map(|k| d.metric[[i, k]] * d.j_tan[[k, j]]).sum::<f64>();
    let domega = |s: usize, i: usize, j: usize| {
        (0..n)
            .map(|k| d.metric_deriv[[s, i, k]] * d.j_tan[[k, j]] + d.metric[[i, k]] * d.j_tan_deriv[[s, k, j]])
            .sum::<f64>()
    };
    let mut worst = 0.0_f64;
    for _ in 0..TUPLES {
        let (z, x, y, xi) = (rng.vec(n), rng.vec(n), rng.vec(n), rng.vec(p));
        let mut nabla_omega = 0.0;
        let mut omega_xy = 0.0;
        let mut scale = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                omega_xy += omega(i, j) * x[i] * y[j];
                for s in 0..n {
                    let mut v = domega(s, i, j);
                    scale = scale.max(v.abs());
                    for t in 0..n {
                        v -= d.christoffel[[t, s, i]] * omega(t, j) + d.christoffel[[t, s, j]] * omega(i, t);
                    }
                    nabla_omega += v * z[s] * x[i] * y[j];
                }
            }
        }
        let jxi = f.jn(&xi);
        let dj: Vec<f64> = (0..p)
            .map(|b| {
                let mut s = 0.0;
                for q in 0..n {
                    for a in 0..p {
                        let mut v = d.j_nor_deriv[[q, b, a]];
                        for g in 0..p {
                            v += gp[[b, g, q]] * d.j_nor[[g, a]] - d.j_nor[[b, g]] * gp[[g, a, q]];
                        }
                        s += v * z[q] * xi[a];
                    }
                }
                s
            })
            .collect();
        let total = add(&scaled(&jxi, nabla_omega), &scaled(&dj, omega_xy));
        let terms = max_abs(&jxi) * (nabla_omega.abs() + scale) + omega_xy.abs() * max_abs(&dj);
        worst = worst.max(max_abs(&total) / (1.0 + terms));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::submanifold::{compute, find_case, perturb_second_fundamental_form, ComputeOptions};

    fn data(name: &str, u: &[f64]) -> (ExtrinsicData, AmbientModel) {
        let case = find_case(name).unwrap();
        (compute(&case, u, &ComputeOptions::default()).unwrap(), case.ambient)
    }

    #[test]
    fn registry_ids_are_unique() {
        let mut ids: Vec<&str> = check_ids().collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), REGISTRY.len());
    }

    #[test]
    fn linear_case_vanishes() {
        let (d, amb) = data("linear_c2", &[0.2, 0.6]);
        for c in run_identity_suite(&d, &amb, 1).unwrap() {
            assert!(c.residual < 1e-15, "{} {}", c.id, c.residual);
        }
    }

    #[test]
    fn suite_passes_on_every_case() {
        for case in crate::submanifold::catalog() {
            let d = compute(&case, &[0.37, -0.61], &ComputeOptions::default()).unwrap();
            for c in run_identity_suite(&d, &case.ambient, 5).unwrap() {
                assert!(c.passed, "{} {} {}", case.name, c.id, c.residual);
            }
        }
    }

    #[test]
    fn perturbed_b_fails_duality() {
        let (d, amb) = data("graph_z2_c2", &[0.3, 0.2]);
        let bad = perturb_second_fundamental_form(&d, 1e-3, 17);
        let r = residuals(&bad, &amb, 3).unwrap();
        assert!(r["nabla_shape_duality"] >= 1e-4, "{}", r["nabla_shape_duality"]);
        assert!(r["shape_duality"] >= 1e-5);
    }

    #[test]
    fn overrides_apply_and_reject_unknown() {
        let mut t = Tolerances::default();
        assert_eq!(t.get("gauss_equation"), 1e-8);
        t.set("gauss_equation", 1e-15).unwrap();
        assert_eq!(t.get("gauss_equation"), 1e-15);
        assert_eq!(t.set("nope", 1.0), Err("nope".to_string()));
        let c = IdentityCheck::new("x", f64::NAN, 1.0);
        assert!(!c.passed);
    }
}
