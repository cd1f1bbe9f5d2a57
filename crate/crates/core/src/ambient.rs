//! Kaehler manifolds of constant holomorphic sectional curvature in one real chart.
//!
//! Complex coordinate `w^a` is paired with real coordinates `(u^{2a}, u^{2a+1})`
//! and the complex structure acts as `J e_{2a} = e_{2a+1}`, `J e_{2a+1} = -e_{2a}`.

use ndarray::{Array2, Array3, Array4, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::GeomError;
use crate::jets::{Jet3, Scalar};
use crate::linalg::{self, invert_jets};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbientKind {
    Flat,
    FubiniStudy,
}

/// A complex space form `M(c)` of complex dimension `complex_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientModel {
    kind: AmbientKind,
    c: f64,
    complex_dim: usize,
    // Non-Hermitian corruption of g_00, only used as a negative control.
    perturbation: f64,
}

impl AmbientModel {
    pub fn flat(complex_dim: usize) -> Self {
        assert!(complex_dim >= 1, "complex dimension must be positive");
        Self {
            kind: AmbientKind::Flat,
            c: 0.0,
            complex_dim,
            perturbation: 0.0,
        }
    }

    /// Fubini-Study chart scaled so the holomorphic sectional curvature is `c`.
    pub fn fubini_study(c: f64, complex_dim: usize) -> Result<Self, GeomError> {
        if !(c > 0.0) {
            return Err(GeomError::InvalidModel(format!(
                "Fubini-Study curvature must be positive, got {c}"
            )));
        }
        if complex_dim == 0 {
            return Err(GeomError::InvalidModel("complex dimension must be positive".into()));
        }
        Ok(Self {
            kind: AmbientKind::FubiniStudy,
            c,
            complex_dim,
            perturbation: 0.0,
        })
    }

    /// Adds `eps * (1 + x_0^2)` to `g_00`, which breaks both the Hermitian
    /// condition and parallelism of `J`.
    pub fn with_metric_perturbation(mut self, eps: f64) -> Self {
        self.perturbation = eps;
        self
    }

    pub fn kind(&self) -> AmbientKind {
        self.kind
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn complex_dim(&self) -> usize {
        self.complex_dim
    }

    pub fn real_dim(&self) -> usize {
        2 * self.complex_dim
    }

    /// Metric components at a chart point, over any scalar type.
    pub fn metric<S: Scalar>(&self, x: &[S]) -> Result<Array2<S>, GeomError> {
        let dim = self.real_dim();
        assert_eq!(x.len(), dim, "chart point has wrong dimension");
        let zero = x[0].lift(0.0);
        let one = x[0].lift(1.0);
        let mut g = Array2::from_elem((dim, dim), zero.clone());
        match self.kind {
            AmbientKind::Flat => {
                for a in 0..dim {
                    g[[a, a]] = one.clone();
                }
            }
            AmbientKind::FubiniStudy => {
                // h_{jk̄} = (4/c) ∂_j ∂_k̄ log(1 + |w|^2), g = Re h on real vectors
                let k = 4.0 / self.c;
                let mut s = one.clone();
                for xi in x {
                    s = s + xi.clone() * xi.clone();
                }
                let inv_s = one.try_div(&s)?;
                let inv_s2 = inv_s.clone() * inv_s.clone();
                let n = self.complex_dim;
                for j in 0..n {
                    for l in 0..n {
                        let (xj, yj) = (x[2 * j].clone(), x[2 * j + 1].clone());
                        let (xl, yl) = (x[2 * l].clone(), x[2 * l + 1].clone());
                        let re = xj.clone() * xl.clone() + yj.clone() * yl.clone();
                        let im = xj * yl - yj * xl;
                        let mut p = -(re * inv_s2.clone());
                        if j == l {
                            p = p + inv_s.clone();
                        }
                        let q = -(im * inv_s2.clone());
                        let p = p.scale(k);
                        let q = q.scale(k);
                        g[[2 * j, 2 * l]] = p.clone();
                        g[[2 * j + 1, 2 * l + 1]] = p;
                        g[[2 * j, 2 * l + 1]] = q.clone();
                        g[[2 * j + 1, 2 * l]] = -q;
                    }
                }
            }
        }
        if self.perturbation != 0.0 {
            let bump = (one + x[0].clone() * x[0].clone()).scale(self.perturbation);
            g[[0, 0]] = g[[0, 0]].clone() + bump;
        }
        Ok(g)
    }

    pub fn metric_value(&self, x: &[f64]) -> Result<Array2<f64>, GeomError> {
        self.metric(x)
    }

    /// Metric as jets in the chart coordinates around `x`.
    pub fn ambient_metric(&self, x: &[f64]) -> Result<Array2<Jet3>, GeomError> {
        let seeded = Jet3::seed_point(x)?;
        self.metric(&seeded)
    }

    /// The constant complex structure of the chart.
    pub fn complex_structure(&self) -> Array2<f64> {
        let dim = self.real_dim();
        let mut j = Array2::zeros((dim, dim));
        for a in 0..self.complex_dim {
            j[[2 * a + 1, 2 * a]] = 1.0;
            j[[2 * a, 2 * a + 1]] = -1.0;
        }
        j
    }

    /// Christoffel symbols `Γ^C_{AB}` as chart jets, indexed `[C, A, B]`.
    pub fn ambient_christoffel(&self, x: &[f64]) -> Result<Array3<Jet3>, GeomError> {
        christoffel_from_metric(&self.ambient_metric(x)?)
    }

    /// `g̃(R̃(X,Y)Z, W)` from the closed form for constant holomorphic curvature.
    pub fn curvature_form<S: Scalar>(
        &self,
        g: &Array2<S>,
        x: &[S],
        y: &[S],
        z: &[S],
        w: &[S],
    ) -> S {
        let j = self.complex_structure();
        let jx = apply(&j, x);
        let jy = apply(&j, y);
        let jz = apply(&j, z);
        let ip = |a: &[S], b: &[S]| linalg::bilinear(g, a, b);
        let total = ip(y, z) * ip(x, w) - ip(x, z) * ip(y, w) + ip(&jy, z) * ip(&jx, w)
            - ip(&jx, z) * ip(&jy, w)
            + (ip(x, &jy) * ip(&jz, w)).scale(2.0);
        total.scale(self.c / 4.0)
    }

    /// `R̃(X,Y)Z` from the closed form, given the metric at the point.
    pub fn curvature_with_metric(
        &self,
        g: ArrayView2<f64>,
        x: ArrayView1<f64>,
        y: ArrayView1<f64>,
        z: ArrayView1<f64>,
    ) -> Vec<f64> {
        let j = self.complex_structure();
        let (jx, jy, jz) = (j.dot(&x), j.dot(&y), j.dot(&z));
        let ip = |a: ArrayView1<f64>, b: ArrayView1<f64>| linalg::form(g, a, b);
        let k = self.c / 4.0;
        let c1 = ip(y, z);
        let c2 = -ip(x, z);
        let c3 = ip(jy.view(), z);
        let c4 = -ip(jx.view(), z);
        let c5 = 2.0 * ip(x, jy.view());
        (0..x.len())
            .map(|d| k * (c1 * x[d] + c2 * y[d] + c3 * jx[d] + c4 * jy[d] + c5 * jz[d]))
            .collect()
    }

    pub fn ambient_curvature(
        &self,
        x: &[f64],
        vx: &[f64],
        vy: &[f64],
        vz: &[f64],
    ) -> Result<Vec<f64>, GeomError> {
        let g = self.metric_value(x)?;
        Ok(self.curvature_with_metric(
            g.view(),
            ArrayView1::from(vx),
            ArrayView1::from(vy),
            ArrayView1::from(vz),
        ))
    }

    /// Curvature of the chart connection, `R^D_{CAB}` with `R(∂_A, ∂_B)∂_C = R^D_{CAB} ∂_D`,
    /// indexed `[D, C, A, B]`.
    pub fn differential_curvature(&self, x: &[f64]) -> Result<Array4<f64>, GeomError> {
        let gamma = self.ambient_christoffel(x)?;
        Ok(curvature_from_christoffel(&gamma))
    }

    /// Residuals of the Hermitian condition, parallel `J` and metric compatibility.
    pub fn check_kaehler(&self, x: &[f64]) -> Result<KaehlerReport, GeomError> {
        let g = self.ambient_metric(x)?;
        let gamma = christoffel_from_metric(&g)?;
        let gv = linalg::values(&g);
        let gam = linalg::values(&gamma);
        let j = self.complex_structure();
        let dim = self.real_dim();

        let jgj = j.t().dot(&gv).dot(&j);
        let hermitian = (&jgj - &gv).iter().fold(0.0_f64, |m, v| m.max(v.abs()));

        // (∇̃_A J)^C_B = Γ^C_{AD} J^D_B − Γ^D_{AB} J^C_D   (J is constant in the chart)
        let mut parallel_j = 0.0_f64;
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    let mut r = 0.0;
                    for d in 0..dim {
                        r += gam[[c, a, d]] * j[[d, b]] - gam[[d, a, b]] * j[[c, d]];
                    }
                    parallel_j = parallel_j.max(r.abs());
                }
            }
        }

        // ∂_A g_BC − Γ^D_{AB} g_DC − Γ^D_{AC} g_BD
        let mut metric_compat = 0.0_f64;
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    let mut r = g[[b, c]].d1(a);
                    for d in 0..dim {
                        r -= gam[[d, a, b]] * gv[[d, c]] + gam[[d, a, c]] * gv[[b, d]];
                    }
                    metric_compat = metric_compat.max(r.abs());
                }
            }
        }
        Ok(KaehlerReport {
            hermitian,
            parallel_j,
            metric_compat,
        })
    }

    /// Compares the differentiated curvature with the closed form on random vectors.
    pub fn check_curvature(&self, x: &[f64], seed: u64, tuples: usize) -> Result<CurvatureReport, GeomError> {
        let riem = self.differential_curvature(x)?;
        let g = self.metric_value(x)?;
        let j = self.complex_structure();
        let dim = self.real_dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut report = CurvatureReport::default();
        for _ in 0..tuples {
            let mut draw = || ndarray::Array1::from_shape_fn(dim, |_| rng.random_range(-1.0..1.0));
            let (vx, vy, vz) = (draw(), draw(), draw());
            let closed = self.curvature_with_metric(g.view(), vx.view(), vy.view(), vz.view());
            let diff = apply_riemann(&riem, vx.view(), vy.view(), vz.view());
            let scale = closed.iter().chain(&diff).fold(0.0_f64, |m, v| m.max(v.abs()));
            let err = closed
                .iter()
                .zip(&diff)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            report.closed_form = report.closed_form.max(err / (1.0 + scale));

            let b1 = apply_riemann(&riem, vx.view(), vy.view(), vz.view());
            let b2 = apply_riemann(&riem, vy.view(), vz.view(), vx.view());
            let b3 = apply_riemann(&riem, vz.view(), vx.view(), vy.view());
            let bianchi = (0..dim).fold(0.0_f64, |m, d| m.max((b1[d] + b2[d] + b3[d]).abs()));
            report.bianchi = report.bianchi.max(bianchi);

            let jv = j.dot(&vx);
            let r = apply_riemann(&riem, vx.view(), jv.view(), jv.view());
            let num = linalg::form(g.view(), ndarray::ArrayView1::from(&r), vx.view());
            let norm2 = linalg::form(g.view(), vx.view(), vx.view());
            report.holomorphic_error =
                report.holomorphic_error.max((num / (norm2 * norm2) - self.c).abs());
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct KaehlerReport {
    /// max |g̃(J e_A, J e_B) − g̃(e_A, e_B)|
    pub hermitian: f64,
    /// max component of ∇̃J
    pub parallel_j: f64,
    /// max component of ∇̃g̃
    pub metric_compat: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub closed_form: f64,
    pub bianchi: f64,
    pub holomorphic_error: f64,
}

fn apply<S: Scalar>(m: &Array2<f64>, v: &[S]) -> Vec<S> {
    (0..m.nrows())
        .map(|i| {
            let mut acc = v[0].scale(m[[i, 0]]);
            for (k, vk) in v.iter().enumerate().skip(1) {
                if m[[i, k]] != 0.0 {
                    acc = acc + vk.scale(m[[i, k]]);
                }
            }
            acc
        })
        .collect()
}

/// Levi-Civita symbols `Γ^C_{AB} = ½ g^{CD}(∂_A g_{DB} + ∂_B g_{AD} − ∂_D g_{AB})` from
/// metric jets whose variables are the chart coordinates.
pub fn christoffel_from_metric(g: &Array2<Jet3>) -> Result<Array3<Jet3>, GeomError> {
    let dim = g.nrows();
    let ginv = invert_jets(g)?;
    let dg: Vec<Array2<Jet3>> = (0..dim).map(|a| g.map(|x| x.partial(a))).collect();
    // first kind: Γ_{D,AB}
    let first = Array3::from_shape_fn((dim, dim, dim), |(d, a, b)| {
        (&(&dg[a][[d, b]] + &dg[b][[a, d]]) - &dg[d][[a, b]]).scale(0.5)
    });
    let zero = first[[0, 0, 0]].scale(0.0);
    Ok(Array3::from_shape_fn((dim, dim, dim), |(c, a, b)| {
        let mut acc = zero.clone();
        for d in 0..dim {
            acc += &(&ginv[[c, d]] * &first[[d, a, b]]);
        }
        acc
    }))
}

/// `R^D_{CAB} = ∂_A Γ^D_{BC} − ∂_B Γ^D_{AC} + Γ^D_{AE} Γ^E_{BC} − Γ^D_{BE} Γ^E_{AC}`.
pub fn curvature_from_christoffel(gamma: &Array3<Jet3>) -> Array4<f64> {
    let dim = gamma.shape()[0];
    let gv = linalg::values(gamma);
    Array4::from_shape_fn((dim, dim, dim, dim), |(d, c, a, b)| {
        let mut r = gamma[[d, b, c]].d1(a) - gamma[[d, a, c]].d1(b);
        for e in 0..dim {
            r += gv[[d, a, e]] * gv[[e, b, c]] - gv[[d, b, e]] * gv[[e, a, c]];
        }
        r
    })
}

/// Contracts `R^D_{CAB}` with `X^A Y^B Z^C`.
pub fn apply_riemann(
    riem: &Array4<f64>,
    x: ArrayView1<f64>,
    y: ArrayView1<f64>,
    z: ArrayView1<f64>,
) -> Vec<f64> {
    let dim = x.len();
    (0..dim)
        .map(|d| {
            let mut s = 0.0;
            for c in 0..dim {
                for a in 0..dim {
                    for b in 0..dim {
                        s += riem[[d, c, a, b]] * x[a] * y[b] * z[c];
                    }
                }
            }
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::{fd_oracle, MultiIndex};

    fn sample_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect()
    }

    #[test]
    fn flat_metric_is_identity() {
        let m = AmbientModel::flat(2);
        let g = m.ambient_metric(&[0.3, -1.0, 2.0, 0.1]).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let e = if a == b { 1.0 } else { 0.0 };
                assert_eq!(g[[a, b]].value(), e);
                assert!(g[[a, b]].coeffs()[1..].iter().all(|c| *c == 0.0));
            }
        }
    }

    #[test]
    fn fubini_study_is_identity_at_origin() {
        let m = AmbientModel::fubini_study(4.0, 2).unwrap();
        let g = m.metric_value(&[0.0; 4]).unwrap();
        assert_eq!(g, Array2::<f64>::eye(4));
    }

    #[test]
    fn fubini_study_dim_one_at_unit_point() {
        // (1 + |w|^2)^{-2} at |w| = 1
        let m = AmbientModel::fubini_study(4.0, 1).unwrap();
        let g = m.metric_value(&[1.0, 0.0]).unwrap();
        assert!((g[[0, 0]] - 0.25).abs() < 1e-15);
        assert!((g[[1, 1]] - 0.25).abs() < 1e-15);
        assert!(g[[0, 1]].abs() < 1e-15);
        // the oracle sees the same first derivative as the jet path
        let jets = m.ambient_metric(&[1.0, 0.0]).unwrap();
        let alpha = MultiIndex::new(vec![1, 0]);
        let fd = fd_oracle(|x| m.metric_value(x).unwrap()[[0, 0]], &[1.0, 0.0], &alpha, 1e-3);
        assert!((jets[[0, 0]].extract(&alpha).unwrap() - fd).abs() < 1e-6);
        // d/dx (1+x^2)^{-2} = -4x/(1+x^2)^3 = -0.5 at x = 1
        assert!((jets[[0, 0]].extract(&alpha).unwrap() + 0.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonpositive_curvature() {
        assert!(AmbientModel::fubini_study(0.0, 2).is_err());
        assert!(AmbientModel::fubini_study(-1.0, 2).is_err());
    }

    #[test]
    fn j_squares_to_minus_identity_and_pairs_coordinates() {
        let m = AmbientModel::flat(2);
        let j = m.complex_structure();
        assert_eq!(j.dot(&j), -Array2::<f64>::eye(4));
        let e0 = ndarray::array![1.0, 0.0, 0.0, 0.0];
        assert_eq!(j.dot(&e0), ndarray::array![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn hermitian_and_parallel_j_on_random_points() {
        let m = AmbientModel::fubini_study(4.0, 2).unwrap();
        for x in sample_points(4, 20, 7) {
            let r = m.check_kaehler(&x).unwrap();
            assert!(r.hermitian <= 1e-10, "{r:?}");
            assert!(r.parallel_j <= 1e-9, "{r:?}");
            assert!(r.metric_compat <= 1e-9, "{r:?}");
        }
    }

    #[test]
    fn flat_checks_are_exact() {
        let m = AmbientModel::flat(3);
        let r = m.check_kaehler(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        assert_eq!(r, KaehlerReport::default());
        let gamma = m.ambient_christoffel(&[0.0; 6]).unwrap();
        assert!(gamma.iter().all(|g| g.coeffs().iter().all(|c| *c == 0.0)));
        let v = m.ambient_curvature(&[0.0; 6], &[1.0; 6], &[0.5; 6], &[0.2; 6]).unwrap();
        assert!(v.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn corrupted_metric_fails_hermitian_check() {
        let m = AmbientModel::fubini_study(4.0, 2).unwrap().with_metric_perturbation(1e-3);
        let r = m.check_kaehler(&[0.2, -0.4, 0.5, 0.1]).unwrap();
        assert!(r.hermitian >= 1e-4, "{r:?}");
        assert!(r.parallel_j >= 1e-4, "{r:?}");
    }

    #[test]
    fn christoffel_is_torsion_free() {
        let m = AmbientModel::fubini_study(4.0, 2).unwrap();
        let gamma = m.ambient_christoffel(&[0.3, 0.1, -0.7, 0.2]).unwrap();
        for c in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    assert_eq!(gamma[[c, a, b]], gamma[[c, b, a]]);
                }
            }
        }
    }

    #[test]
    fn closed_form_holomorphic_curvature() {
        // inputs (X, JX, JX) with unit X give c X
        let m = AmbientModel::fubini_study(4.0, 2).unwrap();
        let x = [0.0; 4];
        let v = [1.0, 0.0, 0.0, 0.0];
        let jv = [0.0, 1.0, 0.0, 0.0];
        let r = m.ambient_curvature(&x, &v, &jv, &jv).unwrap();
        assert_eq!(r, vec![4.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn differential_curvature_matches_closed_form() {
        for m in [
            AmbientModel::fubini_study(4.0, 2).unwrap(),
            AmbientModel::fubini_study(4.0, 3).unwrap(),
            AmbientModel::fubini_study(1.5, 2).unwrap(),
        ] {
            for (k, x) in sample_points(m.real_dim(), 20, 11).into_iter().enumerate() {
                let r = m.check_curvature(&x, k as u64, 4).unwrap();
                assert!(r.closed_form <= 1e-8, "{r:?}");
                assert!(r.bianchi <= 1e-9, "{r:?}");
                assert!(r.holomorphic_error <= 1e-8, "{r:?}");
            }
        }
    }
}
