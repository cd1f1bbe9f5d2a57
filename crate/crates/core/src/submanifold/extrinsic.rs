//! The extrinsic package of an immersion at one parameter point.
//!
//! Everything that has to be differentiated (induced metric, normal frame,
//! second fundamental form, normal curvature along the Ricci path, intrinsic
//! curvature along the Gauss path) is first assembled as jets in the
//! parameters and only then reduced to values.

use ndarray::{Array2, Array3, Array4, Array5};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::catalog::ImmersionCase;
use crate::ambient::AmbientModel;
use crate::error::GeomError;
use crate::jets::{Composer, Jet3};
use crate::linalg::{self, apply_const, bilinear, invert_jets, values};

/// Gram-Schmidt accepts a candidate only if its normal part is at least this long.
pub const CANDIDATE_FLOOR: f64 = 1e-6;
/// Hadamard ratio `det g / Π g_ii` below which the map is not treated as an immersion.
pub const RANK_FLOOR: f64 = 1e-10;
/// Largest tolerated failure of `J(T_x F) ⊂ T_x F`.
pub const COMPLEX_TANGENT_TOL: f64 = 1e-9;
/// Largest tolerated disagreement between two computation paths of a curvature tensor.
pub const PATH_TOL: f64 = 1e-8;
/// Same, for the two evaluations of `∇̄b`.
pub const NABLA_B_PATH_TOL: f64 = 1e-9;

/// Ordered ambient vectors fed to Gram-Schmidt when building the normal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSeed {
    candidates: Vec<Vec<f64>>,
}

impl FrameSeed {
    /// The ambient coordinate basis in order.
    pub fn standard(dim: usize) -> Self {
        let candidates = (0..dim)
            .map(|a| (0..dim).map(|b| if a == b { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { candidates }
    }

    /// Columns of a random orthogonal matrix, for frame-covariance tests.
    pub fn rotated(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim);
        while basis.len() < dim {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            for _ in 0..2 {
                for e in &basis {
                    let d: f64 = e.iter().zip(&v).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(e).for_each(|(x, y)| *x -= d * y);
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-3 {
                basis.push(v.into_iter().map(|x| x / norm).collect());
            }
        }
        Self { candidates: basis }
    }

    pub fn candidates(&self) -> &[Vec<f64>] {
        &self.candidates
    }
}

#[derive(Debug, Clone)]
pub struct ComputeOptions {
    pub seed: Option<FrameSeed>,
    pub path_tol: f64,
    pub nabla_b_tol: f64,
}

impl Default for ComputeOptions {
    fn default() -> Self {
        Self {
            seed: None,
            path_tol: PATH_TOL,
            nabla_b_tol: NABLA_B_PATH_TOL,
        }
    }
}

/// Frame-resolved tensors at one point.
///
/// Tangent indices refer to the coordinate frame `∂/∂u^i`, normal indices to
/// the orthonormal J-adapted frame `n_α`. Index order is given per field.
#[derive(Debug, Clone)]
pub struct ExtrinsicData {
    pub case: String,
    pub c: f64,
    pub u: Vec<f64>,
    /// Ambient chart coordinates `F(u)`.
    pub point: Vec<f64>,
    pub ambient_metric: Array2<f64>,
    /// `[C, A, B]`
    pub ambient_christoffel: Array3<f64>,
    pub j_ambient: Array2<f64>,
    /// `[i, A]`: ambient components of `∂F/∂u^i`.
    pub tangent: Array2<f64>,
    /// `[α, A]`
    pub normal: Array2<f64>,
    pub metric: Array2<f64>,
    pub metric_inv: Array2<f64>,
    /// `[s, i, j]`: `∂_s g_ij`
    pub metric_deriv: Array3<f64>,
    /// `[k, i, j]`: `Γ^k_ij`
    pub christoffel: Array3<f64>,
    /// `[k, i]`: `J ∂_i = J^k_i ∂_k`
    pub j_tan: Array2<f64>,
    /// `[s, k, i]`
    pub j_tan_deriv: Array3<f64>,
    /// `[β, α]`: `J n_α = J^β_α n_β`
    pub j_nor: Array2<f64>,
    /// `[s, β, α]`
    pub j_nor_deriv: Array3<f64>,
    /// `[α, i, j]`: `b^α_ij`
    pub b: Array3<f64>,
    /// `[α, i, j]`: `a^j_{α|i}`
    pub shape: Array3<f64>,
    /// `[α, β, i]`: `Γ^⊥_{αβ|i}`
    pub normal_connection: Array3<f64>,
    /// `[i, α, j, k]`: `∇̄_i b^α_jk` from the coordinate formula.
    pub nabla_b: Array4<f64>,
    /// Same tensor from the frame-free definition applied to frame fields.
    pub nabla_b_frame: Array4<f64>,
    /// `[i, α, j, k]`: `∇̄_i a^k_{α|j}`
    pub nabla_shape: Array4<f64>,
    /// `[i, j, α, β]`: `R^⊥(∂_i, ∂_j, n_α, n_β)` from the curvature of `Γ^⊥`.
    pub normal_curvature: Array4<f64>,
    /// Same tensor from the Ricci equation.
    pub normal_curvature_ricci: Array4<f64>,
    /// `[s, i, j, α, β]`
    pub nabla_normal_curvature: Array5<f64>,
    /// `[i, j, k, l]`: `g(R(∂_i, ∂_j)∂_k, ∂_l)` from the induced connection.
    pub riemann: Array4<f64>,
    /// Same tensor from the Gauss equation.
    pub riemann_gauss: Array4<f64>,
    /// `[s, i, j, k, l]` expanded in `b` and `∇̄b`.
    pub nabla_riemann: Array5<f64>,
    /// Same tensor by covariant differentiation of the Gauss-equation jets.
    pub nabla_riemann_direct: Array5<f64>,
    /// `|J T_i − J^k_i T_k|`, the complex-submanifold defect.
    pub tangent_j_residual: f64,
}

impl ExtrinsicData {
    pub fn n(&self) -> usize {
        self.metric.nrows()
    }

    pub fn p(&self) -> usize {
        self.normal.nrows()
    }

    /// `K(∂_i, ∂_j) = R(∂_i, ∂_j, ∂_j, ∂_i) / (g_ii g_jj − g_ij²)`.
    pub fn sectional_curvature(&self, i: usize, j: usize) -> f64 {
        let g = &self.metric;
        self.riemann[[i, j, j, i]] / (g[[i, i]] * g[[j, j]] - g[[i, j]].powi(2))
    }
}

/// Normalised discrepancy `|a − b|_∞ / (1 + max(|a|_∞, |b|_∞))`.
pub fn relative_gap<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> f64 {
    let (mut diff, mut sa, mut sb) = (0.0_f64, 0.0_f64, 0.0_f64);
    for (x, y) in a.into_iter().zip(b) {
        diff = diff.max((x - y).abs());
        sa = sa.max(x.abs());
        sb = sb.max(y.abs());
    }
    diff / (1.0 + sa.max(sb))
}

/// Jet-level quantities shared by the individual operations.
pub(crate) struct JetPackage {
    n: usize,
    p: usize,
    dim: usize,
    c: f64,
    ambient: AmbientModel,
    u: Vec<f64>,
    x: Vec<f64>,
    zero: Jet3,
    /// `g̃ ∘ F`
    gt: Array2<Jet3>,
    /// `Γ̃ ∘ F`, `[C, A, B]`
    gamma_t: Array3<Jet3>,
    tangent: Vec<Vec<Jet3>>,
    g: Array2<Jet3>,
    ginv: Array2<Jet3>,
    gamma: Array3<Jet3>,
    j: Array2<f64>,
    tangent_j_residual: f64,
}

impl JetPackage {
    pub(crate) fn new(case: &ImmersionCase, u: &[f64]) -> Result<Self, GeomError> {
        assert_eq!(u.len(), case.param_dim(), "parameter point has wrong dimension");
        let n = case.param_dim();
        let dim = case.ambient.real_dim();
        let p = dim - n;
        let f = case.immersion_jets(u)?;
        let x: Vec<f64> = f.iter().map(Jet3::value).collect();
        let zero = Jet3::zero(n)?;

        let composer = Composer::new(&f)?;
        let gt_x = case.ambient.ambient_metric(&x)?;
        let gamma_x = crate::ambient::christoffel_from_metric(&gt_x)?;
        let gt = gt_x.map(|j| composer.compose(j)).into_iter().collect::<Result<Vec<_>, _>>()?;
        let gt = Array2::from_shape_vec((dim, dim), gt).expect("shape");
        let gamma_t = gamma_x
            .map(|j| composer.compose(j))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        let gamma_t = Array3::from_shape_vec((dim, dim, dim), gamma_t).expect("shape");

        let tangent: Vec<Vec<Jet3>> = (0..n)
            .map(|i| f.iter().map(|fa| fa.partial(i)).collect())
            .collect();
        let g = Array2::from_shape_fn((n, n), |(i, j)| bilinear(&gt, &tangent[i], &tangent[j]));

        let gv = values(&g);
        let hadamard = linalg::det(gv.view()) / (0..n).map(|i| gv[[i, i]]).product::<f64>();
        if !(hadamard > RANK_FLOOR) {
            return Err(GeomError::NotImmersion {
                u: u.to_vec(),
                ratio: hadamard,
            });
        }
        let ginv = invert_jets(&g)?;
        let dg: Vec<Array2<Jet3>> = (0..n).map(|s| g.map(|x| x.partial(s))).collect();
        let gamma = Array3::from_shape_fn((n, n, n), |(k, i, j)| {
            let mut acc = zero.clone();
            for t in 0..n {
                let first = (&(&dg[i][[j, t]] + &dg[j][[i, t]]) - &dg[t][[i, j]]).scale(0.5);
                acc += &(&ginv[[k, t]] * &first);
            }
            acc
        });

        let j = case.ambient.complex_structure();
        let mut pkg = Self {
            n,
            p,
            dim,
            c: case.ambient.c(),
            ambient: case.ambient.clone(),
            u: u.to_vec(),
            x,
            zero,
            gt,
            gamma_t,
            tangent,
            g,
            ginv,
            gamma,
            j,
            tangent_j_residual: 0.0,
        };
        pkg.tangent_j_residual = pkg.complex_tangent_defect();
        if pkg.tangent_j_residual > COMPLEX_TANGENT_TOL {
            return Err(GeomError::NotComplex {
                u: u.to_vec(),
                residual: pkg.tangent_j_residual,
            });
        }
        Ok(pkg)
    }

    fn ip(&self, a: &[Jet3], b: &[Jet3]) -> Jet3 {
        bilinear(&self.gt, a, b)
    }

    /// `Γ̃(a, b)` as an ambient vector.
    fn conn(&self, a: &[Jet3], b: &[Jet3]) -> Vec<Jet3> {
        (0..self.dim)
            .map(|c| {
                let mut acc = self.zero.clone();
                for (ai, av) in a.iter().enumerate() {
                    for (bi, bv) in b.iter().enumerate() {
                        acc += &(&(&self.gamma_t[[c, ai, bi]] * av) * bv);
                    }
                }
                acc
            })
            .collect()
    }

    fn tangent_part(&self, v: &[Jet3]) -> Vec<Jet3> {
        let dots: Vec<Jet3> = self.tangent.iter().map(|t| self.ip(t, v)).collect();
        let mut out = vec![self.zero.clone(); self.dim];
        for s in 0..self.n {
            let mut coef = self.zero.clone();
            for t in 0..self.n {
                coef += &(&self.ginv[[s, t]] * &dots[t]);
            }
            for (o, ts) in out.iter_mut().zip(&self.tangent[s]) {
                *o += &(&coef * ts);
            }
        }
        out
    }

    fn normal_part(&self, v: &[Jet3]) -> Vec<Jet3> {
        let t = self.tangent_part(v);
        v.iter().zip(&t).map(|(a, b)| a - b).collect()
    }

    /// `J^k_i = g^{kl} g̃(T_l, J T_i)`
    fn j_tan_jets(&self) -> Array2<Jet3> {
        let jt: Vec<Vec<Jet3>> = self.tangent.iter().map(|t| apply_const(&self.j, t)).collect();
        let proj = Array2::from_shape_fn((self.n, self.n), |(l, i)| self.ip(&self.tangent[l], &jt[i]));
        Array2::from_shape_fn((self.n, self.n), |(k, i)| {
            let mut acc = self.zero.clone();
            for l in 0..self.n {
                acc += &(&self.ginv[[k, l]] * &proj[[l, i]]);
            }
            acc
        })
    }

    fn complex_tangent_defect(&self) -> f64 {
        let jt = self.j_tan_jets();
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            let jti = apply_const(&self.j, &self.tangent[i]);
            for a in 0..self.dim {
                let mut rebuilt = 0.0;
                for k in 0..self.n {
                    rebuilt += jt[[k, i]].value() * self.tangent[k][a].value();
                }
                worst = worst.max((jti[a].value() - rebuilt).abs());
            }
        }
        worst
    }

    /// Orthonormal J-adapted normal frame, `n_{2a+1} = J n_{2a}`.
    pub(crate) fn normal_frame(&self, seed: &FrameSeed) -> Result<Vec<Vec<Jet3>>, GeomError> {
        let mut frame: Vec<Vec<Jet3>> = Vec::with_capacity(self.p);
        for cand in seed.candidates() {
            if frame.len() >= self.p {
                break;
            }
            let mut w: Vec<Jet3> = cand
                .iter()
                .map(|&x| Jet3::constant(x, self.n))
                .collect::<Result<_, _>>()?;
            // two projection sweeps keep the frame orthogonal to rounding level
            for _ in 0..2 {
                w = self.normal_part(&w);
                for e in &frame {
                    let d = self.ip(e, &w);
                    w = w.iter().zip(e).map(|(wa, ea)| wa - &(&d * ea)).collect();
                }
            }
            let norm2 = self.ip(&w, &w);
            if norm2.value().max(0.0).sqrt() < CANDIDATE_FLOOR {
                continue;
            }
            let inv = norm2.sqrt()?.recip()?;
            let unit: Vec<Jet3> = w.iter().map(|x| x * &inv).collect();
            let paired = apply_const(&self.j, &unit);
            frame.push(unit);
            frame.push(paired);
        }
        if frame.len() < self.p {
            return Err(GeomError::DegenerateFrame {
                found: frame.len(),
                needed: self.p,
            });
        }
        Ok(frame)
    }

    /// `∇̃_{∂_i} ∂_j F − Γ^k_ij ∂_k F`, the normal acceleration (jets, order 1).
    fn accelerations(&self) -> Vec<Vec<Vec<Jet3>>> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| {
                        let hess: Vec<Jet3> = self.tangent[j].iter().map(|t| t.partial(i)).collect();
                        let conn = self.conn(&self.tangent[i], &self.tangent[j]);
                        let mut v: Vec<Jet3> = hess.iter().zip(&conn).map(|(a, b)| a + b).collect();
                        for k in 0..self.n {
                            for (va, tk) in v.iter_mut().zip(&self.tangent[k]) {
                                *va -= &(&self.gamma[[k, i, j]] * tk);
                            }
                        }
                        v
                    })
                    .collect()
            })
            .collect()
    }

    fn second_fundamental_form(&self, frame: &[Vec<Jet3>], acc: &[Vec<Vec<Jet3>>]) -> Array3<Jet3> {
        Array3::from_shape_fn((self.p, self.n, self.n), |(a, i, j)| self.ip(&acc[i][j], &frame[a]))
    }

    fn shape_operators(&self, b: &Array3<Jet3>) -> Array3<Jet3> {
        Array3::from_shape_fn((self.p, self.n, self.n), |(a, i, j)| {
            let mut acc = self.zero.clone();
            for k in 0..self.n {
                acc += &(&b[[a, i, k]] * &self.ginv[[k, j]]);
            }
            acc
        })
    }

    /// `Γ^⊥_{αβ|i} = g̃(n_α, ∇̃_i n_β)`
    fn normal_connection(&self, frame: &[Vec<Jet3>]) -> Array3<Jet3> {
        let cov: Vec<Vec<Vec<Jet3>>> = (0..self.n)
            .map(|i| {
                frame
                    .iter()
                    .map(|nb| {
                        let d: Vec<Jet3> = nb.iter().map(|x| x.partial(i)).collect();
                        let c = self.conn(&self.tangent[i], nb);
                        d.iter().zip(&c).map(|(a, b)| a + b).collect()
                    })
                    .collect()
            })
            .collect();
        Array3::from_shape_fn((self.p, self.p, self.n), |(a, b, i)| self.ip(&frame[a], &cov[i][b]))
    }

    /// Ricci-equation normal curvature as jets, `[i, j, α, β]`.
    fn normal_curvature_ricci(
        &self,
        frame: &[Vec<Jet3>],
        b: &Array3<Jet3>,
        a: &Array3<Jet3>,
    ) -> Array4<Jet3> {
        let (n, p) = (self.n, self.p);
        Array4::from_shape_fn((n, n, p, p), |(i, j, al, be)| {
            let mut r = self.ambient.curvature_form(
                &self.gt,
                &self.tangent[i],
                &self.tangent[j],
                &frame[al],
                &frame[be],
            );
            for t in 0..n {
                r += &(&a[[be, i, t]] * &b[[al, t, j]]);
                r -= &(&a[[al, i, t]] * &b[[be, t, j]]);
            }
            r
        })
    }

    /// Gauss-equation intrinsic curvature as jets, `[i, j, k, l]`.
    fn riemann_gauss(&self, b: &Array3<Jet3>) -> Array4<Jet3> {
        let n = self.n;
        Array4::from_shape_fn((n, n, n, n), |(i, j, k, l)| {
            let t = &self.tangent;
            let mut r = self.ambient.curvature_form(&self.gt, &t[i], &t[j], &t[k], &t[l]);
            for al in 0..self.p {
                r -= &(&b[[al, i, k]] * &b[[al, j, l]]);
                r += &(&b[[al, i, l]] * &b[[al, j, k]]);
            }
            r
        })
    }

    /// `∇̄_i b^α_jk` along the frame-free definition: project `∇̃_i` of the
    /// normal vector `b(∂_j, ∂_k)` to the normal bundle and subtract `b(∇∂, ∂)` terms.
    fn nabla_b_frame(&self, frame: &[Vec<Jet3>], acc: &[Vec<Vec<Jet3>>]) -> Array4<f64> {
        let n = self.n;
        let pv: Vec<Vec<Vec<Jet3>>> = acc
            .iter()
            .map(|row| row.iter().map(|v| self.normal_part(v)).collect())
            .collect();
        let gamma = values(&self.gamma);
        let frame_v: Vec<Vec<f64>> = frame.iter().map(|e| e.iter().map(Jet3::value).collect()).collect();
        let gt = values(&self.gt);
        let tv: Vec<Vec<f64>> = self.tangent.iter().map(|t| t.iter().map(Jet3::value).collect()).collect();
        let ginv = values(&self.ginv);
        let gam_t = values(&self.gamma_t);
        let dim = self.dim;

        let project = |w: &[f64]| -> Vec<f64> {
            let dots: Vec<f64> = tv
                .iter()
                .map(|t| (0..dim).map(|a| (0..dim).map(|b| t[a] * gt[[a, b]] * w[b]).sum::<f64>()).sum())
                .collect();
            let mut out = w.to_vec();
            for s in 0..n {
                let coef: f64 = (0..n).map(|t| ginv[[s, t]] * dots[t]).sum();
                for a in 0..dim {
                    out[a] -= coef * tv[s][a];
                }
            }
            out
        };

        let mut out = Array4::zeros((n, self.p, n, n));
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = &pv[j][k];
                    let mut w: Vec<f64> = (0..dim)
                        .map(|c| {
                            let mut s = v[c].d1(i);
                            for a in 0..dim {
                                for bb in 0..dim {
                                    s += gam_t[[c, a, bb]] * tv[i][a] * v[bb].value();
                                }
                            }
                            s
                        })
                        .collect();
                    w = project(&w);
                    for t in 0..n {
                        for c in 0..dim {
                            w[c] -= gamma[[t, i, j]] * pv[t][k][c].value() + gamma[[t, i, k]] * pv[j][t][c].value();
                        }
                    }
                    for al in 0..self.p {
                        let mut s = 0.0;
                        for a in 0..dim {
                            for bb in 0..dim {
                                s += w[a] * gt[[a, bb]] * frame_v[al][bb];
                            }
                        }
                        out[[i, al, j, k]] = s;
                    }
                }
            }
        }
        out
    }

    pub(crate) fn metric(&self) -> &Array2<Jet3> {
        &self.g
    }

    pub(crate) fn christoffel(&self) -> &Array3<Jet3> {
        &self.gamma
    }
}

/// `∇̄_i b^α_jk = ∂_i b^α_jk − Γ^t_ij b^α_tk − Γ^t_ik b^α_jt + Γ^⊥_{αβ|i} b^β_jk`
fn nabla_b_coordinate(b: &Array3<Jet3>, gamma: &Array3<f64>, gperp: &Array3<f64>) -> Array4<f64> {
    let (p, n) = (b.shape()[0], b.shape()[1]);
    let bv = values(b);
    Array4::from_shape_fn((n, p, n, n), |(i, al, j, k)| {
        let mut r = b[[al, j, k]].d1(i);
        for t in 0..n {
            r -= gamma[[t, i, j]] * bv[[al, t, k]] + gamma[[t, i, k]] * bv[[al, j, t]];
        }
        for be in 0..p {
            r += gperp[[al, be, i]] * bv[[be, j, k]];
        }
        r
    })
}

/// `∇̄_i a^k_{α|j} = ∂_i a^k_{α|j} − Γ^t_ij a^k_{α|t} + Γ^k_it a^t_{α|j} − Γ^⊥_{βα|i} a^k_{β|j}`
fn nabla_shape_coordinate(a: &Array3<Jet3>, gamma: &Array3<f64>, gperp: &Array3<f64>) -> Array4<f64> {
    let (p, n) = (a.shape()[0], a.shape()[1]);
    let av = values(a);
    Array4::from_shape_fn((n, p, n, n), |(i, al, j, k)| {
        let mut r = a[[al, j, k]].d1(i);
        for t in 0..n {
            r -= gamma[[t, i, j]] * av[[al, t, k]];
            r += gamma[[k, i, t]] * av[[al, j, t]];
        }
        for be in 0..p {
            r -= gperp[[be, al, i]] * av[[be, j, k]];
        }
        r
    })
}

/// Curvature of the normal connection: with `ω_i = Γ^⊥_{··|i}`,
/// `R^⊥(∂_i, ∂_j) n_β = (∂_i ω_j − ∂_j ω_i + [ω_i, ω_j])_{αβ} n_α`.
fn normal_curvature_connection(gperp: &Array3<Jet3>) -> Array4<f64> {
    let (p, n) = (gperp.shape()[0], gperp.shape()[2]);
    let w = values(gperp);
    Array4::from_shape_fn((n, n, p, p), |(i, j, xi, eta)| {
        // component along n_eta of R^⊥(∂_i, ∂_j) n_xi
        let (a, b) = (eta, xi);
        let mut r = gperp[[a, b, j]].d1(i) - gperp[[a, b, i]].d1(j);
        for c in 0..p {
            r += w[[a, c, i]] * w[[c, b, j]] - w[[a, c, j]] * w[[c, b, i]];
        }
        r
    })
}

/// Covariant derivative of the Ricci-path normal curvature jets.
fn nabla_normal_curvature(r: &Array4<Jet3>, gamma: &Array3<f64>, gperp: &Array3<f64>) -> Array5<f64> {
    let (n, p) = (r.shape()[0], r.shape()[2]);
    let rv = values(r);
    Array5::from_shape_fn((n, n, n, p, p), |(s, i, j, al, be)| {
        let mut v = r[[i, j, al, be]].d1(s);
        for t in 0..n {
            v -= gamma[[t, s, i]] * rv[[t, j, al, be]] + gamma[[t, s, j]] * rv[[i, t, al, be]];
        }
        for ga in 0..p {
            v += gperp[[be, ga, s]] * rv[[i, j, al, ga]];
            v -= gperp[[ga, al, s]] * rv[[i, j, ga, be]];
        }
        v
    })
}

/// `g(R(∂_i, ∂_j)∂_k, ∂_l)` from the Christoffel jets.
fn riemann_intrinsic(gamma: &Array3<Jet3>, g: &Array2<f64>) -> Array4<f64> {
    let n = g.nrows();
    let gv = values(gamma);
    let mixed = Array4::from_shape_fn((n, n, n, n), |(d, k, i, j)| {
        let mut r = gamma[[d, j, k]].d1(i) - gamma[[d, i, k]].d1(j);
        for e in 0..n {
            r += gv[[d, i, e]] * gv[[e, j, k]] - gv[[d, j, e]] * gv[[e, i, k]];
        }
        r
    });
    Array4::from_shape_fn((n, n, n, n), |(i, j, k, l)| (0..n).map(|d| g[[d, l]] * mixed[[d, k, i, j]]).sum())
}

fn nabla_riemann_direct(r: &Array4<Jet3>, gamma: &Array3<f64>) -> Array5<f64> {
    let n = r.shape()[0];
    let rv = values(r);
    Array5::from_shape_fn((n, n, n, n, n), |(s, i, j, k, l)| {
        let mut v = r[[i, j, k, l]].d1(s);
        for t in 0..n {
            v -= gamma[[t, s, i]] * rv[[t, j, k, l]]
                + gamma[[t, s, j]] * rv[[i, t, k, l]]
                + gamma[[t, s, k]] * rv[[i, j, t, l]]
                + gamma[[t, s, l]] * rv[[i, j, k, t]];
        }
        v
    })
}

/// `∇_s R_ijkl = Σ_α ∇̄_s b_il b_jk + b_il ∇̄_s b_jk − ∇̄_s b_ik b_jl − b_ik ∇̄_s b_jl`
fn nabla_riemann_expansion(b: &Array3<f64>, nb: &Array4<f64>) -> Array5<f64> {
    let (p, n) = (b.shape()[0], b.shape()[1]);
    Array5::from_shape_fn((n, n, n, n, n), |(s, i, j, k, l)| {
        (0..p)
            .map(|a| {
                nb[[s, a, i, l]] * b[[a, j, k]] + b[[a, i, l]] * nb[[s, a, j, k]]
                    - nb[[s, a, i, k]] * b[[a, j, l]]
                    - b[[a, i, k]] * nb[[s, a, j, l]]
            })
            .sum()
    })
}

fn vec_values(v: &[Vec<Jet3>]) -> Array2<f64> {
    let cols = v.first().map(Vec::len).unwrap_or(0);
    Array2::from_shape_fn((v.len(), cols), |(i, a)| v[i][a].value())
}

fn derivs3(m: &Array2<Jet3>, n: usize) -> Array3<f64> {
    let (r, c) = m.dim();
    Array3::from_shape_fn((n, r, c), |(s, i, j)| m[[i, j]].d1(s))
}

fn gate(quantity: &'static str, a: &ndarray::ArrayD<f64>, b: &ndarray::ArrayD<f64>, tol: f64) -> Result<(), GeomError> {
    let residual = relative_gap(a.iter(), b.iter());
    if residual > tol {
        return Err(GeomError::PathDisagreement { quantity, residual });
    }
    Ok(())
}

/// Computes the complete extrinsic package of `case` at `u`.
pub fn compute(case: &ImmersionCase, u: &[f64], opts: &ComputeOptions) -> Result<ExtrinsicData, GeomError> {
    let pkg = JetPackage::new(case, u)?;
    let seed = opts.seed.clone().unwrap_or_else(|| FrameSeed::standard(pkg.dim));
    let frame = pkg.normal_frame(&seed)?;
    let acc = pkg.accelerations();
    let b = pkg.second_fundamental_form(&frame, &acc);
    let a = pkg.shape_operators(&b);
    let gperp_j = pkg.normal_connection(&frame);

    let gamma = values(&pkg.gamma);
    let gperp = values(&gperp_j);
    let gv = values(&pkg.g);

    let nabla_b = nabla_b_coordinate(&b, &gamma, &gperp);
    let nabla_b_frame = pkg.nabla_b_frame(&frame, &acc);
    let nabla_shape = nabla_shape_coordinate(&a, &gamma, &gperp);
    let rperp_ricci = pkg.normal_curvature_ricci(&frame, &b, &a);
    let normal_curvature = normal_curvature_connection(&gperp_j);
    let nabla_normal_curvature = nabla_normal_curvature(&rperp_ricci, &gamma, &gperp);
    let riemann = riemann_intrinsic(&pkg.gamma, &gv);
    let gauss = pkg.riemann_gauss(&b);
    let bv = values(&b);
    let nabla_riemann = nabla_riemann_expansion(&bv, &nabla_b);
    let nabla_riemann_direct = nabla_riemann_direct(&gauss, &gamma);

    let j_tan = pkg.j_tan_jets();
    let j_nor_j = Array2::from_shape_fn((pkg.p, pkg.p), |(be, al)| {
        let jn = apply_const(&pkg.j, &frame[al]);
        pkg.ip(&frame[be], &jn)
    });

    let data = ExtrinsicData {
        case: case.name.to_string(),
        c: pkg.c,
        u: pkg.u.clone(),
        point: pkg.x.clone(),
        ambient_metric: values(&pkg.gt),
        ambient_christoffel: values(&pkg.gamma_t),
        j_ambient: pkg.j.clone(),
        tangent: vec_values(&pkg.tangent),
        normal: vec_values(&frame),
        metric: gv,
        metric_inv: values(&pkg.ginv),
        metric_deriv: derivs3(&pkg.g, pkg.n),
        christoffel: gamma,
        j_tan: values(&j_tan),
        j_tan_deriv: derivs3(&j_tan, pkg.n),
        j_nor: values(&j_nor_j),
        j_nor_deriv: derivs3(&j_nor_j, pkg.n),
        b: bv,
        shape: values(&a),
        normal_connection: gperp,
        nabla_b,
        nabla_b_frame,
        nabla_shape,
        normal_curvature,
        normal_curvature_ricci: values(&rperp_ricci),
        nabla_normal_curvature,
        riemann,
        riemann_gauss: values(&gauss),
        nabla_riemann,
        nabla_riemann_direct,
        tangent_j_residual: pkg.tangent_j_residual,
    };

    let tol = opts.path_tol;
    gate(
        "nabla_b",
        &data.nabla_b.clone().into_dyn(),
        &data.nabla_b_frame.clone().into_dyn(),
        opts.nabla_b_tol,
    )?;
    gate(
        "normal_curvature",
        &data.normal_curvature.clone().into_dyn(),
        &data.normal_curvature_ricci.clone().into_dyn(),
        tol,
    )?;
    gate("riemann", &data.riemann.clone().into_dyn(), &data.riemann_gauss.clone().into_dyn(), tol)?;
    gate(
        "nabla_riemann",
        &data.nabla_riemann.clone().into_dyn(),
        &data.nabla_riemann_direct.clone().into_dyn(),
        tol,
    )?;
    Ok(data)
}

/// Induced metric `g_ij` as jets in the parameters.
pub fn induced_metric(case: &ImmersionCase, u: &[f64]) -> Result<Array2<Jet3>, GeomError> {
    Ok(JetPackage::new(case, u)?.metric().clone())
}

/// Christoffel symbols `Γ^k_ij` of the induced metric, `[k, i, j]`.
pub fn christoffel(case: &ImmersionCase, u: &[f64]) -> Result<Array3<Jet3>, GeomError> {
    Ok(JetPackage::new(case, u)?.christoffel().clone())
}

/// Orthonormal J-adapted normal frame as ambient jet vectors.
pub fn adapted_normal_frame(
    case: &ImmersionCase,
    u: &[f64],
    seed: Option<&FrameSeed>,
) -> Result<Vec<Vec<Jet3>>, GeomError> {
    let pkg = JetPackage::new(case, u)?;
    let default = FrameSeed::standard(pkg.dim);
    pkg.normal_frame(seed.unwrap_or(&default))
}

/// `b^α_ij` as jets, `[α, i, j]`.
pub fn second_fundamental_form(case: &ImmersionCase, u: &[f64]) -> Result<Array3<Jet3>, GeomError> {
    let pkg = JetPackage::new(case, u)?;
    let frame = pkg.normal_frame(&FrameSeed::standard(pkg.dim))?;
    Ok(pkg.second_fundamental_form(&frame, &pkg.accelerations()))
}

/// `a^j_{α|i}` as jets, `[α, i, j]`.
pub fn shape_operators(case: &ImmersionCase, u: &[f64]) -> Result<Array3<Jet3>, GeomError> {
    let pkg = JetPackage::new(case, u)?;
    let frame = pkg.normal_frame(&FrameSeed::standard(pkg.dim))?;
    let b = pkg.second_fundamental_form(&frame, &pkg.accelerations());
    Ok(pkg.shape_operators(&b))
}

/// `Γ^⊥_{αβ|i}` as jets, `[α, β, i]`.
pub fn normal_connection(case: &ImmersionCase, u: &[f64]) -> Result<Array3<Jet3>, GeomError> {
    let pkg = JetPackage::new(case, u)?;
    let frame = pkg.normal_frame(&FrameSeed::standard(pkg.dim))?;
    Ok(pkg.normal_connection(&frame))
}

/// `∇̄_i b^α_jk`, `[i, α, j, k]`.
pub fn covariant_derivative_b(case: &ImmersionCase, u: &[f64]) -> Result<Array4<f64>, GeomError> {
    Ok(compute(case, u, &ComputeOptions::default())?.nabla_b)
}

/// `∇̄_i a^k_{α|j}`, `[i, α, j, k]`.
pub fn covariant_derivative_a(case: &ImmersionCase, u: &[f64]) -> Result<Array4<f64>, GeomError> {
    Ok(compute(case, u, &ComputeOptions::default())?.nabla_shape)
}

/// `R^⊥(∂_i, ∂_j, n_α, n_β)`, `[i, j, α, β]`.
pub fn normal_curvature(case: &ImmersionCase, u: &[f64]) -> Result<Array4<f64>, GeomError> {
    Ok(compute(case, u, &ComputeOptions::default())?.normal_curvature)
}

/// `(∇̄_s R^⊥)(∂_i, ∂_j, n_α, n_β)`, `[s, i, j, α, β]`.
pub fn covariant_derivative_normal_curvature(case: &ImmersionCase, u: &[f64]) -> Result<Array5<f64>, GeomError> {
    Ok(compute(case, u, &ComputeOptions::default())?.nabla_normal_curvature)
}

/// `R_ijkl` and `∇_s R_ijkl`.
pub fn intrinsic_curvature(case: &ImmersionCase, u: &[f64]) -> Result<(Array4<f64>, Array5<f64>), GeomError> {
    let data = compute(case, u, &ComputeOptions::default())?;
    Ok((data.riemann, data.nabla_riemann))
}

/// Adds symmetric noise to `b` and `∇̄b` while leaving `A` and `∇̄A` untouched,
/// producing an inconsistent package for negative-control runs.
pub fn perturb_second_fundamental_form(data: &ExtrinsicData, amplitude: f64, seed: u64) -> ExtrinsicData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = data.clone();
    let (p, n) = (data.p(), data.n());
    for a in 0..p {
        for i in 0..n {
            for j in i..n {
                let e = amplitude * rng.random_range(-1.0..1.0);
                out.b[[a, i, j]] += e;
                if i != j {
                    out.b[[a, j, i]] += e;
                }
            }
        }
    }
    for s in 0..n {
        for a in 0..p {
            for i in 0..n {
                for j in i..n {
                    let e = amplitude * rng.random_range(-1.0..1.0);
                    out.nabla_b[[s, a, i, j]] += e;
                    if i != j {
                        out.nabla_b[[s, a, j, i]] += e;
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::submanifold::find_case;

    fn case(name: &str) -> ImmersionCase {
        find_case(name).unwrap()
    }

    fn max_abs<'a>(it: impl IntoIterator<Item = &'a f64>) -> f64 {
        it.into_iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn induced_metric_examples() {
        let g = values(&induced_metric(&case("linear_c2"), &[0.3, -0.7]).unwrap());
        assert!(relative_gap(g.iter(), Array2::<f64>::eye(2).iter()) < 1e-15);

        let g = values(&induced_metric(&case("graph_z2_c2"), &[1.0, 0.0]).unwrap());
        let expect = Array2::from_diag(&ndarray::arr1(&[5.0, 5.0]));
        assert!(relative_gap(g.iter(), expect.iter()) < 1e-13, "{g}");

        let g = values(&induced_metric(&case("veronese_cp2"), &[0.0, 0.0]).unwrap());
        let expect = Array2::from_diag(&ndarray::arr1(&[2.0, 2.0]));
        assert!(relative_gap(g.iter(), expect.iter()) < 1e-13, "{g}");
    }

    #[test]
    fn linear_case_is_flat_and_geodesic() {
        let d = compute(&case("linear_c2"), &[0.4, 0.1], &ComputeOptions::default()).unwrap();
        assert!(max_abs(&d.christoffel) == 0.0);
        assert_eq!(d.normal.row(0).to_vec(), vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(d.normal.row(1).to_vec(), vec![0.0, 0.0, 0.0, 1.0]);
        for m in [max_abs(&d.b), max_abs(&d.shape), max_abs(&d.normal_connection), max_abs(&d.nabla_b)] {
            assert_eq!(m, 0.0);
        }
        assert_eq!(max_abs(&d.normal_curvature), 0.0);
        assert_eq!(max_abs(&d.riemann), 0.0);
        assert_eq!(max_abs(&d.nabla_riemann), 0.0);
        assert_eq!(max_abs(&d.nabla_normal_curvature), 0.0);
    }

    #[test]
    fn graph_second_fundamental_form_at_origin() {
        let c = case("graph_z2_c2");
        let b = values(&second_fundamental_form(&c, &[0.0, 0.0]).unwrap());
        let close = |x: f64, y: f64| (x - y).abs() < 1e-13;
        assert!(close(b[[0, 0, 0]], 2.0) && close(b[[1, 0, 0]], 0.0));
        assert!(close(b[[1, 0, 1]], 2.0) && close(b[[0, 1, 1]], -2.0));
        let a = values(&shape_operators(&c, &[0.0, 0.0]).unwrap());
        let a1 = a.index_axis(ndarray::Axis(0), 0);
        assert!(relative_gap(a1.iter(), ndarray::arr2(&[[2.0, 0.0], [0.0, -2.0]]).iter()) < 1e-13);
    }

    #[test]
    fn frame_is_orthonormal_and_paired() {
        for c in crate::submanifold::catalog() {
            let u = [0.31, -0.42];
            let d = compute(&c, &u, &ComputeOptions::default()).unwrap();
            let g = &d.ambient_metric;
            for a in 0..d.p() {
                for b in 0..d.p() {
                    let ip = d.normal.row(a).dot(&g.dot(&d.normal.row(b)));
                    assert!((ip - if a == b { 1.0 } else { 0.0 }).abs() < 1e-10, "{}", c.name);
                }
                for i in 0..d.n() {
                    let ip = d.normal.row(a).dot(&g.dot(&d.tangent.row(i)));
                    assert!(ip.abs() < 1e-10, "{}", c.name);
                }
            }
            for a in (0..d.p()).step_by(2) {
                let jn = d.j_ambient.dot(&d.normal.row(a));
                assert!(relative_gap(jn.iter(), d.normal.row(a + 1).iter()) < 1e-10);
            }
            for w in d.normal_connection.iter().zip(d.normal_connection.clone().permuted_axes([1, 0, 2]).iter()) {
                assert!((w.0 + w.1).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn veronese_is_parallel_with_curvature_two() {
        let c = case("veronese_cp2");
        for u in [[0.0, 0.0], [0.3, -0.2], [-0.6, 0.5]] {
            let d = compute(&c, &u, &ComputeOptions::default()).unwrap();
            assert!(max_abs(&d.nabla_b) < 1e-8, "{u:?}");
            let k = d.sectional_curvature(0, 1);
            assert!((k - 2.0).abs() < 1e-8, "{k}");
            assert!(max_abs(&d.nabla_riemann) < 1e-7);
            assert!(max_abs(&d.nabla_riemann_direct) < 1e-7);
            assert!(max_abs(&d.nabla_normal_curvature) < 1e-7);
            assert!(max_abs(&d.normal_curvature) > 1.0);
        }
    }

    #[test]
    fn graph_metric_against_finite_differences() {
        let c = case("graph_z3_c2");
        let u = [0.4, 0.25];
        let g = values(&induced_metric(&c, &u).unwrap());
        for i in 0..2 {
            for j in 0..2 {
                let mut reference = 0.0;
                for a in 0..4 {
                    let comp = |x: &[f64]| c.evaluate_f64(x)[a];
                    let di = crate::jets::fd_oracle(comp, &u, &crate::jets::MultiIndex::unit(2, i), 1e-4);
                    let dj = crate::jets::fd_oracle(comp, &u, &crate::jets::MultiIndex::unit(2, j), 1e-4);
                    reference += di * dj;
                }
                assert!((g[[i, j]] - reference).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn rank_and_frame_failures_are_reported() {
        let c = case("graph_z2_c2");
        let seed = FrameSeed {
            candidates: vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]],
        };
        let err = adapted_normal_frame(&case("linear_c2"), &[0.0, 0.0], Some(&seed)).unwrap_err();
        assert!(matches!(err, GeomError::DegenerateFrame { found: 0, needed: 2 }));
        let frame = adapted_normal_frame(&c, &[0.0, 0.0], Some(&FrameSeed::rotated(4, 3))).unwrap();
        assert_eq!(frame.len(), 2);
    }

    #[test]
    fn perturbation_only_touches_b() {
        let d = compute(&case("graph_c3"), &[0.2, 0.1], &ComputeOptions::default()).unwrap();
        let e = perturb_second_fundamental_form(&d, 1e-3, 9);
        assert!(relative_gap(d.b.iter(), e.b.iter()) > 1e-5);
        assert_eq!(d.shape, e.shape);
        assert_eq!(d.nabla_shape, e.nabla_shape);
    }
}
