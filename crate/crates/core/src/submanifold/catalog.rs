use serde::Serialize;

use crate::ambient::AmbientModel;
use crate::jets::{Jet3, Scalar};

/// What the engine is expected to find for a catalog entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedClass {
    TotallyGeodesic,
    Parallel,
    Generic,
}

/// Explicit parametrisations, evaluable over any [`Scalar`].
#[derive(Debug, Clone, PartialEq)]
pub enum ImmersionMap {
    /// `u ↦ (u, 0)`: a coordinate complex plane.
    Coordinate,
    /// `z ↦ (z, z^k1, z^k2, ...)` for the listed exponents.
    HolomorphicGraph(Vec<u32>),
    /// `t ↦ (√2 t, t²)`, the conic in the affine chart of CP².
    Veronese,
}

#[derive(Clone)]
struct Complex<S> {
    re: S,
    im: S,
}

impl<S: Scalar> Complex<S> {
    fn mul(&self, o: &Self) -> Self {
        Self {
            re: self.re.clone() * o.re.clone() - self.im.clone() * o.im.clone(),
            im: self.re.clone() * o.im.clone() + self.im.clone() * o.re.clone(),
        }
    }

    fn pow(&self, k: u32) -> Self {
        let mut out = Self {
            re: self.re.lift(1.0),
            im: self.re.lift(0.0),
        };
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }
}

impl ImmersionMap {
    /// Ambient chart coordinates of the image of `u`.
    pub fn eval<S: Scalar>(&self, u: &[S], ambient_dim: usize) -> Vec<S> {
        let zero = u[0].lift(0.0);
        let mut out = match self {
            ImmersionMap::Coordinate => u.to_vec(),
            ImmersionMap::HolomorphicGraph(powers) => {
                let z = Complex {
                    re: u[0].clone(),
                    im: u[1].clone(),
                };
                let mut v = vec![z.re.clone(), z.im.clone()];
                for &k in powers {
                    let w = z.pow(k);
                    v.push(w.re);
                    v.push(w.im);
                }
                v
            }
            ImmersionMap::Veronese => {
                let t = Complex {
                    re: u[0].clone(),
                    im: u[1].clone(),
                };
                let t2 = t.mul(&t);
                let r2 = std::f64::consts::SQRT_2;
                vec![t.re.scale(r2), t.im.scale(r2), t2.re, t2.im]
            }
        };
        out.resize(ambient_dim, zero);
        out
    }
}

/// Axis-aligned parameter box.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self {
            lo: vec![-half_width; dim],
            hi: vec![half_width; dim],
        }
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.lo.len()
            && u
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (lo, hi))| lo <= x && x <= hi)
    }

    /// Maps a point of the unit cube into the box.
    pub fn from_unit(&self, t: &[f64]) -> Vec<f64> {
        t.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(t, (lo, hi))| lo + t * (hi - lo))
            .collect()
    }
}

/// A catalog entry: an immersed complex submanifold of a space form.
#[derive(Debug, Clone, PartialEq)]
pub struct ImmersionCase {
    pub name: &'static str,
    /// Complex dimension of the submanifold.
    pub m: usize,
    pub ambient: AmbientModel,
    pub map: ImmersionMap,
    pub domain: Domain,
    pub expected_class: ExpectedClass,
}

impl ImmersionCase {
    /// Complex codimension.
    pub fn l(&self) -> usize {
        self.ambient.complex_dim() - self.m
    }

    pub fn param_dim(&self) -> usize {
        2 * self.m
    }

    pub fn evaluate<S: Scalar>(&self, u: &[S]) -> Vec<S> {
        self.map.eval(u, self.ambient.real_dim())
    }

    pub fn evaluate_f64(&self, u: &[f64]) -> Vec<f64> {
        self.evaluate(u)
    }

    /// Ambient coordinates as jets in the parameters around `u`.
    pub fn immersion_jets(&self, u: &[f64]) -> Result<Vec<Jet3>, crate::GeomError> {
        let seeded = Jet3::seed_point(u)?;
        Ok(self.evaluate(&seeded))
    }
}

pub fn catalog() -> Vec<ImmersionCase> {
    let fs = AmbientModel::fubini_study(4.0, 2).expect("positive curvature");
    vec![
        ImmersionCase {
            name: "linear_c2",
            m: 1,
            ambient: AmbientModel::flat(2),
            map: ImmersionMap::Coordinate,
            domain: Domain::cube(2, 1.0),
            expected_class: ExpectedClass::TotallyGeodesic,
        },
        ImmersionCase {
            name: "graph_z2_c2",
            m: 1,
            ambient: AmbientModel::flat(2),
            map: ImmersionMap::HolomorphicGraph(vec![2]),
            domain: Domain::cube(2, 1.0),
            expected_class: ExpectedClass::Generic,
        },
        ImmersionCase {
            name: "graph_z3_c2",
            m: 1,
            ambient: AmbientModel::flat(2),
            map: ImmersionMap::HolomorphicGraph(vec![3]),
            domain: Domain::cube(2, 1.0),
            expected_class: ExpectedClass::Generic,
        },
        ImmersionCase {
            name: "graph_c3",
            m: 1,
            ambient: AmbientModel::flat(3),
            map: ImmersionMap::HolomorphicGraph(vec![2, 3]),
            domain: Domain::cube(2, 1.0),
            expected_class: ExpectedClass::Generic,
        },
        ImmersionCase {
            name: "veronese_cp2",
            m: 1,
            ambient: fs,
            map: ImmersionMap::Veronese,
            domain: Domain::cube(2, 1.0),
            expected_class: ExpectedClass::Parallel,
        },
    ]
}

pub fn find_case(name: &str) -> Option<ImmersionCase> {
    catalog().into_iter().find(|c| c.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_dimensions() {
        let cases = catalog();
        assert_eq!(cases.len(), 5);
        for case in &cases {
            assert!(case.m >= 1 && case.l() >= 1, "{}", case.name);
            let x = case.evaluate_f64(&[0.3, -0.2]);
            assert_eq!(x.len(), case.ambient.real_dim());
        }
        let c3 = find_case("graph_c3").unwrap();
        assert_eq!((c3.m, c3.l()), (1, 2));
        assert!(find_case("foo").is_none());
    }

    #[test]
    fn graph_components() {
        let case = find_case("graph_z3_c2").unwrap();
        // z = 1 + i: z^3 = -2 + 2i
        assert_eq!(case.evaluate_f64(&[1.0, 1.0]), vec![1.0, 1.0, -2.0, 2.0]);
        let v = find_case("veronese_cp2").unwrap();
        let x = v.evaluate_f64(&[1.0, 0.0]);
        assert!((x[0] - 2f64.sqrt()).abs() < 1e-15 && x[2] == 1.0);
    }

    #[test]
    fn domain_mapping() {
        let d = Domain::cube(2, 1.0);
        assert_eq!(d.from_unit(&[0.5, 0.0]), vec![0.0, -1.0]);
        assert!(d.contains(&[0.2, 1.0]));
        assert!(!d.contains(&[1.2, 0.0]));
    }
}
