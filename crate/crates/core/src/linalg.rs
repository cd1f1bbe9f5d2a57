//! Small dense helpers for jet-valued and real matrices.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::GeomError;
use crate::jets::{Jet3, Scalar};

const PIVOT_FLOOR: f64 = 1e-12;

/// Gauss-Jordan inverse of a jet-valued matrix, pivoting on constant terms.
pub fn invert_jets(m: &Array2<Jet3>) -> Result<Array2<Jet3>, GeomError> {
    let n = m.nrows();
    let vars = m[[0, 0]].n();
    let mut a = m.clone();
    let mut inv = Array2::from_shape_fn((n, n), |(i, j)| {
        Jet3::constant(if i == j { 1.0 } else { 0.0 }, vars).expect("valid variable count")
    });
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[[i, col]].value().abs().total_cmp(&a[[j, col]].value().abs()))
            .expect("non-empty range");
        let pivot_val = a[[pivot_row, col]].value();
        if pivot_val.abs() < PIVOT_FLOOR {
            return Err(GeomError::Singular(pivot_val));
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap([col, k], [pivot_row, k]);
                inv.swap([col, k], [pivot_row, k]);
            }
        }
        let r = a[[col, col]].recip()?;
        for k in 0..n {
            a[[col, k]] = &a[[col, k]] * &r;
            inv[[col, k]] = &inv[[col, k]] * &r;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[[row, col]].clone();
            if f.coeffs().iter().all(|c| *c == 0.0) {
                continue;
            }
            for k in 0..n {
                let da = &f * &a[[col, k]];
                let di = &f * &inv[[col, k]];
                a[[row, k]] -= &da;
                inv[[row, k]] -= &di;
            }
        }
    }
    Ok(inv)
}

/// Inverse of a real matrix with partial pivoting.
pub fn invert(m: ArrayView2<f64>) -> Result<Array2<f64>, GeomError> {
    let n = m.nrows();
    let mut a = m.to_owned();
    let mut inv = Array2::eye(n);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[[i, col]].abs().total_cmp(&a[[j, col]].abs()))
            .expect("non-empty range");
        let p = a[[pivot_row, col]];
        if p.abs() < PIVOT_FLOOR {
            return Err(GeomError::Singular(p));
        }
        for k in 0..n {
            a.swap([col, k], [pivot_row, k]);
            inv.swap([col, k], [pivot_row, k]);
        }
        let r = 1.0 / a[[col, col]];
        for k in 0..n {
            a[[col, k]] *= r;
            inv[[col, k]] *= r;
        }
        for row in 0..n {
            if row != col {
                let f = a[[row, col]];
                for k in 0..n {
                    a[[row, k]] -= f * a[[col, k]];
                    inv[[row, k]] -= f * inv[[col, k]];
                }
            }
        }
    }
    Ok(inv)
}

/// Determinant by LU elimination.
pub fn det(m: ArrayView2<f64>) -> f64 {
    let n = m.nrows();
    let mut a = m.to_owned();
    let mut d = 1.0;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[[i, col]].abs().total_cmp(&a[[j, col]].abs()))
            .expect("non-empty range");
        if a[[pivot_row, col]] == 0.0 {
            return 0.0;
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap([col, k], [pivot_row, k]);
            }
            d = -d;
        }
        d *= a[[col, col]];
        for row in col + 1..n {
            let f = a[[row, col]] / a[[col, col]];
            for k in col..n {
                a[[row, k]] -= f * a[[col, k]];
            }
        }
    }
    d
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(m: ArrayView2<f64>) -> Result<Array2<f64>, GeomError> {
    let n = m.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[[i, k]] * l[[j, k]]).sum();
            if i == j {
                let d = m[[i, i]] - s;
                if d <= 0.0 {
                    return Err(GeomError::Singular(d));
                }
                l[[i, i]] = d.sqrt();
            } else {
                l[[i, j]] = (m[[i, j]] - s) / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// `a^T g b` over any scalar type.
pub fn bilinear<S: Scalar>(g: &Array2<S>, a: &[S], b: &[S]) -> S {
    let mut acc: Option<S> = None;
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            let term = ai.clone() * g[[i, j]].clone() * bj.clone();
            acc = Some(match acc {
                None => term,
                Some(s) => s + term,
            });
        }
    }
    acc.expect("non-empty vectors")
}

/// Real bilinear form `a^T g b`.
pub fn form(g: ArrayView2<f64>, a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.dot(&g.dot(&b))
}

/// Applies a constant real matrix to a jet-valued vector.
pub fn apply_const(m: &Array2<f64>, v: &[Jet3]) -> Vec<Jet3> {
    (0..m.nrows())
        .map(|i| {
            let mut acc = v[0].scale(m[[i, 0]]);
            for (j, vj) in v.iter().enumerate().skip(1) {
                let k = m[[i, j]];
                if k != 0.0 {
                    acc += &vj.scale(k);
                }
            }
            acc
        })
        .collect()
}

/// Sum of jets; `zero` supplies the variable count for empty input.
pub fn sum_jets(zero: &Jet3, items: impl IntoIterator<Item = Jet3>) -> Jet3 {
    let mut acc = zero.clone();
    for it in items {
        acc += &it;
    }
    acc
}

pub fn values<D: ndarray::Dimension>(a: &ndarray::Array<Jet3, D>) -> ndarray::Array<f64, D> {
    a.map(Jet3::value)
}

pub fn max_abs(v: ArrayView1<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn to_array(v: &[f64]) -> Array1<f64> {
    Array1::from(v.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn real_inverse_and_det() {
        let m = array![[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]];
        let inv = invert(m.view()).unwrap();
        let id = m.dot(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[[i, j]] - e).abs() < 1e-14);
            }
        }
        assert!((det(m.view()) - 18.0).abs() < 1e-12);
        let l = cholesky(m.view()).unwrap();
        assert!((l.dot(&l.t()) - &m).iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn singular_is_reported() {
        let m = array![[1.0, 2.0], [2.0, 4.0]];
        assert!(matches!(invert(m.view()), Err(GeomError::Singular(_))));
    }

    #[test]
    fn jet_inverse_matches_derivative_of_inverse() {
        // m(u) = [[1+u, u^2], [u^2, 2]], check value and derivative of inverse
        let u = Jet3::seed_variable(0, 0.3, 1).unwrap();
        let two = Jet3::constant(2.0, 1).unwrap();
        let m = array![[u.add_const(1.0), &u * &u], [&u * &u, two]];
        let inv = invert_jets(&m).unwrap();
        let prod = |i: usize, j: usize| &(&m[[i, 0]] * &inv[[0, j]]) + &(&m[[i, 1]] * &inv[[1, j]]);
        for i in 0..2 {
            for j in 0..2 {
                let e = Jet3::constant(if i == j { 1.0 } else { 0.0 }, 1).unwrap();
                assert!(prod(i, j).max_abs_diff(&e) < 1e-13);
            }
        }
    }
}
