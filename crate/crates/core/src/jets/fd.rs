//! Central finite differences, kept independent of the jet arithmetic so it
//! can serve as a test oracle for it.

use super::MultiIndex;

// (offset in units of h, weight) for the 1-D central stencil of each order,
// before division by h^order.
fn stencil(order: u8) -> &'static [(f64, f64)] {
    match order {
        0 => &[(0.0, 1.0)],
        1 => &[(1.0, 0.5), (-1.0, -0.5)],
        2 => &[(1.0, 1.0), (0.0, -2.0), (-1.0, 1.0)],
        3 => &[(2.0, 0.5), (1.0, -1.0), (-1.0, 1.0), (-2.0, -0.5)],
        _ => panic!("finite-difference stencil of order {order} is not available"),
    }
}

/// Central-difference estimate of `∂^α f` at `x`, using the tensor product of
/// one-dimensional central stencils over the index components.
pub fn fd_oracle<F>(f: F, x: &[f64], alpha: &MultiIndex, h: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    assert_eq!(x.len(), alpha.n(), "point and multi-index disagree on dimension");
    assert!(h > 0.0, "step must be positive");
    let mut nodes: Vec<(Vec<f64>, f64)> = vec![(x.to_vec(), 1.0)];
    for (var, &e) in alpha.exponents().iter().enumerate() {
        if e == 0 {
            continue;
        }
        let scale = h.powi(i32::from(e));
        nodes = nodes
            .into_iter()
            .flat_map(|(p, w)| {
                stencil(e).iter().map(move |&(off, sw)| {
                    let mut q = p.clone();
                    q[var] += off * h;
                    (q, w * sw / scale)
                })
            })
            .collect();
    }
    nodes.iter().map(|(p, w)| w * f(p)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::Jet3;

    #[test]
    fn cubic_third_derivative() {
        let d = fd_oracle(|u| u[0].powi(3), &[1.0], &MultiIndex::new(vec![3]), 1e-2);
        assert!((d - 6.0).abs() < 1e-6, "{d}");
    }

    #[test]
    fn constant_has_zero_slope() {
        for h in [1e-1, 1e-3] {
            let d = fd_oracle(|_| 3.25, &[0.4, -2.0], &MultiIndex::new(vec![1, 0]), h);
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn rational_second_derivative_matches_jet() {
        let f = |u: &[f64]| 1.0 / (1.0 + u[0] * u[0]);
        let alpha = MultiIndex::new(vec![2]);
        let fd = fd_oracle(f, &[0.5], &alpha, 1e-3);

        let x = Jet3::seed_variable(0, 0.5, 1).unwrap();
        let one = Jet3::constant(1.0, 1).unwrap();
        let jet = one.try_div(&(&x * &x).add_const(1.0)).unwrap();
        let exact = jet.extract(&alpha).unwrap();
        // hand value: f'' = (6u^2 - 2)/(1+u^2)^3 at 0.5 = -0.5/1.953125
        assert!((exact - (-0.256)).abs() < 1e-12, "{exact}");
        assert!((fd - exact).abs() < 1e-5, "{fd} vs {exact}");
    }

    #[test]
    fn mixed_partial() {
        let f = |u: &[f64]| u[0] * u[0] * u[1];
        let d = fd_oracle(f, &[1.5, -0.5], &MultiIndex::new(vec![2, 1]), 1e-2);
        assert!((d - 2.0).abs() < 1e-8);
    }
}
