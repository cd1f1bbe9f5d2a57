//! Recurrence of the second fundamental form and the parallelism conclusions.
//!
//! `b` is recurrent when `∇̄b = μ ⊗ b` for a 1-form `μ`. In a complex space
//! form this should force `μ = 0`, and then `R⊥` and `R` are parallel.

use ndarray::{Array2, Array3, Array4, ArrayD, Axis, IxDyn};
use serde::Serialize;

use crate::error::GeomError;
use crate::linalg;
use crate::submanifold::ExtrinsicData;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecurrenceTolerances {
    /// `‖b‖` at or below this is totally geodesic.
    pub tol_b: f64,
    /// Gate for `‖∇̄b‖` and for the recurrence fit.
    pub tol: f64,
    /// Gate for the theorem residuals, `‖∇̄A‖` and `‖μ‖`.
    pub theorem_tol: f64,
}

impl Default for RecurrenceTolerances {
    fn default() -> Self {
        Self {
            tol_b: 1e-9,
            tol: 1e-7,
            theorem_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    TotallyGeodesic,
    Parallel,
    Recurrent,
    NonRecurrent,
}

/// Least-squares recurrence fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuFit {
    pub mu: Vec<f64>,
    pub fit_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecurrenceResult {
    pub mu: Vec<f64>,
    pub fit_residual: f64,
    pub b_norm: f64,
    pub nabla_b_norm: f64,
    pub mu_norm: f64,
    pub class: PointClass,
    pub theorem1_residual: f64,
    pub theorem2_residual: f64,
    pub normal_curvature_norm: f64,
    pub nabla_shape_norm: f64,
    /// `max_α |det A_{n_α}|`
    pub max_shape_det: f64,
    pub c: f64,
}

/// Outcome of checking the parallelism conclusions on one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TheoremVerdict {
    NotApplicable,
    Checked {
        /// `∇̄R⊥ = 0`, and `R⊥ ≠ 0` when `c > 0`.
        theorem1: bool,
        /// `∇R = 0`
        theorem2: bool,
        shape_parallel: bool,
        mu_vanishes: bool,
    },
}

impl TheoremVerdict {
    pub fn passed(&self) -> bool {
        match *self {
            TheoremVerdict::NotApplicable => true,
            TheoremVerdict::Checked {
                theorem1,
                theorem2,
                shape_parallel,
                mu_vanishes,
            } => theorem1 && theorem2 && shape_parallel && mu_vanishes,
        }
    }
}

/// `μ_i = ⟨∇̄_i b, b⟩ / ⟨b, b⟩` over plain components, with the relative misfit
/// `‖∇̄b − μ ⊗ b‖ / ‖∇̄b‖` (zero when `∇̄b = 0`).
pub fn solve_mu(b: &Array3<f64>, nabla_b: &Array4<f64>, tol_b: f64) -> Result<MuFit, GeomError> {
    let bb: f64 = b.iter().map(|x| x * x).sum();
    if bb.sqrt() <= tol_b {
        return Err(GeomError::InvalidModel(format!(
            "recurrence form needs b != 0, got |b| = {:e}",
            bb.sqrt()
        )));
    }
    let n = nabla_b.shape()[0];
    let mu: Vec<f64> = (0..n)
        .map(|i| {
            let slice = nabla_b.index_axis(Axis(0), i);
            slice.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>() / bb
        })
        .collect();
    let mut misfit = 0.0;
    let mut total = 0.0;
    for i in 0..n {
        let slice = nabla_b.index_axis(Axis(0), i);
        for (x, y) in slice.iter().zip(b.iter()) {
            misfit += (x - mu[i] * y).powi(2);
            total += x * x;
        }
    }
    let fit_residual = if total == 0.0 { 0.0 } else { (misfit / total).sqrt() };
    Ok(MuFit { mu, fit_residual })
}

#[derive(Clone, Copy)]
enum Slot {
    Lower,
    Upper,
    Normal,
}

/// Frobenius norm in an orthonormal tangent frame built from `g = L Lᵀ`.
fn invariant_norm(t: ArrayD<f64>, slots: &[Slot], metric: &Array2<f64>) -> Result<f64, GeomError> {
    let l = linalg::cholesky(metric.view())?;
    // lower slots transform with L⁻¹, upper slots with Lᵀ
    let lower = linalg::invert(l.view())?;
    let upper = l.t().to_owned();
    let mut t = t;
    for (ax, slot) in slots.iter().enumerate() {
        let m = match slot {
            Slot::Lower => &lower,
            Slot::Upper => &upper,
            Slot::Normal => continue,
        };
        for mut lane in t.lanes_mut(Axis(ax)) {
            let v = m.dot(&lane);
            lane.assign(&v);
        }
    }
    Ok(t.iter().map(|x| x * x).sum::<f64>().sqrt())
}

/// Classifies the point and attaches the theorem residuals.
pub fn classify(data: &ExtrinsicData, tol: &RecurrenceTolerances) -> Result<RecurrenceResult, GeomError> {
    use Slot::*;
    let g = &data.metric;
    let norm = |t: ArrayD<f64>, s: &[Slot]| invariant_norm(t, s, g);
    let b_norm = norm(data.b.clone().into_dyn(), &[Normal, Lower, Lower])?;
    let nabla_b_norm = norm(data.nabla_b.clone().into_dyn(), &[Lower, Normal, Lower, Lower])?;
    let rperp = norm(data.normal_curvature.clone().into_dyn(), &[Lower, Lower, Normal, Normal])?;
    let nrperp = norm(
        data.nabla_normal_curvature.clone().into_dyn(),
        &[Lower, Lower, Lower, Normal, Normal],
    )?;
    let r = norm(data.riemann.clone().into_dyn(), &[Lower; 4])?;
    let nr = norm(data.nabla_riemann.clone().into_dyn(), &[Lower; 5])?;
    let nabla_shape_norm = norm(data.nabla_shape.clone().into_dyn(), &[Lower, Normal, Lower, Upper])?;
    let max_shape_det = (0..data.p())
        .map(|a| linalg::det(data.shape.index_axis(Axis(0), a)).abs())
        .fold(0.0, f64::max);

    let (mu, fit_residual, mu_norm) = if b_norm > tol.tol_b {
        let fit = solve_mu(&data.b, &data.nabla_b, 0.0)?;
        let m = ArrayD::from_shape_vec(IxDyn(&[fit.mu.len()]), fit.mu.clone()).expect("shape");
        let mu_norm = norm(m, &[Lower])?;
        (fit.mu, fit.fit_residual, mu_norm)
    } else {
        (vec![0.0; data.n()], 0.0, 0.0)
    };

    let class = if b_norm <= tol.tol_b {
        PointClass::TotallyGeodesic
    } else if nabla_b_norm <= tol.tol {
        PointClass::Parallel
    } else if fit_residual <= tol.tol && mu_norm > tol.tol {
        PointClass::Recurrent
    } else {
        PointClass::NonRecurrent
    };

    Ok(RecurrenceResult {
        mu,
        fit_residual,
        b_norm,
        nabla_b_norm,
        mu_norm,
        class,
        theorem1_residual: nrperp / (1.0 + rperp),
        theorem2_residual: nr / (1.0 + r),
        normal_curvature_norm: rperp,
        nabla_shape_norm,
        max_shape_det,
        c: data.c,
    })
}

/// Checks the parallelism conclusions where their hypothesis (parallel or
/// recurrent `b ≠ 0`) holds.
pub fn verify_theorems(result: &RecurrenceResult, tol: &RecurrenceTolerances) -> TheoremVerdict {
    match result.class {
        PointClass::Parallel | PointClass::Recurrent => {
            let t = tol.theorem_tol;
            let nonzero = result.c <= 0.0 || result.normal_curvature_norm >= result.c / 8.0;
            TheoremVerdict::Checked {
                theorem1: result.theorem1_residual <= t && nonzero,
                theorem2: result.theorem2_residual <= t,
                shape_parallel: result.nabla_shape_norm <= t,
                mu_vanishes: result.mu_norm <= t,
            }
        }
        PointClass::TotallyGeodesic | PointClass::NonRecurrent => TheoremVerdict::NotApplicable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::submanifold::{compute, find_case, ComputeOptions};

    fn run(name: &str, u: &[f64]) -> RecurrenceResult {
        let case = find_case(name).unwrap();
        let d = compute(&case, u, &ComputeOptions::default()).unwrap();
        classify(&d, &RecurrenceTolerances::default()).unwrap()
    }

    #[test]
    fn linear_is_totally_geodesic() {
        let r = run("linear_c2", &[0.1, 0.2]);
        assert_eq!(r.class, PointClass::TotallyGeodesic);
        assert_eq!(verify_theorems(&r, &RecurrenceTolerances::default()), TheoremVerdict::NotApplicable);
    }

    #[test]
    fn veronese_is_parallel_and_passes() {
        let r = run("veronese_cp2", &[0.25, -0.4]);
        assert_eq!(r.class, PointClass::Parallel);
        assert!(r.mu_norm <= 1e-7);
        assert!((r.normal_curvature_norm - 8.0).abs() < 1e-8, "{}", r.normal_curvature_norm);
        let v = verify_theorems(&r, &RecurrenceTolerances::default());
        assert!(matches!(v, TheoremVerdict::Checked { .. }) && v.passed());
    }

    #[test]
    fn parallel_input_gives_zero_mu() {
        let b = Array3::from_shape_fn((2, 2, 2), |(a, i, j)| (a + i + j) as f64);
        let fit = solve_mu(&b, &Array4::zeros((2, 2, 2, 2)), 1e-9).unwrap();
        assert_eq!(fit.mu, vec![0.0, 0.0]);
        assert_eq!(fit.fit_residual, 0.0);
        assert!(solve_mu(&Array3::zeros((2, 2, 2)), &Array4::zeros((2, 2, 2, 2)), 1e-9).is_err());
    }

    #[test]
    fn invariant_norm_of_metric_is_dimension() {
        let g = ndarray::arr2(&[[4.0, 1.0], [1.0, 3.0]]);
        let n = invariant_norm(g.clone().into_dyn(), &[Slot::Lower, Slot::Lower], &g).unwrap();
        assert!((n - 2f64.sqrt()).abs() < 1e-12);
        let ginv = linalg::invert(g.view()).unwrap();
        let n = invariant_norm(ginv.into_dyn(), &[Slot::Upper, Slot::Upper], &g).unwrap();
        assert!((n - 2f64.sqrt()).abs() < 1e-12);
    }
}
