use kaehlerlab::identities::residuals;
use kaehlerlab::recurrence::{classify, solve_mu, RecurrenceTolerances};
use kaehlerlab::submanifold::{catalog, compute, ComputeOptions, FrameSeed};
use proptest::prelude::*;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn norms_do_not_depend_on_the_normal_frame(
        case_ix in 0usize..5,
        x in -0.9f64..0.9,
        y in -0.9f64..0.9,
        seed in any::<u64>(),
    ) {
        let case = &catalog()[case_ix];
        let u = [x, y];
        let plain = compute(case, &u, &ComputeOptions::default()).unwrap();
        let opts = ComputeOptions {
            seed: Some(FrameSeed::rotated(case.ambient.real_dim(), seed)),
            ..ComputeOptions::default()
        };
        let mixed = compute(case, &u, &opts).unwrap();
        let tol = RecurrenceTolerances::default();
        let (a, b) = (classify(&plain, &tol).unwrap(), classify(&mixed, &tol).unwrap());
        prop_assert!(close(a.b_norm, b.b_norm));
        prop_assert!(close(a.nabla_b_norm, b.nabla_b_norm));
        prop_assert!(close(a.normal_curvature_norm, b.normal_curvature_norm));
        prop_assert!(close(a.theorem1_residual, b.theorem1_residual));
        prop_assert!(close(a.theorem2_residual, b.theorem2_residual));
        prop_assert_eq!(a.class, b.class);
        let (ra, rb) = (residuals(&plain, &case.ambient, 3).unwrap(), residuals(&mixed, &case.ambient, 3).unwrap());
        for (id, r) in &ra {
            prop_assert!((r - rb[id]).abs() <= 1e-9, "{} {} {}", id, r, rb[id]);
        }
    }

    #[test]
    fn mu_fit_is_scale_invariant(
        case_ix in 1usize..5,
        x in -0.9f64..0.9,
        y in -0.9f64..0.9,
        power in -8i32..8,
        negative in any::<bool>(),
    ) {
        let case = &catalog()[case_ix];
        let d = compute(case, &[x, y], &ComputeOptions::default()).unwrap();
        let lambda = if negative { -2f64.powi(power) } else { 2f64.powi(power) };
        let base = solve_mu(&d.b, &d.nabla_b, 1e-9).unwrap();
        let scaled = solve_mu(&(&d.b * lambda), &(&d.nabla_b * lambda), 1e-9).unwrap();
        prop_assert_eq!(&base.mu, &scaled.mu);
        prop_assert_eq!(base.fit_residual, scaled.fit_residual);

        let tol = RecurrenceTolerances::default();
        let mut e = d.clone();
        e.b *= lambda;
        e.nabla_b *= lambda;
        prop_assert_eq!(classify(&d, &tol).unwrap().class, classify(&e, &tol).unwrap().class);
    }

    #[test]
    fn shape_operators_are_traceless_and_symmetric_in_b(
        case_ix in 0usize..5,
        x in -1.0f64..1.0,
        y in -1.0f64..1.0,
    ) {
        let case = &catalog()[case_ix];
        let d = compute(case, &[x, y], &ComputeOptions::default()).unwrap();
        for a in 0..d.p() {
            let tr = d.shape[[a, 0, 0]] + d.shape[[a, 1, 1]];
            prop_assert!(tr.abs() <= 1e-9 * (1.0 + d.b.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
            prop_assert!((d.b[[a, 0, 1]] - d.b[[a, 1, 0]]).abs() <= 1e-12 * (1.0 + d.b[[a, 0, 1]].abs()));
        }
        for k in 0..d.n() {
            prop_assert!((d.christoffel[[k, 0, 1]] - d.christoffel[[k, 1, 0]]).abs() <= 1e-14);
        }
    }
}
