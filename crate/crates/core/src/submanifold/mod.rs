//! Immersed complex submanifolds: the catalog of explicit examples and the
//! extrinsic geometry computed from a parametrisation.

mod catalog;
mod extrinsic;

pub use catalog::{catalog, find_case, Domain, ExpectedClass, ImmersionCase, ImmersionMap};
pub use extrinsic::{
    adapted_normal_frame, christoffel, compute, covariant_derivative_a, covariant_derivative_b,
    covariant_derivative_normal_curvature, intrinsic_curvature, normal_curvature, induced_metric, normal_connection,
    perturb_second_fundamental_form, relative_gap, second_fundamental_form, shape_operators,
    ComputeOptions, ExtrinsicData, FrameSeed, CANDIDATE_FLOOR, COMPLEX_TANGENT_TOL, NABLA_B_PATH_TOL,
    PATH_TOL,
    RANK_FLOOR,
};
