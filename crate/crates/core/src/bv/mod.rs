//! BV superfield formalism for BF theory.

pub mod brst;
pub mod expr;
pub mod fields;
pub mod functional;

pub use expr::{integrate_pair, pair_forms, DerivMode, Expr, ExprDerivation, Shape};
pub use fields::{
    assemble_superfields, check_sign_tables, check_tower, field_catalog, gauge_fixing_tower, random_config, FieldSpec,
    Superfield, SuperfieldConfig, ValuedIn,
};
pub use functional::{
    bv_laplacian_formal, curvature, cov_deriv_b, delta_images, derivative_residual, directional_derivative,
    check_flat, delta_functional, mu_from_lambda, random_test_form, result_degrees, sbracket, Density, FlatReport,
    LocalFunctional, Side, Tag, Twist,
};
pub use brst::{brst_derivation, brst_reduction, brst_square, check_flat_connection, classical_reduction, form_residual, ComponentResidual};
