//! Exact bigraded algebra kernel.

pub mod graded;
pub mod scalar;

pub use graded::{
    apply_derivation, berezin, swap_sign, CommClass, DerivationRule, GradedElement, Generator, LieValued,
    MatrixElement, Monomial, Universe,
};
pub use scalar::{Scalar, C, Q};
