//! Exact verification of BV superfield identities, iterated integrals and angular forms.

pub mod angular;
pub mod bv;
pub mod derham;
pub mod error;
pub mod koszul;
pub mod liealg;
pub mod linalg;
pub mod wilson;

pub use error::{Error, Result};
