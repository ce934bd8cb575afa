//! Exact de Rham calculus on tori and fibered domains.

pub mod form;
pub mod laws;
pub mod maps;
pub mod qp;

pub use form::{
    merge_sign, random_form, random_scalar, AlgebraOps, Bilinear, CoordKind, Domain, FiberedForm, Form, GrassPoly, Key,
    RandomSpec, TorusForm, ValueKind,
};
pub use qp::QP;
pub use maps::{
    base_domain, boundary_pushforward, pull_to_total, pushforward, simplex_face_map, simplex_face_sign, CoordImage,
    CoordMap, FaceConvention, Fiber,
};
