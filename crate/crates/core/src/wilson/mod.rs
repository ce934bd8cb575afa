//! Parallel transport, Chen iterated integrals and Wilson loops.

pub mod exact;
pub mod numeric;
pub mod skeleton;

pub use skeleton::{check_closedness_skeleton, fd_probe, FdProbe, SkeletonReport, StokesCase, FD_TOLERANCE};
pub use exact::{
    b_series, build_b_lambda, build_c, chen, closedness_residual, conjugate, end_face_pair, face_sign_ledger,
    face_term, gen_wilson, gen_wilson_even, identity_form, rep_size, to_matrix, transport, transport_series,
    word_form, Base, ExactMatrix, FacePair, FaceSign, Letter, TransportResult, WindingLoop,
};
pub use numeric::{
    chen_quadrature, check_holonomy_variation, classical_wilson, transport_extrapolated, transport_rk4, CMat, Connection, FnLoop, FormField,
    NumLoop, PureGauge, SampledLoop, TrigConnection, TrigFormField, TrigMode, VariationReport, VariationStep, smooth_variation, trefoil,
};
