//! Stability certificates for the switched reference system and the
//! resulting prediction and tracking error bounds.

pub mod bounds;
pub mod certificate;
pub mod lmi;
pub mod vertices;

pub use bounds::{
    beta_xtilde, prediction_error_bound, schur_complement_q, switching_ratio, tracking_error_bound, PerformanceBounds,
    DEFAULT_A,
};
pub use certificate::{
    certify_dwell_time, dwell_time, find_common_lyapunov, find_dwell_time_family, CertificateKind, StabilityCertificate,
    VerificationMargins, VERIFY_TOLERANCE,
};
pub use lmi::{solve_lyapunov_lmi, worst_margin, LmiOptions, LmiOutcome};
pub use vertices::{enumerate_vertices, vertex_matrices, PolytopeVertexSet};
