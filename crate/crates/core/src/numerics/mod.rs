//! Special functions, quadrature and decay regression.

pub mod airy;
pub mod fit;
pub mod quad;

pub use airy::{airy_ai, airy_ai_flagged, airy_ai_reflected, AiryValue};
pub use fit::{fit_decay, DecayFit, DecayModel, FitError, R2_THRESHOLD};
pub use quad::{exp_moment, integrate_decaying, Domain, MomentError, QuadError, QuadResult, QuadratureSpec};
