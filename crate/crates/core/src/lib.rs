//! Computational microlocal analysis.
//!
//! FBI transforms and their deformations, the escape weights used to push
//! analytic regularity along radial sources, Hamiltonian flows of the Keldysh
//! and Tricomi symbols, and the one-dimensional Keldysh model problem together
//! with the Airy-built Tricomi solution that fails to be analytic.

pub mod fbi;
pub mod model1d;
pub mod numerics;
pub mod phase_space;
pub mod weights;
pub mod wfa;

/// Library version, echoed in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
