//! Constant-mean-curvature n-noids with Platonic symmetry, built with the
//! loop-group (DPW) method.

pub mod complexrat;
pub mod error;

pub use error::{Error, Result};
pub mod cli;
pub mod looplab;
pub mod mat2;
pub mod moebius;
pub mod monodromy;
pub mod potentials;
pub mod surface;
pub mod unitarize;
