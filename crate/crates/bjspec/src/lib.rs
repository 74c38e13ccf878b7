//! Spectral quantities of finite and semi-infinite block Jacobi matrices via
//! symplectic transfer-matrix calculus, with boundary-condition and
//! coupling-constant averages validated against dense eigensolve oracles and
//! Haar Monte Carlo.

pub mod error;
pub mod linalg;

pub mod model;
pub mod symplectic;

pub mod moebius;

pub mod green;
pub mod haar;

pub mod averaging;
pub mod coupling;
pub mod oscillation;

pub mod random;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{CMat, RMat, Tolerances};

/// Library version embedded into every emitted result file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
