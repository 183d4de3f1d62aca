//! Stokes data, the dual exponential map and isomonodromy flows for
//! connections (A0/z² + B/z) dz on GL_n, plus supporting combinatorics.

pub mod curves;
pub mod dualpoisson;
pub mod error;
pub mod isoflow;
pub mod kmgraphs;
pub mod liecore;
pub mod linalg;
pub mod numap;
pub mod ode;
pub mod serde_complex;
pub mod special;
pub mod springer;
pub mod stokescomb;

pub use error::{Error, Result};
pub use liecore::{CartanElement, ComplexMatrix, Root};
