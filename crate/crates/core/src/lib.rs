//! Certification toolkit for ReLU-network controllers of polytopic linear systems.
//!
//! The crate covers the whole pipeline: polyhedral geometry, the uncertain
//! dynamics and their contractive invariant set, three stabilizing piecewise
//! affine controllers, ReLU networks, a self-contained LP/QP/MILP stack, the
//! mixed-integer encodings used to bound approximation errors, and the
//! closed-loop stability certificate built on top of them.

pub mod certify;
pub mod complexity;
pub mod controllers;
mod error;
pub mod geometry;
pub mod instances;
pub mod io;
pub mod linalg;
pub mod opt;
pub mod par;
pub mod relu;
pub mod system;
pub mod trainer;

pub use error::{Error, Result};
pub use geometry::{Norm, Polytope, Simplex};
pub use par::Parallelism;
