//! Anisotropic norms, convex symmetrization, Lorentz norms and a radial
//! solver for Hardy-type p-Laplacian problems on Wulff balls.

// `!(x > a)` rejects NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod error;
pub mod geometry;
pub mod norms;
pub mod numerics;
pub mod radial;
pub mod rearrangement;
pub mod serde_ext;

pub use error::{Error, Result};
pub use norms::NormSpec;
