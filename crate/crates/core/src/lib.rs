//! Verification engine for (p,q)-harmonic hypersurfaces and curves in space forms.

// `!(a < b)` is how NaN inputs get rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod chartfile;
pub mod curves;
pub mod error;
pub mod expr;
pub mod immersion;
pub mod numerics;
pub mod residual;
pub mod spaceform;
pub mod variation;

pub use error::{GeomError, Result};
pub use residual::{Classification, PQParams};
pub use spaceform::SpaceForm;
