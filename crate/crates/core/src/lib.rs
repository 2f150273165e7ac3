//! Finite-sample coarse geometry.
//!
//! Spaces are finite samples with a pseudometric; every construction is exact on
//! the sample and verified against the bound it is meant to realize.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod certificate;
pub mod corona;
pub mod cover;
pub mod entourage;
pub mod error;
pub mod json;
pub mod space;
pub mod support;
pub mod transform;
pub mod witness;

pub use certificate::{Certificate, Guarantee};
pub use cover::{Cover, CoverStats};
pub use entourage::{Direction, Entourage};
pub use error::{Error, Result};
pub use space::{GridSpec, PointMap, Space};
