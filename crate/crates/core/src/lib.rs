//! Numerical laboratory for the PushTASEP in inhomogeneous space.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod airy;
pub mod asymptotics;
pub mod error;
pub mod experiment;
pub mod field;
pub mod fredholm;
pub mod kernel;
pub mod oracle;
mod fenwick;
pub mod profile;
pub mod quad;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
