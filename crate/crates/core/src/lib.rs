//! Relaxation-system analysis for linear time-invariant state-space models.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod cli;
pub mod error;
pub mod gen;
pub mod hankel;
pub mod io;
pub mod linalg;
pub mod model;
pub mod passivity;
pub mod storage;

pub use error::{Error, Result};
pub use model::{Hold, StateSpaceModel, Trajectory};
