//! Poisson and compound Poisson approximation laboratory for nonconventional multiple
//! recurrence counts on shift spaces.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod distributions;
pub mod engine;
pub mod error;
pub mod measures;
pub mod recurrence;
pub mod symbolic;
pub mod words;

pub use error::{Error, Result};
