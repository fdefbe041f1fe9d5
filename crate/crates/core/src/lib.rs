// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod cli;
pub mod darboux;
pub mod diffusion;
pub mod error;
pub mod kernel;
pub mod math;
pub mod montecarlo;
pub mod verify;

pub use error::{Error, Result};
