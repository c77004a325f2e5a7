// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catk;
pub mod cli;
pub mod entropy;
pub mod error;
pub mod geometry;
pub mod qcalc;
pub mod quadrature;
pub mod superstat;

pub use error::{Error, Result};
