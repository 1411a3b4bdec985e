// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod eval;
pub mod geometry;
pub mod image;
pub mod io;
pub mod loss;
pub mod optim;
pub mod render;
pub mod slam;
pub mod synth;

pub use error::{Error, Result};
