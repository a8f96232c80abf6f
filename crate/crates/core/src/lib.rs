// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod detect;
pub mod error;
pub mod eval;
pub mod frame_io;
pub mod geometry;
pub mod grid;
pub mod optflow;
pub mod pipeline;
pub mod segmentation;
pub mod synthlab;
pub mod viz;

pub use error::{Error, Result};
