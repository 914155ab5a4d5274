#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod chest;
pub mod detect;
pub mod error;
pub mod fec;
pub mod harness;
pub mod scenario;
pub mod waveform;

pub use error::{Error, Result};
