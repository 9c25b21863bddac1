//! Soliton microwave pulses through a dissipative two-level system.

// NaN must fail positivity checks, so `!(x > 0.0)` is deliberate
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod commands;
pub mod config;
pub mod dressed;
pub mod error;
pub mod lindblad;
pub mod matrix;
pub mod numerics;
pub mod propagation;
pub mod report;
pub mod units;

pub use error::{Error, Result};
