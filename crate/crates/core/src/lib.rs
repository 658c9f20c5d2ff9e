//! Simulation and analysis of a memristive multilevel memory cell.
//!
//! Layers, bottom up:
//! - [`device`]: threshold-gated linear ion drift memristor model.
//! - [`circuit`]: netlists, dense MNA solves and transient stepping.
//! - [`readout`]: closed-form read voltage of the cell.
//! - [`cell`]: cell netlist construction and the reset/write/read cycle.
//! - [`analysis`]: level tables, gap statistics, sensitivity and topology search.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cell;
pub mod circuit;
pub mod device;
mod error;
pub mod exec;
pub mod fmt;
pub mod readout;

pub use error::{Error, Result};
pub use exec::Exec;
