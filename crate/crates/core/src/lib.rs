//! Analytical performance model for a collocated licensed/unlicensed
//! millimetre-wave deployment with session offloading, plus an embedded
//! Monte Carlo simulator used as an independent check.

pub mod chanstat;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod lbt;
pub mod numeric;
pub mod oracle;
pub mod config;
pub mod pipeline;
pub mod pmf;
pub mod resq;

pub use error::{Error, Result};
