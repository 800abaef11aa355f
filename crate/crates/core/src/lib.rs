//! Economic complexity metrics for country × product trade data.
//!
//! The crate is `no_std` (it needs `alloc`) and holds the numerical side of
//! the toolkit: Balassa RCA and the binary incidence matrix, diversity and
//! ubiquity, the method of reflections and its spectral ECI/PCI, the
//! fitness-complexity map and its modified variant with interior steady
//! states, rank statistics, and panel OLS with period effects and
//! cluster-robust errors. File formats and the command line live in the
//! `ecomplexity` crate.

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod data;
pub mod econ;
mod error;
pub mod fitness;
pub mod linalg;
pub mod rca;
pub mod reflections;
mod score;
pub mod special;
pub mod stats;

pub use error::{Axis, Error, Result};
pub use score::{Entity, Metric, ScoreVector};
