//! Command-line front end: input parsing, the batch pipeline, and the
//! built-in self-test.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod fmt;
pub mod io;
pub mod pipeline;
pub mod selftest;
pub mod synth;
