//! Crossing-ray mid-air selection: geometry, the five selection techniques,
//! the two-task trial protocol, a synthetic participant, experiment
//! scheduling and the repeated-measures statistics used to analyze it.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod agent;
pub mod experiment;
pub mod geom;
pub mod session;
pub mod stats;
pub mod tasks;
pub mod techniques;
