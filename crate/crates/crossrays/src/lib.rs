//! Simulation, log IO, analysis reports and the interactive session
//! service built on `crossrays-core`.

pub mod analysis;
pub mod log;
pub mod questionnaire;
pub mod report;
pub mod service;
pub mod simulate;
