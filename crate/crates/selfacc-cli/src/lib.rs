//! Scenario layer over the core library: a small config format, built-in
//! presets embedded from the shipped config files, run execution with
//! post-run measurements, deterministic output writers, and the referee
//! that re-derives the frozen constants.

pub mod config;
pub mod output;
pub mod referee;
pub mod scenario;
pub mod table;
