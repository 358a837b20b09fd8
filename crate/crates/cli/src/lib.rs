//! Command-line and HTTP front ends for the chronorule engine.

pub mod commands;
pub mod service;
