//! Command-line pipeline and HTTP recalibration service for `subprice`.

pub mod cli;
pub mod pipeline;
pub mod service;
