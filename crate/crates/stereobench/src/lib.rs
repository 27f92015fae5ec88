//! File formats, dataset layout and the `stereobench` command line on top
//! of `stereobench-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod io;
pub mod manifest;
pub mod params;
pub mod report;
pub mod score;

pub use stereobench_core;
