//! Experiment orchestration around the `gearvib-core` algorithms: config
//! parsing and presets, a resumable parallel case runner with a JSON
//! manifest, trend reporting, and plot-data exporters.

pub mod config;
pub mod manifest;
pub mod pipeline;
pub mod plots;
pub mod report;
