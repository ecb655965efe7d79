//! File formats, experiment orchestration and benchmarks on top of
//! `paraquannet-core`.

pub mod bench;
pub mod config;
pub mod experiment;
pub mod formats;
pub mod metrics;
