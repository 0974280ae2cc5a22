//! Pipeline CLI: dumps in, figure data and stat reports out.

pub mod config;
pub mod outputs;
pub mod pipeline;

pub use config::RunConfig;
pub use pipeline::{write_synth_bundle, Pipeline, Stage, FULL_ORDER};
