//! Scenario files, the offline/online pipelines, the benchmark harness and
//! SVG rendering behind the `hap` binary.

pub mod artifact;
pub mod bench;
pub mod commands;
pub mod error;
pub mod presets;
pub mod render;
pub mod scenario;

pub use error::CliError;
