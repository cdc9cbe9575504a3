//! Experiment harness around `tiler-core`: model generators, file formats,
//! reports and the `ergodic-tiler` command line.

pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod models;
pub mod report;

pub use config::Config;
pub use error::{LabError, LabResult};
