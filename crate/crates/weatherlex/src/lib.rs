//! File formats, configuration, the stage runner and the synthetic data
//! generator around `weatherlex-core`.

pub mod config;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod synth;

pub use weatherlex_core as core;

pub use config::Config;
pub use error::{Error, Result};
pub use pipeline::{Pipeline, Stage};
