//! Core algorithms for weather-sentiment corpus analytics.
//!
//! Everything here is pure computation over in-memory collections and builds
//! with `alloc` only. File formats, the CLI and the synthetic data generator
//! live in the `weatherlex` crate.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod analytics;
pub mod corpus;
mod error;
pub mod grid;
pub mod lexicon;
mod math;
pub mod region;
pub mod scorer;
pub mod stats;
pub mod weather_scale;

pub use error::{Error, Result};
