//! Simulation and verification toolkit for high-dimensional Berry-Esseen
//! bounds over hyper-rectangles for m-dependent random vectors.

pub mod audit;
pub mod batch;
pub mod blocking;
pub mod bounds;
pub mod config;
pub mod distance;
pub mod error;
pub mod experiment;
pub mod gaussian;
pub mod normal;
pub mod output;
pub mod params;
pub mod persist;
pub mod procgen;
pub mod rect;
pub mod rng;
pub mod smoothing;
pub mod svg;

pub use error::{Error, Result};
