//! Joint source-channel vector quantization of compressed-sensing
//! measurements.

pub mod bounds;
pub mod channel;
pub mod codebook;
pub mod combinatorics;
pub mod covq;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod io;
mod kernel;
pub mod model;
pub mod msvq;
pub mod rng;
pub mod ssc;

pub use error::{Error, Result};
