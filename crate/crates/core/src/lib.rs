//! Binary hypervectors, learned binary encoders and prototype classifiers.

pub mod data;
pub mod encoders;
pub mod error;
pub mod hv;
pub mod model;
pub mod rng;
pub mod snapshot;
pub mod theory;

pub use error::{DataError, FormatError, HdcError, Result};
pub use hv::BinaryHypervector;
pub use rng::SplittableRng;
