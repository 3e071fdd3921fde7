//! Benchmarking and evaluation of object detectors on memory-constrained
//! devices: aerial-image preprocessing, a sequential measurement harness for
//! detector backends, and precision/recall/AP accuracy metrics.

pub mod annotation;
pub mod bench;
pub mod error;
pub mod eval;
pub mod model;
pub mod pipeline;
pub mod report;

pub use error::{Error, Result};
pub use model::{hbb_from_quad, iou, Detection, GroundTruthBox, Hbb, ImageRecord, Provenance, Quad};
