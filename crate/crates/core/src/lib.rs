//! Camera-based text reading for hand-held objects.
//!
//! The pipeline isolates a shaken object with mixture-of-Gaussians
//! background subtraction, finds candidate text lines by color-layer layout
//! analysis, filters them with a boosted cascade over stroke-orientation and
//! edge-density features, then binarizes the surviving regions, hands them to
//! an external OCR engine and writes a speech script.

pub mod error;
pub mod imaging;
pub mod motion;
pub mod layout;
pub mod features;
pub mod cascade;
pub mod readout;
pub mod pipeline;

pub use error::{Error, Result};
