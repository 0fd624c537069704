//! Room acoustics toolkit: rigid-room modes, boundary materials, frequency
//! response synthesis, knowledge-based dimension inference and dataset
//! generation.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod inverse;
pub mod materials;
pub mod quadrature;
pub mod room;
pub mod sim;
pub mod special;
pub mod spectrum;
pub mod validation;

pub use error::{Error, Result};
pub use materials::{MaterialSpec, OctaveBand};
pub use room::{AirProperties, Axis, ModeIndex, RoomGeometry, SurfaceId};
pub use spectrum::{FrequencyGrid, TfMetadata, TransferFunction};
