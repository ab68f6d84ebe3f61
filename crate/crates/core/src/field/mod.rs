//! Grid fields, interpolation, discrete operators and the Poisson-type
//! inversions built on them.

mod biot_savart;
pub mod dump;
mod grid;
mod leray;
pub(crate) mod linalg;
pub mod ops;
mod series;
pub(crate) mod spectral;

pub use biot_savart::inverse_curl;
pub use grid::{Grid, ScalarField, VectorField};
pub use leray::leray_project;
pub use ops::{curl, curl_scalar, divergence, gradient, Curl};
pub use series::{sample_velocity, FieldSeries};
