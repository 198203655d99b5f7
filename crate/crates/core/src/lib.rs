//! Phase retrieval from magnitude-only Gaussian measurements.
//!
//! * [`ensemble`]: Gaussian sensing vectors, observations, block schedules.
//! * [`objective`]: reshaped (amplitude) and intensity losses and gradients.
//! * [`init`]: random and spectral starting points.
//! * [`solver`]: resampled reshaped Wirtinger flow and the Wirtinger flow baseline.
//! * [`analysis`]: iterate geometry, landmark times, state evolution.
//! * [`harness`]: seeded experiment drivers writing CSV, SVG and a manifest.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar type.

pub mod analysis;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod init;
pub mod linalg;
pub mod objective;
pub mod rng;
mod scalar;
pub mod solver;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Signal = ensemble::SignalVector<f64>;
pub type Signal32 = ensemble::SignalVector<f32>;
pub type Measurements = ensemble::MeasurementSet<f64>;
pub type Measurements32 = ensemble::MeasurementSet<f32>;
pub type Report = solver::RunReport<f64>;
pub type Report32 = solver::RunReport<f32>;
pub type Gradient = objective::GradientResult<f64>;
pub type Init = init::InitReport<f64>;
