//! Symbol error rates of the maximum-likelihood detector in AWGN.
//!
//! The crate computes SER and its SNR / noise-power derivatives for arbitrary
//! n-dimensional constellations, classifies their convexity regimes, checks
//! the universal derivative bounds, and solves the power-allocation,
//! jamming and transmitter-sharing problems built on those properties.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`, with `…32` variants for `f32`.

// `!(x > 0)` style guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod closed_form;
pub mod constellation;
pub mod curve;
pub mod error;
pub mod fading;
pub mod interp;
pub mod optimize;
pub mod quad;
pub mod scalar;
pub mod ser;
pub mod special;
pub mod sphere;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use ser::{Axis, Estimate, Estimator, Region};

pub type Constellation = constellation::Constellation<f64>;
pub type Constellation32 = constellation::Constellation<f32>;
pub type DecisionRegion = constellation::DecisionRegion<f64>;
pub type DecisionRegion32 = constellation::DecisionRegion<f32>;
pub type NoiseModel = ser::NoiseModel<f64>;
pub type SphereRegion = sphere::SphereRegion<f64>;
pub type CurveEstimate = curve::CurveEstimate<f64>;
pub type CurveEstimate32 = curve::CurveEstimate<f32>;
pub type BoundSet = bounds::BoundSet<f64>;
pub type BoundSet32 = bounds::BoundSet<f32>;
pub type RegimeReport = bounds::RegimeReport<f64>;
pub type FadingModel = fading::FadingModel<f64>;
pub type AllocationResult = optimize::AllocationResult<f64>;
pub type SharingStrategy = optimize::SharingStrategy<f64>;
pub type ClosedForm = closed_form::ClosedForm<f64>;

pub use constellation::StandardConstellation;
pub use curve::{Grid, Method, Quantity};
pub use fading::FadingFamily;
pub use optimize::SharingKind;
