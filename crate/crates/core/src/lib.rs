//! Density-aware core-set selection for active learning.
//!
//! The crate computes coverage-area geometry over a labeled point set
//! (nearest-selected assignment, classical covering radius, average radial
//! distance per coverage area), assembles the classical and the tightened
//! core-set loss bounds, estimates per-point coverage density, and runs the
//! density-aware greedy selection next to k-center greedy and uncertainty
//! baselines.
//!
//! All numeric code is generic over [`Scalar`] (implemented for `f32` and
//! `f64`); the `*F64` aliases at the crate root name the common
//! double-precision instantiations.

pub mod coverage;
pub mod data;
pub mod density;
mod error;
pub mod evaluation;
pub mod generate;
pub mod io;
pub mod rng;
pub mod selection;
pub mod stats;

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive};

pub use error::{Error, Result};

/// Floating-point scalar used throughout the crate.
pub trait Scalar:
    Float
    + FromPrimitive
    + Sum
    + Debug
    + Display
    + FromStr
    + Default
    + serde::Serialize
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Never fails for the implemented types.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub type PointSetF64 = data::PointSet<f64>;
pub type PointSetF32 = data::PointSet<f32>;
pub type LabeledPointSetF64 = data::LabeledPointSet<f64>;
pub type LabeledPointSetF32 = data::LabeledPointSet<f32>;
pub type FeatureGridF64 = data::FeatureGrid<f64>;
pub type CoverageAssignmentF64 = coverage::CoverageAssignment<f64>;
pub type BoundReportF64 = coverage::BoundReport<f64>;
pub type DensityFieldF64 = density::DensityField<f64>;
pub type SelectionStateF64 = selection::SelectionState<f64>;
pub type ComparisonReportF64 = evaluation::ComparisonReport<f64>;
