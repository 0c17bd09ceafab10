//! Coverage-density estimation.
//!
//! Estimators produce a per-point error (a proxy for the local average
//! radial distance) which [`density_from_error`] maps to a density
//! `beta * exp(-err / tau)`. Densities are always in `(0, beta]`.

mod calibration;
mod kernel;
mod knn;
mod masked;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

pub use calibration::{calibrate, DEFAULT_BINS, CalibrationPair, CalibrationReport, DensityBin};
pub use kernel::kernel_density;
pub use knn::{knn_density, KnnOptions};
pub use masked::{grid_density, masked_reconstruction_error, Border, MaskedReconstructor, WeightMode};

/// Densities below this are raised to it before being used as divisors.
pub const DENSITY_FLOOR: f64 = 1e-12;

/// `ln(beta)` used in active selection.
pub const DEFAULT_LOG_BETA: f64 = 2.4;
pub const DEFAULT_TAU: f64 = 0.25;

pub fn default_beta() -> f64 {
    DEFAULT_LOG_BETA.exp()
}

pub fn default_tau() -> f64 {
    DEFAULT_TAU
}

/// How raw estimator errors are rescaled before the exponential mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorNormalization {
    /// Min-max over the current point set, giving errors in `[0, 1]`.
    /// A constant error vector maps to all zeros.
    #[default]
    MinMax,
    None,
}

impl ErrorNormalization {
    pub fn apply<T: Scalar>(self, errors: &mut [T]) {
        if self == ErrorNormalization::None || errors.is_empty() {
            return;
        }
        let (lo, hi) = errors
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        let span = hi - lo;
        for e in errors.iter_mut() {
            *e = if span > T::zero() { (*e - lo) / span } else { T::zero() };
        }
    }
}

/// `beta * exp(-err / tau)`.
pub fn density_from_error<T: Scalar>(err: T, beta: T, tau: T) -> Result<T> {
    if !(err >= T::zero()) {
        return Err(Error::validation("error", format!("must be non-negative, got {err}")));
    }
    if !(beta > T::zero() && beta.is_finite()) {
        return Err(Error::validation("beta", format!("must be positive, got {beta}")));
    }
    if !(tau > T::zero() && tau.is_finite()) {
        return Err(Error::validation("tau", format!("must be positive, got {tau}")));
    }
    Ok(beta * (-err / tau).exp())
}

/// Describes the estimator that produced a [`DensityField`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EstimatorInfo {
    Knn {
        k: usize,
        metric: crate::data::Metric,
        normalization: ErrorNormalization,
        torus: bool,
    },
    Kernel {
        bandwidth: f64,
    },
    Masked {
        kernel_size: usize,
        weight_mode: String,
        border: Border,
        normalization: ErrorNormalization,
    },
    Constant,
}

/// Per-point coverage density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityField<T> {
    pub values: Vec<T>,
    pub beta: T,
    /// Absent for estimators that do not use the exponential mapping.
    pub tau: Option<T>,
    pub estimator: EstimatorInfo,
}

impl<T: Scalar> DensityField<T> {
    /// Every point gets density `value`.
    pub fn constant(n: usize, value: T) -> Self {
        Self {
            values: vec![value; n],
            beta: value,
            tau: None,
            estimator: EstimatorInfo::Constant,
        }
    }

    /// Maps raw errors through the optional normalization and the
    /// exponential mapping.
    pub fn from_errors(
        mut errors: Vec<T>,
        beta: T,
        tau: T,
        normalization: ErrorNormalization,
        estimator: EstimatorInfo,
    ) -> Result<Self> {
        normalization.apply(&mut errors);
        let values = errors
            .into_iter()
            .map(|e| density_from_error(e, beta, tau))
            .collect::<Result<Vec<T>>>()?;
        Ok(Self {
            values,
            beta,
            tau: Some(tau),
            estimator,
        }
        .floored())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Multiplies every density (and `beta`) by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            values: self.values.iter().map(|&d| d * factor).collect(),
            beta: self.beta * factor,
            ..self.clone()
        }
    }

    /// Raises densities below [`DENSITY_FLOOR`] to the floor.
    pub fn floored(mut self) -> Self {
        let floor = T::lit(DENSITY_FLOOR);
        let mut clamped = 0usize;
        for d in &mut self.values {
            if *d < floor {
                *d = floor;
                clamped += 1;
            }
        }
        if clamped > 0 {
            log::info!("clamped {clamped} densities to the floor {DENSITY_FLOOR:e}");
        }
        self
    }

    /// Densities restricted to `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            values: indices.iter().map(|&i| self.values[i]).collect(),
            ..self.clone()
        }
    }
}
