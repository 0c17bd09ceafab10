//! Deterministic synthetic datasets.
//!
//! Points are drawn with [`SplitMix64`] seeded from the spec: components are
//! visited in order, points within a component in order, coordinates within
//! a point in order. Gaussian coordinates are `mean + std * z` with `z` from
//! the Box-Muller transform documented in [`crate::rng`]; uniform-box
//! coordinates are `low + (high - low) * u`.

use serde::{Deserialize, Serialize};

use crate::data::{LabeledPointSet, PointSet};
use crate::rng::SplitMix64;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub layout: Layout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Layout {
    /// Isotropic Gaussian blobs; label = component position (1-based).
    GaussianMixture { components: Vec<Component> },
    /// Uniform samples in an axis-aligned box; every label is 1.
    UniformBox {
        low: Vec<f64>,
        high: Vec<f64>,
        count: usize,
    },
    /// `rows x cols` Gaussian blobs centred on a lattice in the first two
    /// coordinates (remaining coordinates centred at 0). Labels follow
    /// row-major blob order.
    GridBlobs {
        rows: usize,
        cols: usize,
        spacing: f64,
        dim: usize,
        std: f64,
        count_per_blob: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub mean: Vec<f64>,
    pub std: f64,
    pub count: usize,
}

impl GeneratorSpec {
    pub fn gaussian_mixture(components: Vec<Component>, seed: u64) -> Self {
        Self {
            seed,
            layout: Layout::GaussianMixture { components },
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            layout: self.layout.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.layout {
            Layout::GaussianMixture { components } => {
                if components.is_empty() {
                    return Err(Error::validation("components", "at least one component is required"));
                }
                let dim = components[0].mean.len();
                if dim == 0 {
                    return Err(Error::validation("components[0].mean", "must be non-empty"));
                }
                for (i, c) in components.iter().enumerate() {
                    if c.mean.len() != dim {
                        return Err(Error::validation(
                            format!("components[{i}].mean"),
                            format!("dimension {} differs from {dim}", c.mean.len()),
                        ));
                    }
                    if c.mean.iter().any(|x| !x.is_finite()) {
                        return Err(Error::validation(format!("components[{i}].mean"), "must be finite"));
                    }
                    if !(c.std > 0.0 && c.std.is_finite()) {
                        return Err(Error::validation(
                            format!("components[{i}].std"),
                            format!("must be positive and finite, got {}", c.std),
                        ));
                    }
                }
                if components.iter().map(|c| c.count).sum::<usize>() == 0 {
                    return Err(Error::validation("components.count", "counts must sum to at least 1"));
                }
            }
            Layout::UniformBox { low, high, count } => {
                if low.is_empty() || low.len() != high.len() {
                    return Err(Error::validation("high", "low and high must be non-empty and of equal length"));
                }
                for (d, (l, h)) in low.iter().zip(high).enumerate() {
                    if !(l.is_finite() && h.is_finite() && l < h) {
                        return Err(Error::validation(
                            format!("high[{d}]"),
                            format!("expected low < high, got [{l}, {h}]"),
                        ));
                    }
                }
                if *count == 0 {
                    return Err(Error::validation("count", "must be at least 1"));
                }
            }
            Layout::GridBlobs {
                rows,
                cols,
                spacing,
                dim,
                std,
                count_per_blob,
            } => {
                if *rows == 0 || *cols == 0 {
                    return Err(Error::validation("rows", "rows and cols must be at least 1"));
                }
                if *dim < 2 {
                    return Err(Error::validation("dim", "grid blobs need at least 2 dimensions"));
                }
                if !spacing.is_finite() {
                    return Err(Error::validation("spacing", "must be finite"));
                }
                if !(*std > 0.0 && std.is_finite()) {
                    return Err(Error::validation("std", format!("must be positive and finite, got {std}")));
                }
                if *count_per_blob == 0 {
                    return Err(Error::validation("count_per_blob", "must be at least 1"));
                }
            }
        }
        Ok(())
    }

    /// Samples the dataset. Ids are `0..n` in generation order.
    pub fn generate<T: Scalar>(&self) -> Result<LabeledPointSet<T>> {
        self.validate()?;
        let mut rng = SplitMix64::new(self.seed);
        let mut features: Vec<f64> = Vec::new();
        let mut labels = Vec::new();
        let (dim, num_classes) = match &self.layout {
            Layout::GaussianMixture { components } => {
                for (c, comp) in components.iter().enumerate() {
                    sample_blob(&mut rng, &comp.mean, comp.std, comp.count, &mut features);
                    labels.extend(std::iter::repeat_n(c as u32 + 1, comp.count));
                }
                (components[0].mean.len(), components.len() as u32)
            }
            Layout::UniformBox { low, high, count } => {
                for _ in 0..*count {
                    for (l, h) in low.iter().zip(high) {
                        features.push(rng.uniform(*l, *h));
                    }
                }
                labels.resize(*count, 1);
                (low.len(), 1)
            }
            Layout::GridBlobs {
                rows,
                cols,
                spacing,
                dim,
                std,
                count_per_blob,
            } => {
                let mut mean = vec![0.0; *dim];
                for r in 0..*rows {
                    for c in 0..*cols {
                        mean[0] = r as f64 * spacing;
                        mean[1] = c as f64 * spacing;
                        sample_blob(&mut rng, &mean, *std, *count_per_blob, &mut features);
                        let label = (r * cols + c) as u32 + 1;
                        labels.extend(std::iter::repeat_n(label, *count_per_blob));
                    }
                }
                (*dim, (rows * cols) as u32)
            }
        };
        let n = labels.len();
        let points = PointSet::from_flat(
            dim,
            features.into_iter().map(T::lit).collect(),
            (0..n as u64).collect(),
        )?;
        LabeledPointSet::new(points, labels, num_classes)
    }
}

fn sample_blob(rng: &mut SplitMix64, mean: &[f64], std: f64, count: usize, out: &mut Vec<f64>) {
    for _ in 0..count {
        for &m in mean {
            out.push(m + std * rng.standard_normal());
        }
    }
}
