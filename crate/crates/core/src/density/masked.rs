//! Masked-neighbourhood reconstruction over a feature grid.
//!
//! Each pixel's feature vector is rebuilt from its `K x K` neighbourhood
//! with the centre weight masked to zero:
//!
//! `rec(i, j) = sum_{(u, v)} w_{u,v}(i, j) * F(i + u, j + v)`,
//!
//! with non-negative weights summing to one over the non-centre taps. The
//! squared distance between `rec(i, j)` and `F(i, j)` is the reconstruction
//! error. Channel mixing is the identity. Weights come from a fixed rule
//! (uniform, or a softmax over negative squared feature distance to the
//! centre) or from a caller-supplied `K x K` map.

use serde::{Deserialize, Serialize};

use super::{DensityField, ErrorNormalization, EstimatorInfo};
use crate::data::FeatureGrid;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Border {
    /// Out-of-range taps read the nearest edge pixel.
    #[default]
    Replicate,
    /// Out-of-range taps wrap around.
    Torus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightMode {
    Uniform,
    SimilaritySoftmax { temperature: f64 },
    /// Row-major `K x K` weights. The centre entry is ignored.
    Provided { weights: Vec<f64> },
}

impl WeightMode {
    pub fn name(&self) -> &'static str {
        match self {
            WeightMode::Uniform => "uniform",
            WeightMode::SimilaritySoftmax { .. } => "similarity-softmax",
            WeightMode::Provided { .. } => "provided",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskedReconstructor {
    pub kernel_size: usize,
    pub weight_mode: WeightMode,
    #[serde(default)]
    pub border: Border,
}

impl MaskedReconstructor {
    pub fn uniform(kernel_size: usize) -> Self {
        Self {
            kernel_size,
            weight_mode: WeightMode::Uniform,
            border: Border::Replicate,
        }
    }

    fn validate(&self, height: usize, width: usize) -> Result<()> {
        let k = self.kernel_size;
        if k < 3 || k % 2 == 0 {
            return Err(Error::validation("kernel_size", format!("must be odd and at least 3, got {k}")));
        }
        if k > height.min(width) {
            return Err(Error::validation(
                "kernel_size",
                format!("{k} exceeds the {height}x{width} grid"),
            ));
        }
        match &self.weight_mode {
            WeightMode::Uniform => {}
            WeightMode::SimilaritySoftmax { temperature } => {
                if !(*temperature > 0.0 && temperature.is_finite()) {
                    return Err(Error::validation("temperature", "must be positive"));
                }
            }
            WeightMode::Provided { weights } => {
                if weights.len() != k * k {
                    return Err(Error::validation(
                        "weights",
                        format!("expected {} entries, got {}", k * k, weights.len()),
                    ));
                }
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return Err(Error::validation("weights", "must be finite and non-negative"));
                }
                let centre = k * k / 2;
                let total: f64 = weights
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != centre)
                    .map(|(_, w)| w)
                    .sum();
                if !(total > 0.0) {
                    return Err(Error::validation("weights", "non-centre weights sum to zero"));
                }
            }
        }
        Ok(())
    }

    /// The row-major `K x K` weights at pixel `(i, j)`, centre zero, summing to one.
    pub fn weights_at<T: Scalar>(&self, grid: &FeatureGrid<T>, i: usize, j: usize) -> Vec<T> {
        let k = self.kernel_size;
        let centre = k * k / 2;
        let mut w: Vec<T> = match &self.weight_mode {
            WeightMode::Uniform => vec![T::one(); k * k],
            WeightMode::Provided { weights } => weights.iter().map(|&x| T::lit(x)).collect(),
            WeightMode::SimilaritySoftmax { temperature } => {
                let temp = T::lit(*temperature);
                let c = grid.at(i, j);
                let logits: Vec<T> = (0..k * k)
                    .map(|tap| {
                        let nb = self.tap(grid, i, j, tap);
                        -crate::data::squared_euclidean(nb, c) / temp
                    })
                    .collect();
                let top = logits
                    .iter()
                    .enumerate()
                    .filter(|&(tap, _)| tap != centre)
                    .fold(T::neg_infinity(), |m, (_, &l)| m.max(l));
                logits.iter().map(|&l| (l - top).exp()).collect()
            }
        };
        w[centre] = T::zero();
        let total: T = w.iter().copied().sum();
        w.iter_mut().for_each(|x| *x = *x / total);
        w
    }

    fn tap<'g, T: Scalar>(&self, grid: &'g FeatureGrid<T>, i: usize, j: usize, tap: usize) -> &'g [T] {
        let k = self.kernel_size;
        let half = (k / 2) as isize;
        let di = (tap / k) as isize - half;
        let dj = (tap % k) as isize - half;
        let (h, w) = (grid.height() as isize, grid.width() as isize);
        let (mut y, mut x) = (i as isize + di, j as isize + dj);
        match self.border {
            Border::Replicate => {
                y = y.clamp(0, h - 1);
                x = x.clamp(0, w - 1);
            }
            Border::Torus => {
                y = y.rem_euclid(h);
                x = x.rem_euclid(w);
            }
        }
        grid.at(y as usize, x as usize)
    }
}

/// Squared reconstruction error at every pixel, row-major `H x W`.
pub fn masked_reconstruction_error<T: Scalar>(
    grid: &FeatureGrid<T>,
    rec: &MaskedReconstructor,
) -> Result<Vec<T>> {
    rec.validate(grid.height(), grid.width())?;
    let k = rec.kernel_size;
    let channels = grid.channels();
    let mut out = Vec::with_capacity(grid.height() * grid.width());
    let mut recon = vec![T::zero(); channels];
    for i in 0..grid.height() {
        for j in 0..grid.width() {
            let weights = rec.weights_at(grid, i, j);
            recon.iter_mut().for_each(|x| *x = T::zero());
            for (tap, &w) in weights.iter().enumerate().take(k * k) {
                if w == T::zero() {
                    continue;
                }
                for (r, &f) in recon.iter_mut().zip(rec.tap(grid, i, j, tap)) {
                    *r = *r + w * f;
                }
            }
            out.push(crate::data::squared_euclidean(&recon, grid.at(i, j)));
        }
    }
    Ok(out)
}

/// Density per pixel from its reconstruction error, in row-major order.
pub fn grid_density<T: Scalar>(
    grid: &FeatureGrid<T>,
    rec: &MaskedReconstructor,
    beta: T,
    tau: T,
    normalization: ErrorNormalization,
) -> Result<DensityField<T>> {
    let errors = masked_reconstruction_error(grid, rec)?;
    DensityField::from_errors(
        errors,
        beta,
        tau,
        normalization,
        EstimatorInfo::Masked {
            kernel_size: rec.kernel_size,
            weight_mode: rec.weight_mode.name().to_string(),
            border: rec.border,
            normalization,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn impulse_grid(value: f64) -> FeatureGrid<f64> {
        let mut v = vec![0.0; 7 * 7];
        v[3 * 7 + 3] = value;
        FeatureGrid::new(7, 7, 1, v).unwrap()
    }

    #[test]
    fn constant_grid_has_zero_error() {
        let grid = FeatureGrid::new(5, 6, 3, vec![0.7f64; 90]).unwrap();
        for mode in [
            WeightMode::Uniform,
            WeightMode::SimilaritySoftmax { temperature: 0.3 },
        ] {
            let rec = MaskedReconstructor {
                kernel_size: 3,
                weight_mode: mode,
                border: Border::Replicate,
            };
            let err = masked_reconstruction_error(&grid, &rec).unwrap();
            assert!(err.iter().all(|&e| e.abs() < 1e-28));
        }
    }

    #[test]
    fn impulse_hand_arithmetic() {
        let grid = impulse_grid(4.0);
        let err = masked_reconstruction_error(&grid, &MaskedReconstructor::uniform(3)).unwrap();
        assert_eq!(err[3 * 7 + 3], 16.0);
        for (di, dj) in [(-1, -1), (-1, 0), (0, 1), (1, 1)] {
            let idx = ((3 + di) * 7 + (3 + dj)) as usize;
            assert!((err[idx] - 0.25).abs() < 1e-15, "({di},{dj}) -> {}", err[idx]);
        }
        assert_eq!(err[0], 0.0);
    }

    #[test]
    fn provided_weights_mask_the_centre() {
        let grid = impulse_grid(2.0);
        let mut weights = vec![0.0; 9];
        weights[4] = 100.0;
        weights[5] = 1.0; // right neighbour only
        let rec = MaskedReconstructor {
            kernel_size: 3,
            weight_mode: WeightMode::Provided { weights },
            border: Border::Replicate,
        };
        let err = masked_reconstruction_error(&grid, &rec).unwrap();
        // (3,2) copies its right neighbour, the impulse.
        assert_eq!(err[3 * 7 + 2], 4.0);
        assert_eq!(err[3 * 7 + 3], 4.0);
        let w = rec.weights_at(&grid, 0, 0);
        assert_eq!(w[4], 0.0);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn softmax_weights_favour_similar_neighbours() {
        let mut v = vec![0.0; 25];
        v[2 * 5 + 3] = 1.0; // dissimilar neighbour right of centre
        let grid = FeatureGrid::new(5, 5, 1, v).unwrap();
        let rec = MaskedReconstructor {
            kernel_size: 3,
            weight_mode: WeightMode::SimilaritySoftmax { temperature: 0.5 },
            border: Border::Replicate,
        };
        let w = rec.weights_at(&grid, 2, 2);
        assert_eq!(w[4], 0.0);
        assert!(w[5] < w[3]);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kernel_size_checks() {
        let grid = impulse_grid(1.0);
        assert!(masked_reconstruction_error(&grid, &MaskedReconstructor::uniform(4)).is_err());
        assert!(masked_reconstruction_error(&grid, &MaskedReconstructor::uniform(9)).is_err());
        assert!(masked_reconstruction_error(&grid, &MaskedReconstructor::uniform(1)).is_err());
    }

    #[test]
    fn interior_translation_equivariance() {
        let mut v = vec![0.0; 10 * 10];
        v[3 * 10 + 3] = 1.5;
        v[3 * 10 + 4] = -0.5;
        let a = masked_reconstruction_error(&FeatureGrid::new(10, 10, 1, v.clone()).unwrap(), &MaskedReconstructor::uniform(3)).unwrap();
        let mut shifted = vec![0.0; 100];
        shifted[5 * 10 + 4] = 1.5;
        shifted[5 * 10 + 5] = -0.5;
        let b = masked_reconstruction_error(&FeatureGrid::new(10, 10, 1, shifted).unwrap(), &MaskedReconstructor::uniform(3)).unwrap();
        for i in 2..5 {
            for j in 2..6 {
                assert_eq!(a[i * 10 + j], b[(i + 2) * 10 + j + 1]);
            }
        }
    }

    #[test]
    fn grid_density_maps_errors() {
        let grid = impulse_grid(4.0);
        let f = grid_density(&grid, &MaskedReconstructor::uniform(3), 2.0, 0.25, ErrorNormalization::MinMax).unwrap();
        assert_eq!(f.values[0], 2.0);
        assert!((f.values[3 * 7 + 3] - 2.0 * (-4.0f64).exp()).abs() < 1e-15);
    }
}
