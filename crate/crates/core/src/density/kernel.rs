use rayon::prelude::*;

use super::{DensityField, EstimatorInfo};
use crate::data::{squared_euclidean, PointSet};
use crate::{Error, Result, Scalar};

/// Gaussian kernel density per point, leaving the point itself out, scaled
/// so the densest point gets `beta`.
///
/// `raw_t = sum_{j != t} exp(-|x_t - x_j|^2 / (2 h^2))`, `d_t = beta * raw_t / max raw`.
/// If every raw sum underflows to zero all points get `beta`.
pub fn kernel_density<T: Scalar>(points: &PointSet<T>, bandwidth: T, beta: T) -> Result<DensityField<T>> {
    let n = points.len();
    if n < 2 {
        return Err(Error::validation("points", "kernel density needs at least 2 points"));
    }
    if !(bandwidth > T::zero() && bandwidth.is_finite()) {
        return Err(Error::validation("bandwidth", format!("must be positive, got {bandwidth}")));
    }
    if !(beta > T::zero() && beta.is_finite()) {
        return Err(Error::validation("beta", format!("must be positive, got {beta}")));
    }
    let two_h2 = T::lit(2.0) * bandwidth * bandwidth;
    let raw: Vec<T> = (0..n)
        .into_par_iter()
        .map(|t| {
            let row = points.row(t);
            (0..n)
                .filter(|&j| j != t)
                .map(|j| (-squared_euclidean(row, points.row(j)) / two_h2).exp())
                .sum()
        })
        .collect();
    let max = raw.iter().fold(T::zero(), |m, &r| m.max(r));
    let values = if max > T::zero() {
        raw.iter().map(|&r| beta * (r / max)).collect()
    } else {
        vec![beta; n]
    };
    Ok(DensityField {
        values,
        beta,
        tau: None,
        estimator: EstimatorInfo::Kernel {
            bandwidth: bandwidth.to_f64_lossy(),
        },
    }
    .floored())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_pair() {
        let ps = PointSet::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let f = kernel_density(&ps, 0.5, 2.0).unwrap();
        assert_eq!(f.values[0], f.values[1]);
        assert_eq!(f.values[0], 2.0);
    }

    #[test]
    fn outlier_is_least_dense() {
        let mut rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 * 1e-3, 0.0]).collect();
        rows.push(vec![3.0, 3.0]);
        let ps = PointSet::from_rows(&rows).unwrap();
        let f = kernel_density(&ps, 1.0, 1.0).unwrap();
        let min = f.values.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(f.values[10], min);
        assert!(f.values[..10].iter().all(|&v| v > min));
    }

    #[test]
    fn rejects_bad_inputs() {
        let one = PointSet::from_rows(&[vec![0.0]]).unwrap();
        assert!(kernel_density(&one, 1.0, 1.0).is_err());
        let two = PointSet::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(kernel_density(&two, 0.0, 1.0).is_err());
    }
}
