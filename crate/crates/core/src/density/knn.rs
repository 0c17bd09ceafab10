use rayon::prelude::*;

use super::{default_beta, default_tau, DensityField, ErrorNormalization, EstimatorInfo};
use crate::data::{Metric, PointSet};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct KnnOptions<T> {
    pub k: usize,
    pub metric: Metric,
    pub beta: T,
    pub tau: T,
    pub normalization: ErrorNormalization,
    /// Per-dimension periods. When set, coordinate differences wrap around,
    /// which removes boundary effects on lattice-like data.
    pub torus: Option<Vec<T>>,
}

impl<T: Scalar> KnnOptions<T> {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            metric: Metric::Euclidean,
            beta: T::lit(default_beta()),
            tau: T::lit(default_tau()),
            normalization: ErrorNormalization::MinMax,
            torus: None,
        }
    }
}

fn torus_sq<T: Scalar>(a: &[T], b: &[T], periods: &[T]) -> T {
    a.iter()
        .zip(b)
        .zip(periods)
        .map(|((&x, &y), &p)| {
            let d = (x - y).abs() % p;
            let d = d.min(p - d);
            d * d
        })
        .sum()
}

/// Density from the mean distance to the `k` nearest other points.
pub fn knn_density<T: Scalar>(points: &PointSet<T>, opts: &KnnOptions<T>) -> Result<DensityField<T>> {
    let n = points.len();
    if opts.k == 0 || opts.k >= n {
        return Err(Error::validation(
            "k_neighbors",
            format!("must satisfy 1 <= k < n = {n}, got {}", opts.k),
        ));
    }
    if let Some(p) = &opts.torus {
        if p.len() != points.dim() || p.iter().any(|&x| !(x > T::zero())) {
            return Err(Error::validation("torus", "needs one positive period per dimension"));
        }
    }
    let k = opts.k;
    let errors: Vec<T> = (0..n)
        .into_par_iter()
        .map(|t| {
            let row = points.row(t);
            let mut dists: Vec<T> = (0..n)
                .filter(|&j| j != t)
                .map(|j| {
                    let other = points.row(j);
                    match &opts.torus {
                        None => opts.metric.eval(row, other),
                        Some(periods) => {
                            let sq = torus_sq(row, other, periods);
                            match opts.metric {
                                Metric::Euclidean => sq.sqrt(),
                                Metric::SquaredEuclidean => sq,
                            }
                        }
                    }
                })
                .collect();
            dists.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).expect("finite"));
            let nearest = &mut dists[..k];
            nearest.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
            nearest.iter().copied().sum::<T>() / T::lit(k as f64)
        })
        .collect();
    DensityField::from_errors(
        errors,
        opts.beta,
        opts.tau,
        opts.normalization,
        EstimatorInfo::Knn {
            k,
            metric: opts.metric,
            normalization: opts.normalization,
            torus: opts.torus.is_some(),
        },
    )
}
