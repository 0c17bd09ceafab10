use serde::Serialize;

use super::DensityField;
use crate::coverage::{assign_coverage, RadialMode};
use crate::data::{Metric, PointSet};
use crate::stats::{linear_regression, spearman};
use crate::{Error, Result, Scalar};

pub const DEFAULT_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationPair<T> {
    pub index: usize,
    pub id: u64,
    pub density: T,
    pub inverse_density: T,
    pub radial: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityBin<T> {
    pub lower: T,
    pub upper: T,
    pub count: usize,
    /// `None` for empty bins.
    pub mean_radial: Option<T>,
}

/// How well densities track the average radial distance of a selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport<T> {
    pub metric: Metric,
    pub radial_mode: RadialMode,
    /// R^2 of the least-squares fit of radial distance on inverse density.
    pub r_squared: T,
    pub slope: T,
    pub intercept: T,
    /// Spearman correlation between density and radial distance.
    pub spearman: T,
    /// Set when densities (or radial distances) do not vary.
    pub degenerate: bool,
    pub bins: Vec<DensityBin<T>>,
    pub pairs: Vec<CalibrationPair<T>>,
}

/// Regresses the average radial distance of each selected point on its
/// inverse density and bins radial distance by density.
pub fn calibrate<T: Scalar>(
    points: &PointSet<T>,
    densities: &DensityField<T>,
    selection: &[usize],
    metric: Metric,
    mode: RadialMode,
    bins: usize,
) -> Result<CalibrationReport<T>> {
    if selection.len() < 3 {
        return Err(Error::validation(
            "selection",
            format!("calibration needs at least 3 selected points, got {}", selection.len()),
        ));
    }
    if densities.len() != points.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            actual: densities.len(),
        });
    }
    if bins == 0 {
        return Err(Error::validation("bins", "must be at least 1"));
    }
    let cov = assign_coverage(points, selection, metric)?;
    let radial = cov.radial_distances(mode);
    let pairs: Vec<CalibrationPair<T>> = selection
        .iter()
        .zip(&radial)
        .map(|(&k, &r)| {
            let d = densities.values[k];
            CalibrationPair {
                index: k,
                id: points.ids()[k],
                density: d,
                inverse_density: T::one() / d,
                radial: r,
            }
        })
        .collect();
    let inv: Vec<T> = pairs.iter().map(|p| p.inverse_density).collect();
    let dens: Vec<T> = pairs.iter().map(|p| p.density).collect();
    let fit = linear_regression(&inv, &radial);
    Ok(CalibrationReport {
        metric,
        radial_mode: mode,
        r_squared: fit.r_squared,
        slope: fit.slope,
        intercept: fit.intercept,
        spearman: spearman(&dens, &radial),
        degenerate: fit.degenerate,
        bins: bin_by_density(&pairs, bins),
        pairs,
    })
}

fn bin_by_density<T: Scalar>(pairs: &[CalibrationPair<T>], bins: usize) -> Vec<DensityBin<T>> {
    let (lo, hi) = pairs.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), p| {
        (lo.min(p.density), hi.max(p.density))
    });
    if hi == lo {
        let mean = pairs.iter().map(|p| p.radial).sum::<T>() / T::lit(pairs.len() as f64);
        return vec![DensityBin {
            lower: lo,
            upper: hi,
            count: pairs.len(),
            mean_radial: Some(mean),
        }];
    }
    let width = (hi - lo) / T::lit(bins as f64);
    let mut sums = vec![(T::zero(), 0usize); bins];
    for p in pairs {
        let slot = ((p.density - lo) / width).floor().to_usize().unwrap_or(0).min(bins - 1);
        sums[slot].0 = sums[slot].0 + p.radial;
        sums[slot].1 += 1;
    }
    sums.into_iter()
        .enumerate()
        .map(|(b, (sum, count))| DensityBin {
            lower: lo + width * T::lit(b as f64),
            upper: if b + 1 == bins { hi } else { lo + width * T::lit((b + 1) as f64) },
            count,
            mean_radial: (count > 0).then(|| sum / T::lit(count as f64)),
        })
        .collect()
}
