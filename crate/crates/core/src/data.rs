//! Point-set and feature-grid containers and distance metrics.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Distance used for a computation. Bound quantities are reported in the
/// Euclidean norm; the greedy selectors work on squared Euclidean distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    #[default]
    Euclidean,
    #[serde(alias = "squared")]
    SquaredEuclidean,
}

impl Metric {
    /// Evaluates the metric on equal-length slices. Lengths are not checked.
    #[inline]
    pub fn eval<T: Scalar>(self, a: &[T], b: &[T]) -> T {
        let sq = squared_euclidean(a, b);
        match self {
            Metric::Euclidean => sq.sqrt(),
            Metric::SquaredEuclidean => sq,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::SquaredEuclidean => "squared-euclidean",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "squared" | "squared-euclidean" => Ok(Metric::SquaredEuclidean),
            other => Err(Error::validation(
                "metric",
                format!("unknown metric `{other}` (expected euclidean or squared)"),
            )),
        }
    }
}

#[inline]
pub fn squared_euclidean<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
}

/// Checked distance between two feature vectors.
pub fn distance<T: Scalar>(a: &[T], b: &[T], metric: Metric) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(metric.eval(a, b))
}

/// `n` feature vectors of dimension `D`, stored row-major, with stable ids.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet<T> {
    features: Vec<T>,
    dim: usize,
    ids: Vec<u64>,
}

impl<T: Scalar> PointSet<T> {
    /// Builds a point set from a flat row-major buffer.
    pub fn from_flat(dim: usize, features: Vec<T>, ids: Vec<u64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("dim", "must be at least 1"));
        }
        if ids.is_empty() {
            return Err(Error::validation("points", "at least one point is required"));
        }
        if features.len() != dim * ids.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * ids.len(),
                actual: features.len(),
            });
        }
        if let Some(pos) = features.iter().position(|x| !x.is_finite()) {
            return Err(Error::validation(
                "features",
                format!("non-finite value in row with id {}", ids[pos / dim]),
            ));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for &id in &ids {
            if !seen.insert(id) {
                return Err(Error::DuplicateId { id });
            }
        }
        Ok(Self { features, dim, ids })
    }

    /// Builds a point set from rows, with ids `0..n`.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut features = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            features.extend_from_slice(row);
        }
        Self::from_flat(dim, features, (0..rows.len() as u64).collect())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.features.chunks_exact(self.dim)
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn features(&self) -> &[T] {
        &self.features
    }

    /// Distance between rows `i` and `j`.
    #[inline]
    pub fn dist(&self, i: usize, j: usize, metric: Metric) -> T {
        metric.eval(self.row(i), self.row(j))
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<()> {
        if index < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index,
                len: self.len(),
            })
        }
    }

    /// Maps ids back to row indices.
    pub fn indices_of(&self, ids: &[u64]) -> Result<Vec<usize>> {
        let lookup: std::collections::HashMap<u64, usize> =
            self.ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        ids.iter()
            .map(|id| {
                lookup.get(id).copied().ok_or_else(|| {
                    Error::validation("selection", format!("id {id} not present in dataset"))
                })
            })
            .collect()
    }

    /// The rows at `indices`, in that order, keeping their ids.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut ids = Vec::with_capacity(indices.len());
        for &i in indices {
            self.check_index(i)?;
            features.extend_from_slice(self.row(i));
            ids.push(self.ids[i]);
        }
        Self::from_flat(self.dim, features, ids)
    }

    /// Scales every row to unit Euclidean length.
    pub fn normalize(&self) -> Result<Self> {
        let mut features = self.features.clone();
        for (i, row) in features.chunks_exact_mut(self.dim).enumerate() {
            let norm = row.iter().map(|&x| x * x).sum::<T>().sqrt();
            if norm == T::zero() {
                return Err(Error::ZeroRow { id: self.ids[i] });
            }
            row.iter_mut().for_each(|x| *x = *x / norm);
        }
        Ok(Self {
            features,
            dim: self.dim,
            ids: self.ids.clone(),
        })
    }

    /// Converts to another scalar type.
    pub fn cast<U: Scalar>(&self) -> PointSet<U> {
        PointSet {
            features: self
                .features
                .iter()
                .map(|&x| U::lit(x.to_f64_lossy()))
                .collect(),
            dim: self.dim,
            ids: self.ids.clone(),
        }
    }
}

/// A point set with class labels in `1..=num_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPointSet<T> {
    pub points: PointSet<T>,
    labels: Vec<u32>,
    num_classes: u32,
}

impl<T: Scalar> LabeledPointSet<T> {
    pub fn new(points: PointSet<T>, labels: Vec<u32>, num_classes: u32) -> Result<Self> {
        if labels.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                actual: labels.len(),
            });
        }
        if num_classes == 0 {
            return Err(Error::validation("num_classes", "must be at least 1"));
        }
        if let Some(pos) = labels.iter().position(|&l| l == 0 || l > num_classes) {
            return Err(Error::validation(
                "label",
                format!(
                    "label {} of id {} outside 1..={num_classes}",
                    labels[pos],
                    points.ids()[pos]
                ),
            ));
        }
        Ok(Self {
            points,
            labels,
            num_classes,
        })
    }

    /// Labels are taken as given; `num_classes` is their maximum.
    pub fn from_labels(points: PointSet<T>, labels: Vec<u32>) -> Result<Self> {
        let c = labels.iter().copied().max().unwrap_or(1).max(1);
        Self::new(points, labels, c)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn num_classes(&self) -> u32 {
        self.num_classes
    }

    /// Point count per class, index 0 holding class 1.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes as usize];
        for &l in &self.labels {
            counts[(l - 1) as usize] += 1;
        }
        counts
    }

    pub fn normalize(&self) -> Result<Self> {
        Ok(Self {
            points: self.points.normalize()?,
            labels: self.labels.clone(),
            num_classes: self.num_classes,
        })
    }
}

/// An `H x W` grid of `D`-channel features, stored `[i][j][channel]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid<T> {
    height: usize,
    width: usize,
    channels: usize,
    values: Vec<T>,
}

impl<T: Scalar> FeatureGrid<T> {
    pub fn new(height: usize, width: usize, channels: usize, values: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::validation("grid", "height, width and channels must be positive"));
        }
        if values.len() != height * width * channels {
            return Err(Error::DimensionMismatch {
                expected: height * width * channels,
                actual: values.len(),
            });
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("grid", "non-finite value"));
        }
        Ok(Self {
            height,
            width,
            channels,
            values,
        })
    }

    /// Reads a point set as a row-major grid: point `i * width + j` is pixel `(i, j)`.
    pub fn from_point_set(points: &PointSet<T>, height: usize, width: usize) -> Result<Self> {
        if points.len() != height * width {
            return Err(Error::validation(
                "grid",
                format!(
                    "{} points cannot form a {height}x{width} grid",
                    points.len()
                ),
            ));
        }
        Self::new(height, width, points.dim(), points.features().to_vec())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &[T] {
        let start = (i * self.width + j) * self.channels;
        &self.values[start..start + self.channels]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        let a = [0.0, 0.0];
        let b = [3.0, 4.0];
        assert_eq!(distance(&a, &b, Metric::Euclidean).unwrap(), 5.0);
        assert_eq!(distance(&a, &b, Metric::SquaredEuclidean).unwrap(), 25.0);
        assert_eq!(distance(&b, &b, Metric::Euclidean).unwrap(), 0.0);
        assert_eq!(distance(&b, &b, Metric::SquaredEuclidean).unwrap(), 0.0);
        assert!(matches!(
            distance(&a, &[1.0], Metric::Euclidean),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn normalize_examples() {
        let ps = PointSet::from_rows(&[vec![3.0f64, 4.0], vec![1.0, 0.0]]).unwrap();
        let unit = ps.normalize().unwrap();
        assert!((unit.row(0)[0] - 0.6).abs() < 1e-12);
        assert!((unit.row(0)[1] - 0.8).abs() < 1e-12);
        assert_eq!(unit.row(1), &[1.0, 0.0]);
        let again = unit.normalize().unwrap();
        for (a, b) in unit.features().iter().zip(again.features()) {
            assert!((a - b).abs() < 1e-12);
        }

        let bad = PointSet::from_flat(2, vec![1.0, 1.0, 0.0, 0.0], vec![10, 11]).unwrap();
        assert!(matches!(bad.normalize(), Err(Error::ZeroRow { id: 11 })));
    }

    #[test]
    fn rejects_duplicates_and_non_finite() {
        assert!(matches!(
            PointSet::from_flat(1, vec![1.0, 2.0], vec![4, 4]),
            Err(Error::DuplicateId { id: 4 })
        ));
        assert!(PointSet::from_flat(1, vec![f64::NAN], vec![0]).is_err());
        assert!(PointSet::<f64>::from_flat(1, vec![], vec![]).is_err());
    }

    #[test]
    fn labels_must_be_in_range() {
        let ps = PointSet::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(LabeledPointSet::new(ps.clone(), vec![1, 3], 2).is_err());
        assert!(LabeledPointSet::new(ps.clone(), vec![0, 1], 2).is_err());
        let lp = LabeledPointSet::new(ps, vec![1, 2], 2).unwrap();
        assert_eq!(lp.class_counts(), vec![1, 1]);
    }

    #[test]
    fn metric_parses_cli_names() {
        assert_eq!("squared".parse::<Metric>().unwrap(), Metric::SquaredEuclidean);
        assert_eq!("euclidean".parse::<Metric>().unwrap(), Metric::Euclidean);
        assert!("manhattan".parse::<Metric>().is_err());
    }
}
