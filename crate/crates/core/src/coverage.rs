//! Coverage areas and core-set loss bounds.
//!
//! Every point is assigned to its nearest selected point; the points sharing
//! a cover form that cover's coverage area. The classical covering radius is
//! the largest point-to-cover distance, the average radial distance of a
//! cover is the mean distance over its area, and the two bounds scale the
//! radius (resp. the largest average radial distance) by
//! `lambda_l + lambda_eta * L * C` before adding the Hoeffding term.

use std::collections::HashSet;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Metric, PointSet};
use crate::{Error, Result, Scalar};

/// Whether a cover's own zero distance counts towards its average radial
/// distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadialMode {
    #[default]
    Inclusive,
    Exclusive,
}

/// Nearest-selected assignment of every point.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageAssignment<T> {
    selected: Vec<usize>,
    cover: Vec<usize>,
    cover_dist: Vec<T>,
    /// Aligned with `selected`.
    areas: Vec<Vec<usize>>,
    metric: Metric,
}

/// Assigns each point to its nearest selected point. Ties go to the selected
/// point with the lowest index.
pub fn assign_coverage<T: Scalar>(
    points: &PointSet<T>,
    selected: &[usize],
    metric: Metric,
) -> Result<CoverageAssignment<T>> {
    if selected.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut seen = HashSet::with_capacity(selected.len());
    for &k in selected {
        points.check_index(k)?;
        if !seen.insert(k) {
            return Err(Error::validation("selected", format!("index {k} appears twice")));
        }
    }
    let ascending: Vec<usize> = selected.iter().copied().sorted_unstable().collect();
    let (cover, cover_dist): (Vec<usize>, Vec<T>) = (0..points.len())
        .into_par_iter()
        .map(|t| {
            let row = points.row(t);
            let mut best = ascending[0];
            let mut best_d = metric.eval(row, points.row(best));
            for &k in &ascending[1..] {
                let d = metric.eval(row, points.row(k));
                if d < best_d {
                    best = k;
                    best_d = d;
                }
            }
            (best, best_d)
        })
        .unzip();

    let slot: std::collections::HashMap<usize, usize> =
        selected.iter().enumerate().map(|(pos, &k)| (k, pos)).collect();
    let mut areas = vec![Vec::new(); selected.len()];
    for (t, &k) in cover.iter().enumerate() {
        areas[slot[&k]].push(t);
    }
    Ok(CoverageAssignment {
        selected: selected.to_vec(),
        cover,
        cover_dist,
        areas,
        metric,
    })
}

impl<T: Scalar> CoverageAssignment<T> {
    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    /// `pi(t)`: the selected index covering point `t`.
    pub fn cover_of(&self, t: usize) -> usize {
        self.cover[t]
    }

    pub fn covers(&self) -> &[usize] {
        &self.cover
    }

    /// Distance from every point to its cover.
    pub fn cover_distances(&self) -> &[T] {
        &self.cover_dist
    }

    fn slot(&self, k: usize) -> Result<usize> {
        self.selected
            .iter()
            .position(|&s| s == k)
            .ok_or(Error::NotSelected { index: k })
    }

    /// The coverage area of selected point `k`, in ascending index order.
    pub fn area(&self, k: usize) -> Result<&[usize]> {
        Ok(&self.areas[self.slot(k)?])
    }

    /// `(k, area)` pairs in selection order.
    pub fn areas(&self) -> impl Iterator<Item = (usize, &[usize])> + '_ {
        self.selected
            .iter()
            .zip(&self.areas)
            .map(|(&k, a)| (k, a.as_slice()))
    }

    /// Largest distance from any point to its cover.
    pub fn classical_radius(&self) -> T {
        self.cover_dist
            .iter()
            .fold(T::zero(), |m, &d| if d > m { d } else { m })
    }

    /// Mean distance from the points of `k`'s coverage area to `k`.
    pub fn average_radial_distance(&self, k: usize, mode: RadialMode) -> Result<T> {
        let slot = self.slot(k)?;
        Ok(self.radial_for_slot(slot, mode))
    }

    fn radial_for_slot(&self, slot: usize, mode: RadialMode) -> T {
        let k = self.selected[slot];
        let members = self.areas[slot]
            .iter()
            .filter(|&&t| mode == RadialMode::Inclusive || t != k);
        let (sum, count) = members.fold((T::zero(), 0usize), |(s, c), &t| {
            (s + self.cover_dist[t], c + 1)
        });
        if count == 0 {
            T::zero()
        } else {
            sum / T::lit(count as f64)
        }
    }

    /// Average radial distance for every selected point, in selection order.
    pub fn radial_distances(&self, mode: RadialMode) -> Vec<T> {
        (0..self.selected.len())
            .map(|slot| self.radial_for_slot(slot, mode))
            .collect()
    }
}

/// Classical covering radius of `selected` over `points`.
pub fn classical_radius<T: Scalar>(points: &PointSet<T>, selected: &[usize], metric: Metric) -> Result<T> {
    Ok(assign_coverage(points, selected, metric)?.classical_radius())
}

/// `sqrt(L^2 ln(1/gamma) / (2n))`.
pub fn hoeffding_term<T: Scalar>(loss_bound: T, gamma: T, n: usize) -> Result<T> {
    if !(loss_bound > T::zero()) {
        return Err(Error::validation("loss_bound", "must be positive"));
    }
    if !(gamma > T::zero() && gamma <= T::one()) {
        return Err(Error::validation("confidence", format!("gamma must lie in (0, 1], got {gamma}")));
    }
    if n == 0 {
        return Err(Error::validation("n", "must be at least 1"));
    }
    let two_n = T::lit(2.0 * n as f64);
    Ok((loss_bound * loss_bound * (T::one() / gamma).ln() / two_n).sqrt())
}

/// User-supplied constants entering the bounds. None of them is estimated
/// from data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundParams {
    /// Lipschitz constant of the loss.
    #[serde(default = "one")]
    pub lambda_l: f64,
    /// Lipschitz constant of the class-conditional regression function.
    #[serde(default = "one")]
    pub lambda_eta: f64,
    /// Upper bound `L` on the loss.
    #[serde(default = "one")]
    pub loss_bound: f64,
    /// Number of classes `C`; when absent the dataset's class count is used.
    #[serde(default)]
    pub num_classes: Option<u32>,
    /// `gamma`: the bounds hold with probability at least `1 - gamma`.
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default)]
    pub radial_mode: RadialMode,
}

fn one() -> f64 {
    1.0
}

fn default_confidence() -> f64 {
    0.05
}

impl Default for BoundParams {
    /// `L = 1`, `lambda_l = lambda_eta = 1`, `gamma = 0.05`. These are
    /// reporting conventions, not estimates.
    fn default() -> Self {
        Self {
            lambda_l: 1.0,
            lambda_eta: 1.0,
            loss_bound: 1.0,
            num_classes: None,
            confidence: default_confidence(),
            radial_mode: RadialMode::Inclusive,
        }
    }
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_l", self.lambda_l),
            ("lambda_eta", self.lambda_eta),
            ("loss_bound", self.loss_bound),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::validation(
                "confidence",
                format!("must lie in (0, 1), got {}", self.confidence),
            ));
        }
        if self.num_classes == Some(0) {
            return Err(Error::validation("num_classes", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialEntry<T> {
    pub index: usize,
    pub id: u64,
    pub area_size: usize,
    pub radial: T,
}

/// Classical and tightened bound values for one selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport<T> {
    pub metric: Metric,
    pub radial_mode: RadialMode,
    pub n: usize,
    pub selected_count: usize,
    pub num_classes: u32,
    pub delta: T,
    pub radial: Vec<RadialEntry<T>>,
    pub max_radial: T,
    pub hoeffding: T,
    /// `lambda_l + lambda_eta * L * C`.
    pub lipschitz_factor: T,
    pub classical_bound_value: T,
    pub tight_bound_value: T,
    pub params: BoundParams,
}

pub fn bound_report<T: Scalar>(
    points: &PointSet<T>,
    selected: &[usize],
    metric: Metric,
    params: &BoundParams,
) -> Result<BoundReport<T>> {
    params.validate()?;
    let num_classes = params
        .num_classes
        .ok_or_else(|| Error::validation("num_classes", "required for a bound report"))?;
    let cov = assign_coverage(points, selected, metric)?;
    Ok(report_from_assignment(points, &cov, params, num_classes))
}

pub(crate) fn report_from_assignment<T: Scalar>(
    points: &PointSet<T>,
    cov: &CoverageAssignment<T>,
    params: &BoundParams,
    num_classes: u32,
) -> BoundReport<T> {
    let delta = cov.classical_radius();
    let radial: Vec<RadialEntry<T>> = cov
        .areas()
        .zip(cov.radial_distances(params.radial_mode))
        .map(|((k, area), r)| RadialEntry {
            index: k,
            id: points.ids()[k],
            area_size: area.len(),
            radial: r,
        })
        .collect();
    let max_radial = radial
        .iter()
        .fold(T::zero(), |m, e| if e.radial > m { e.radial } else { m });
    assert!(
        max_radial <= delta + delta * T::lit(1e-12),
        "max average radial distance {max_radial} exceeds covering radius {delta}"
    );
    let hoeffding = hoeffding_term(
        T::lit(params.loss_bound),
        T::lit(params.confidence),
        points.len(),
    )
    .expect("validated parameters");
    let lipschitz_factor = T::lit(params.lambda_l)
        + T::lit(params.lambda_eta) * T::lit(params.loss_bound) * T::lit(num_classes as f64);
    BoundReport {
        metric: cov.metric(),
        radial_mode: params.radial_mode,
        n: points.len(),
        selected_count: cov.selected().len(),
        num_classes,
        delta,
        radial,
        max_radial,
        hoeffding,
        lipschitz_factor,
        classical_bound_value: delta * lipschitz_factor + hoeffding,
        tight_bound_value: max_radial * lipschitz_factor + hoeffding,
        params: BoundParams {
            num_classes: Some(num_classes),
            ..*params
        },
    }
}

/// Exhaustive k-center: the `b`-subset with the smallest Euclidean covering
/// radius. Subsets are enumerated in lexicographic order and only a strictly
/// smaller radius replaces the incumbent. Limited to `n <= 16`, `b <= 5`.
pub fn brute_force_k_center<T: Scalar>(points: &PointSet<T>, b: usize) -> Result<(Vec<usize>, T)> {
    let n = points.len();
    if n > 16 || b > 5 {
        return Err(Error::TooLarge {
            message: format!("n = {n}, b = {b} (limits n <= 16, b <= 5)"),
        });
    }
    if b == 0 || b > n {
        return Err(Error::BudgetTooLarge { budget: b, available: n });
    }
    let mut best: Option<(Vec<usize>, T)> = None;
    for subset in (0..n).combinations(b) {
        let radius = (0..n)
            .map(|t| {
                subset
                    .iter()
                    .map(|&k| points.dist(t, k, Metric::Euclidean))
                    .fold(T::infinity(), T::min)
            })
            .fold(T::zero(), T::max);
        if best.as_ref().is_none_or(|(_, r)| radius < *r) {
            best = Some((subset, radius));
        }
    }
    Ok(best.expect("at least one subset"))
}
