use std::collections::HashSet;

use crate::data::{squared_euclidean, PointSet};
use crate::density::DensityField;
use crate::{Error, Result, Scalar};

/// One greedy pick and the (rescaled) radius it was chosen at. The bootstrap
/// pick made without prior selections has radius `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pick<T> {
    pub index: usize,
    pub radius: T,
}

/// Output of a selection run.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionState<T> {
    /// The initial set followed by the new picks in order.
    pub selected: Vec<usize>,
    pub initial_len: usize,
    /// `r_t` per point: the squared distance to the nearest selected point,
    /// divided by that point's density in density-aware mode. Entries for
    /// points outside a round's candidate pool are NaN.
    pub radii: Vec<T>,
    pub picks: Vec<Pick<T>>,
    pub round_index: usize,
    /// Fewer than the requested budget were available.
    pub exhausted: bool,
}

impl<T: Scalar> SelectionState<T> {
    pub fn budget_used(&self) -> usize {
        self.picks.len()
    }

    /// Points added by this run, in pick order.
    pub fn new_picks(&self) -> &[usize] {
        &self.selected[self.initial_len..]
    }
}

fn check_start<T: Scalar>(points: &PointSet<T>, s0: &[usize], b: usize) -> Result<()> {
    let mut seen = HashSet::with_capacity(s0.len());
    for &k in s0 {
        points.check_index(k)?;
        if !seen.insert(k) {
            return Err(Error::validation("s0", format!("index {k} appears twice")));
        }
    }
    let available = points.len() - s0.len();
    if b > available {
        return Err(Error::BudgetTooLarge { budget: b, available });
    }
    Ok(())
}

/// Farthest-first traversal: repeatedly adds the point whose distance to the
/// selected set is largest (ties to the lowest index). Radii are squared
/// Euclidean distances. With an empty `s0` the first pick is index 0 and
/// counts towards `b`.
pub fn k_center_greedy<T: Scalar>(points: &PointSet<T>, s0: &[usize], b: usize) -> Result<SelectionState<T>> {
    k_center_greedy_observed(points, s0, b, |_| {})
}

/// [`k_center_greedy`], calling `observe` with the radii after
/// initialisation and after every update.
pub fn k_center_greedy_observed<T: Scalar>(
    points: &PointSet<T>,
    s0: &[usize],
    b: usize,
    mut observe: impl FnMut(&[T]),
) -> Result<SelectionState<T>> {
    check_start(points, s0, b)?;
    let n = points.len();
    let mut min_dist = vec![T::infinity(); n];
    let mut in_set = vec![false; n];
    let mut selected = s0.to_vec();
    let mut picks = Vec::with_capacity(b);

    for &k in s0 {
        in_set[k] = true;
        let centre = points.row(k);
        for (t, m) in min_dist.iter_mut().enumerate() {
            *m = m.min(squared_euclidean(points.row(t), centre));
        }
    }
    observe(&min_dist);

    while picks.len() < b {
        let mut far = None;
        let mut far_dist = T::neg_infinity();
        for t in 0..n {
            if !in_set[t] && min_dist[t] > far_dist {
                far = Some(t);
                far_dist = min_dist[t];
            }
        }
        let u = far.expect("budget checked against available points");
        in_set[u] = true;
        selected.push(u);
        picks.push(Pick { index: u, radius: far_dist });
        let centre = points.row(u);
        for t in 0..n {
            if !in_set[t] {
                min_dist[t] = min_dist[t].min(squared_euclidean(points.row(t), centre));
            }
        }
        observe(&min_dist);
    }

    Ok(SelectionState {
        selected,
        initial_len: s0.len(),
        radii: min_dist,
        picks,
        round_index: 0,
        exhausted: false,
    })
}

/// Density-aware greedy selection.
///
/// Radii start as `r_t = min_{k in s0} |f_t - f_k|^2 / d_k`. Each step picks
/// `u = argmax_{t not in s} r_t` (ties to the lowest index), adds it, and
/// lowers `r_t = min(r_t, |f_t - f_u|^2 / d_u)` for every unselected `t`.
/// With an empty `s0` the first pick is index 0 and counts towards `b`.
pub fn density_aware_greedy<T: Scalar>(
    points: &PointSet<T>,
    densities: &DensityField<T>,
    s0: &[usize],
    b: usize,
) -> Result<SelectionState<T>> {
    density_aware_greedy_observed(points, densities, s0, b, |_| {})
}

/// [`density_aware_greedy`], calling `observe` with the radii after
/// initialisation and after every update.
pub fn density_aware_greedy_observed<T: Scalar>(
    points: &PointSet<T>,
    densities: &DensityField<T>,
    s0: &[usize],
    b: usize,
    mut observe: impl FnMut(&[T]),
) -> Result<SelectionState<T>> {
    check_start(points, s0, b)?;
    let n = points.len();
    if densities.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: densities.len(),
        });
    }
    if let Some(t) = densities.values.iter().position(|d| !(*d > T::zero() && d.is_finite())) {
        return Err(Error::validation(
            "densities",
            format!("density of point {t} must be positive and finite, got {}", densities.values[t]),
        ));
    }
    let d = &densities.values;
    let mut radii = vec![T::infinity(); n];
    let mut in_set = vec![false; n];
    let mut selected = s0.to_vec();
    let mut picks = Vec::with_capacity(b);

    for &k in s0 {
        in_set[k] = true;
        let fk = points.row(k);
        for (t, r) in radii.iter_mut().enumerate() {
            *r = r.min(squared_euclidean(points.row(t), fk) / d[k]);
        }
    }
    observe(&radii);

    while picks.len() < b {
        let mut best = None;
        let mut best_r = T::neg_infinity();
        for t in 0..n {
            if !in_set[t] && radii[t] > best_r {
                best = Some(t);
                best_r = radii[t];
            }
        }
        let u = best.expect("budget checked against available points");
        in_set[u] = true;
        selected.push(u);
        picks.push(Pick { index: u, radius: best_r });
        let fu = points.row(u);
        for t in 0..n {
            if !in_set[t] {
                radii[t] = radii[t].min(squared_euclidean(points.row(t), fu) / d[u]);
            }
        }
        observe(&radii);
    }

    Ok(SelectionState {
        selected,
        initial_len: s0.len(),
        radii,
        picks,
        round_index: 0,
        exhausted: false,
    })
}
