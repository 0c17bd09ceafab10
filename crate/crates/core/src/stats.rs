//! Small descriptive statistics used by the calibration and comparison reports.

use serde::Serialize;

use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit<T> {
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
    /// Set when either variable has zero variance; `r_squared` is then 0.
    pub degenerate: bool,
}

pub fn mean<T: Scalar>(xs: &[T]) -> T {
    xs.iter().copied().sum::<T>() / T::lit(xs.len() as f64)
}

/// Sample standard deviation (`n - 1` denominator); zero for fewer than two values.
pub fn sample_std<T: Scalar>(xs: &[T]) -> T {
    if xs.len() < 2 {
        return T::zero();
    }
    let m = mean(xs);
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    (ss / T::lit((xs.len() - 1) as f64)).sqrt()
}

/// Ordinary least squares of `ys` on `xs`.
pub fn linear_regression<T: Scalar>(xs: &[T], ys: &[T]) -> LinearFit<T> {
    assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    let (sxx, sxy, syy) = xs.iter().zip(ys).fold(
        (T::zero(), T::zero(), T::zero()),
        |(sxx, sxy, syy), (&x, &y)| {
            let (dx, dy) = (x - mx, y - my);
            (sxx + dx * dx, sxy + dx * dy, syy + dy * dy)
        },
    );
    if sxx == T::zero() || syy == T::zero() {
        let slope = if sxx == T::zero() { T::zero() } else { sxy / sxx };
        return LinearFit {
            slope,
            intercept: my - slope * mx,
            r_squared: T::zero(),
            degenerate: true,
        };
    }
    let slope = sxy / sxx;
    let r_squared = (sxy * sxy / (sxx * syy)).min(T::one()).max(T::zero());
    LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        degenerate: false,
    }
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn ranks<T: Scalar>(xs: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("finite values"));
    let mut out = vec![T::zero(); xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        let avg = T::lit((start + end + 1) as f64 / 2.0);
        for &i in &order[start..end] {
            out[i] = avg;
        }
        start = end;
    }
    out
}

/// Pearson correlation; zero when either side has no variance.
pub fn pearson<T: Scalar>(xs: &[T], ys: &[T]) -> T {
    let mx = mean(xs);
    let my = mean(ys);
    let (sxx, sxy, syy) = xs.iter().zip(ys).fold(
        (T::zero(), T::zero(), T::zero()),
        |(sxx, sxy, syy), (&x, &y)| {
            let (dx, dy) = (x - mx, y - my);
            (sxx + dx * dx, sxy + dx * dy, syy + dy * dy)
        },
    );
    if sxx == T::zero() || syy == T::zero() {
        return T::zero();
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).max(-T::one()).min(T::one())
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman<T: Scalar>(xs: &[T], ys: &[T]) -> T {
    pearson(&ranks(xs), &ranks(ys))
}
