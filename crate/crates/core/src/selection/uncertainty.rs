use serde::{Deserialize, Serialize};

use crate::rng::SplitMix64;
use crate::{Error, Result, Scalar};

/// Per-candidate class probabilities or ready-made uncertainty scores.
#[derive(Debug, Clone, PartialEq)]
pub enum ScoreMap<T> {
    /// Row-major `n x classes` probability vectors.
    Probabilities { classes: usize, values: Vec<T> },
    /// One uncertainty score per candidate; larger means more uncertain.
    Scores(Vec<T>),
}

impl<T: Scalar> ScoreMap<T> {
    pub fn probabilities(classes: usize, values: Vec<T>) -> Result<Self> {
        if classes == 0 || values.len() % classes != 0 {
            return Err(Error::validation("probabilities", "length must be a multiple of the class count"));
        }
        let tol = T::lit(1e-6);
        for (i, p) in values.chunks_exact(classes).enumerate() {
            if p.iter().any(|&x| !(x >= T::zero() && x.is_finite())) {
                return Err(Error::validation("probabilities", format!("row {i} has a negative or non-finite entry")));
            }
            let sum: T = p.iter().copied().sum();
            if (sum - T::one()).abs() > tol {
                return Err(Error::validation("probabilities", format!("row {i} sums to {sum}")));
            }
        }
        Ok(Self::Probabilities { classes, values })
    }

    pub fn scores(values: Vec<T>) -> Result<Self> {
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("scores", "must be finite"));
        }
        Ok(Self::Scores(values))
    }

    pub fn len(&self) -> usize {
        match self {
            ScoreMap::Probabilities { classes, values } => values.len() / classes,
            ScoreMap::Scores(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-candidate uncertainty under `f`, or the raw scores.
    fn reduce(&self, f: impl Fn(&[T]) -> Result<T>) -> Result<Vec<T>> {
        match self {
            ScoreMap::Probabilities { classes, values } => values.chunks_exact(*classes).map(f).collect(),
            ScoreMap::Scores(v) => Ok(v.clone()),
        }
    }

    /// Margin scores (or the raw scores).
    pub fn margin_scores(&self) -> Result<Vec<T>> {
        self.reduce(margin_score)
    }

    /// Restricts to the candidates at `indices`.
    pub fn subset(&self, indices: &[usize]) -> Self {
        match self {
            ScoreMap::Probabilities { classes, values } => ScoreMap::Probabilities {
                classes: *classes,
                values: indices
                    .iter()
                    .flat_map(|&i| values[i * classes..(i + 1) * classes].iter().copied())
                    .collect(),
            },
            ScoreMap::Scores(v) => ScoreMap::Scores(indices.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// `1 - p_max + p_second`. Near 1 at the decision boundary, 0 for one-hot vectors.
pub fn margin_score<T: Scalar>(p: &[T]) -> Result<T> {
    if p.len() < 2 {
        return Err(Error::validation("probabilities", "margin needs at least 2 classes"));
    }
    let (mut first, mut second) = (T::neg_infinity(), T::neg_infinity());
    for &x in p {
        if x > first {
            second = first;
            first = x;
        } else if x > second {
            second = x;
        }
    }
    Ok(T::one() - first + second)
}

/// Shannon entropy in nats; `0 ln 0 = 0`.
pub fn entropy<T: Scalar>(p: &[T]) -> Result<T> {
    Ok(p.iter()
        .filter(|&&x| x > T::zero())
        .map(|&x| -x * x.ln())
        .sum())
}

/// The `count` entries of `eligible` with the highest score, ties to the
/// lowest index, returned in ascending index order.
pub fn top_by_score<T: Scalar>(scores: &[T], eligible: &[usize], count: usize) -> Vec<usize> {
    let mut order = eligible.to_vec();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("finite scores")
            .then(a.cmp(&b))
    });
    order.truncate(count);
    order.sort_unstable();
    order
}

/// Keeps the `min(ceil(alpha * b), n)` candidates with the highest margin score.
pub fn filter_candidates<T: Scalar>(scores: &ScoreMap<T>, alpha: f64, b: usize) -> Result<Vec<usize>> {
    if scores.is_empty() {
        return Err(Error::validation("scores", "score map is empty"));
    }
    let target = alpha * b as f64;
    if !(target >= 1.0) {
        return Err(Error::validation("alpha", format!("alpha * b must be at least 1, got {target}")));
    }
    let n = scores.len();
    let count = (target.ceil() as usize).min(n);
    let margins = scores.margin_scores()?;
    let all: Vec<usize> = (0..n).collect();
    Ok(top_by_score(&margins, &all, count))
}

/// Baseline query strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "strategy")]
pub enum Strategy {
    Entropy,
    /// `1 - (p_max - p_second)`, which ranks exactly like the margin score.
    Sconf,
    Margin,
    Random { seed: u64 },
}

/// Picks `b` candidates by the strategy's uncertainty, ascending index order.
/// Scalar score maps are ranked by their scores for every non-random strategy.
pub fn uncertainty_select<T: Scalar>(scores: &ScoreMap<T>, b: usize, strategy: Strategy) -> Result<Vec<usize>> {
    let n = scores.len();
    if b > n {
        return Err(Error::BudgetTooLarge { budget: b, available: n });
    }
    let values = match strategy {
        Strategy::Random { seed } => {
            let mut picks = SplitMix64::new(seed).sample_indices(n, b);
            picks.sort_unstable();
            return Ok(picks);
        }
        Strategy::Entropy => scores.reduce(entropy)?,
        // 1 - (max - second) is the margin score itself.
        Strategy::Sconf | Strategy::Margin => scores.margin_scores()?,
    };
    let all: Vec<usize> = (0..n).collect();
    Ok(top_by_score(&values, &all, b))
}
