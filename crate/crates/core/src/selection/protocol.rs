//! Multi-round active selection.
//!
//! Each round filters the unselected points to the `ceil(alpha * b)` with the
//! highest margin score (when `alpha` is set), estimates densities on the
//! pool formed by those candidates plus everything selected so far, runs the
//! configured algorithm with the earlier selections as its initial set, and
//! reports bounds for the cumulative selection over the whole dataset.
//! Filtered-out points re-enter the ranking in later rounds.

use serde::{Deserialize, Serialize};

use super::greedy::{density_aware_greedy, k_center_greedy, Pick, SelectionState};
use super::uncertainty::{top_by_score, uncertainty_select, ScoreMap, Strategy};
use crate::coverage::{bound_report, BoundParams, BoundReport};
use crate::data::{FeatureGrid, LabeledPointSet, Metric, PointSet};
use crate::density::{
    default_beta, default_tau, grid_density, kernel_density, knn_density, DensityField, ErrorNormalization,
    KnnOptions, MaskedReconstructor,
};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    KCenter,
    DensityAware,
    Random,
    Entropy,
    Sconf,
    Margin,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::KCenter => "k-center",
            Algorithm::DensityAware => "density-aware",
            Algorithm::Random => "random",
            Algorithm::Entropy => "entropy",
            Algorithm::Sconf => "sconf",
            Algorithm::Margin => "margin",
        }
    }
}

/// Density estimator and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EstimatorConfig {
    Knn {
        k: usize,
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default = "default_tau")]
        tau: f64,
        #[serde(default)]
        normalization: ErrorNormalization,
        #[serde(default)]
        metric: Metric,
    },
    Kde {
        bandwidth: f64,
        #[serde(default = "default_beta")]
        beta: f64,
    },
    /// Masked reconstruction over the point set read as a row-major
    /// `height x width` grid. Only usable when the pool is the whole grid.
    Masked {
        height: usize,
        width: usize,
        reconstructor: MaskedReconstructor,
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default = "default_tau")]
        tau: f64,
        #[serde(default)]
        normalization: ErrorNormalization,
    },
    /// The same density everywhere.
    Constant {
        #[serde(default = "default_beta")]
        value: f64,
    },
}

impl EstimatorConfig {
    pub fn knn(k: usize) -> Self {
        EstimatorConfig::Knn {
            k,
            beta: default_beta(),
            tau: default_tau(),
            normalization: ErrorNormalization::MinMax,
            metric: Metric::Euclidean,
        }
    }

    pub fn estimate<T: Scalar>(&self, points: &PointSet<T>) -> Result<DensityField<T>> {
        match self {
            EstimatorConfig::Knn {
                k,
                beta,
                tau,
                normalization,
                metric,
            } => knn_density(
                points,
                &KnnOptions {
                    k: *k,
                    metric: *metric,
                    beta: T::lit(*beta),
                    tau: T::lit(*tau),
                    normalization: *normalization,
                    torus: None,
                },
            ),
            EstimatorConfig::Kde { bandwidth, beta } => kernel_density(points, T::lit(*bandwidth), T::lit(*beta)),
            EstimatorConfig::Masked {
                height,
                width,
                reconstructor,
                beta,
                tau,
                normalization,
            } => {
                let grid = FeatureGrid::from_point_set(points, *height, *width)?;
                grid_density(&grid, reconstructor, T::lit(*beta), T::lit(*tau), *normalization)
            }
            EstimatorConfig::Constant { value } => {
                if !(*value > 0.0 && value.is_finite()) {
                    return Err(Error::validation("value", format!("must be positive, got {value}")));
                }
                Ok(DensityField::constant(points.len(), T::lit(*value)))
            }
        }
    }
}

fn default_rounds() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    /// Points added per round.
    pub budget: usize,
    /// Candidate-filter multiplier; `None` disables filtering.
    #[serde(default)]
    pub alpha: Option<f64>,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub estimator: Option<EstimatorConfig>,
    #[serde(default)]
    pub seed: u64,
    /// Scale features to unit length before selection.
    #[serde(default)]
    pub normalize_features: bool,
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::validation("rounds", "must be at least 1"));
        }
        if self.budget == 0 {
            return Err(Error::validation("budget", "must be at least 1"));
        }
        if let Some(alpha) = self.alpha {
            if !(alpha > 1.0 && alpha.is_finite()) {
                return Err(Error::validation("alpha", format!("must be finite and greater than 1, got {alpha}")));
            }
        }
        if self.algorithm == Algorithm::DensityAware && self.estimator.is_none() {
            return Err(Error::validation("estimator", "density-aware selection needs a density estimator"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundResult<T> {
    pub round: usize,
    /// Dataset indices of this round's pool, ascending.
    pub pool: Vec<usize>,
    /// Selection in dataset indices; `initial_len` counts earlier rounds.
    pub state: SelectionState<T>,
    /// Densities over `pool`, when the algorithm used them.
    pub densities: Option<DensityField<T>>,
    pub report: BoundReport<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun<T> {
    pub rounds: Vec<RoundResult<T>>,
    /// Some round could not spend its full budget.
    pub exhausted: bool,
}

impl<T: Scalar> ProtocolRun<T> {
    /// Every selected index in selection order.
    pub fn selected(&self) -> &[usize] {
        self.rounds.last().map_or(&[], |r| r.state.selected.as_slice())
    }
}

/// Runs `config.rounds` rounds of selection over `data`.
pub fn run_rounds<T: Scalar>(
    data: &LabeledPointSet<T>,
    scores: Option<&ScoreMap<T>>,
    config: &ProtocolConfig,
    metric: Metric,
    bounds: &BoundParams,
) -> Result<ProtocolRun<T>> {
    config.validate()?;
    bounds.validate()?;
    let n = data.len();
    if let Some(s) = scores {
        if s.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: s.len(),
            });
        }
    }
    let needs_scores =
        config.alpha.is_some() || matches!(config.algorithm, Algorithm::Entropy | Algorithm::Sconf | Algorithm::Margin);
    if needs_scores && scores.is_none() {
        return Err(Error::validation("scores", "candidate filtering and uncertainty strategies need scores"));
    }
    let margins = match scores {
        Some(s) if config.alpha.is_some() => Some(s.margin_scores()?),
        _ => None,
    };
    let normalized;
    let features = if config.normalize_features {
        normalized = data.points.normalize()?;
        &normalized
    } else {
        &data.points
    };
    let bounds = BoundParams {
        num_classes: Some(bounds.num_classes.unwrap_or(data.num_classes())),
        ..*bounds
    };

    let mut selected: Vec<usize> = Vec::new();
    let mut in_set = vec![false; n];
    let mut rounds = Vec::with_capacity(config.rounds);
    let mut exhausted = false;

    for round in 0..config.rounds {
        let unselected: Vec<usize> = (0..n).filter(|&t| !in_set[t]).collect();
        if unselected.is_empty() {
            exhausted = true;
            break;
        }
        let candidates = match (&margins, config.alpha) {
            (Some(m), Some(alpha)) => {
                let count = ((alpha * config.budget as f64).ceil() as usize).min(unselected.len());
                top_by_score(m, &unselected, count)
            }
            _ => unselected,
        };
        let budget = config.budget.min(candidates.len());
        if budget < config.budget {
            log::warn!(
                "round {round}: only {} candidates left for a budget of {}",
                candidates.len(),
                config.budget
            );
            exhausted = true;
        }

        let mut pool: Vec<usize> = selected.iter().copied().chain(candidates.iter().copied()).collect();
        pool.sort_unstable();
        let local_of = |t: usize| pool.binary_search(&t).expect("pool member");
        let pool_points = features.subset(&pool)?;
        let s0: Vec<usize> = selected.iter().map(|&t| local_of(t)).collect();

        let (local, densities) = match config.algorithm {
            Algorithm::KCenter => (k_center_greedy(&pool_points, &s0, budget)?, None),
            Algorithm::DensityAware => {
                let est = config.estimator.as_ref().expect("validated");
                let field = est.estimate(&pool_points)?;
                (density_aware_greedy(&pool_points, &field, &s0, budget)?, Some(field))
            }
            strategy => {
                let strategy = match strategy {
                    Algorithm::Random => Strategy::Random {
                        seed: config.seed.wrapping_add(round as u64),
                    },
                    Algorithm::Entropy => Strategy::Entropy,
                    Algorithm::Sconf => Strategy::Sconf,
                    _ => Strategy::Margin,
                };
                let cand_scores = match scores {
                    Some(s) => s.subset(&candidates),
                    None => ScoreMap::Scores(vec![T::zero(); candidates.len()]),
                };
                let picks: Vec<usize> = uncertainty_select(&cand_scores, budget, strategy)?
                    .into_iter()
                    .map(|c| local_of(candidates[c]))
                    .collect();
                let mut all = s0.clone();
                all.extend(&picks);
                let state = SelectionState {
                    selected: all,
                    initial_len: s0.len(),
                    radii: vec![T::nan(); pool.len()],
                    picks: picks
                        .iter()
                        .map(|&index| Pick { index, radius: T::nan() })
                        .collect(),
                    round_index: round,
                    exhausted: false,
                };
                (state, None)
            }
        };

        let mut radii = vec![T::nan(); n];
        for (l, &t) in pool.iter().enumerate() {
            radii[t] = local.radii[l];
        }
        let state = SelectionState {
            selected: local.selected.iter().map(|&l| pool[l]).collect(),
            initial_len: selected.len(),
            radii,
            picks: local
                .picks
                .iter()
                .map(|p| Pick {
                    index: pool[p.index],
                    radius: p.radius,
                })
                .collect(),
            round_index: round,
            exhausted: budget < config.budget,
        };
        for &t in state.new_picks() {
            in_set[t] = true;
        }
        selected = state.selected.clone();
        let report = bound_report(features, &selected, metric, &bounds)?;
        rounds.push(RoundResult {
            round,
            pool,
            state,
            densities,
            report,
        });
    }
    Ok(ProtocolRun { rounds, exhausted })
}
