//! Core-set loss with a plug-in learner, algorithm comparison and bound
//! ordering checks.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::{bound_report, BoundParams};
use crate::data::{LabeledPointSet, Metric, PointSet};
use crate::generate::GeneratorSpec;
use crate::rng::SplitMix64;
use crate::selection::{run_rounds, Algorithm, EstimatorConfig, ProtocolConfig};
use crate::stats::{mean, sample_std};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerKind {
    OneNearestNeighbor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    #[default]
    ZeroOne,
}

/// A learner fitted on the labeled subset. The one-nearest-neighbour rule
/// predicts the label of the closest fitted point (ties to the lowest
/// index), so it has zero loss on its own training points.
#[derive(Debug, Clone, PartialEq)]
pub struct PluginLearner<T> {
    pub kind: LearnerKind,
    fitted: Vec<usize>,
    train: PointSet<T>,
    labels: Vec<u32>,
    metric: Metric,
}

impl<T: Scalar> PluginLearner<T> {
    pub fn fit(data: &LabeledPointSet<T>, selected: &[usize], metric: Metric) -> Result<Self> {
        if selected.is_empty() {
            return Err(Error::EmptySelection);
        }
        let fitted: Vec<usize> = selected.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        if fitted.len() != selected.len() {
            return Err(Error::validation("selected", "duplicate indices"));
        }
        let train = data.points.subset(&fitted)?;
        let labels = fitted.iter().map(|&i| data.labels()[i]).collect();
        Ok(Self {
            kind: LearnerKind::OneNearestNeighbor,
            fitted,
            train,
            labels,
            metric,
        })
    }

    /// Fitted dataset indices, ascending.
    pub fn fitted(&self) -> &[usize] {
        &self.fitted
    }

    pub fn predict(&self, query: &[T]) -> u32 {
        let mut best = 0;
        let mut best_d = T::infinity();
        for (i, row) in self.train.rows().enumerate() {
            let d = self.metric.eval(query, row);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        self.labels[best]
    }
}

/// `|mean loss over all points - mean loss over the selected points|`.
pub fn core_set_loss<T: Scalar>(
    data: &LabeledPointSet<T>,
    selected: &[usize],
    learner: &PluginLearner<T>,
    loss: LossKind,
) -> Result<T> {
    let mut wanted: Vec<usize> = selected.to_vec();
    wanted.sort_unstable();
    if wanted != learner.fitted() {
        return Err(Error::validation("learner", "fitted on a different subset than the selection"));
    }
    let LossKind::ZeroOne = loss;
    let point_loss = |t: usize| -> T {
        if learner.predict(data.points.row(t)) == data.labels()[t] {
            T::zero()
        } else {
            T::one()
        }
    };
    let n = data.len();
    let all = (0..n).into_par_iter().map(point_loss).collect::<Vec<T>>().into_iter().sum::<T>() / T::lit(n as f64);
    let on_selected = selected.iter().map(|&k| point_loss(k)).sum::<T>() / T::lit(selected.len() as f64);
    Ok((all - on_selected).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmRun<T> {
    pub seed: u64,
    pub algorithm: Algorithm,
    pub delta: T,
    pub max_radial: T,
    pub loss: T,
    pub classical_bound: T,
    pub tight_bound: T,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmSummary<T> {
    pub algorithm: Algorithm,
    pub mean_delta: T,
    pub mean_max_radial: T,
    pub std_max_radial: T,
    pub mean_loss: T,
    pub mean_runtime_ms: f64,
}

/// k-center greedy against density-aware greedy over several seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport<T> {
    pub dataset: GeneratorSpec,
    pub budget: usize,
    pub rounds: usize,
    pub seeds: Vec<u64>,
    pub estimator: EstimatorConfig,
    pub metric: Metric,
    pub runs: Vec<AlgorithmRun<T>>,
    pub summaries: Vec<AlgorithmSummary<T>>,
    /// Fraction of seeds where density-aware has strictly smaller max average radial distance.
    pub win_rate_max_radial: f64,
    /// Fraction of seeds where density-aware has strictly smaller core-set loss.
    pub win_rate_loss: f64,
}

impl<T: Scalar> ComparisonReport<T> {
    pub fn summary(&self, algorithm: Algorithm) -> Option<&AlgorithmSummary<T>> {
        self.summaries.iter().find(|s| s.algorithm == algorithm)
    }

    /// Writes `seed,algorithm,delta,max_radial,loss,runtime_ms`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["seed", "algorithm", "delta", "max_radial", "loss", "runtime_ms"])?;
        for r in &self.runs {
            wtr.write_record([
                r.seed.to_string(),
                r.algorithm.name().to_string(),
                r.delta.to_string(),
                r.max_radial.to_string(),
                r.loss.to_string(),
                format!("{:.3}", r.runtime_ms),
            ])?;
        }
        wtr.flush().map_err(|source| Error::Io {
            path: "<writer>".into(),
            source,
        })?;
        Ok(())
    }
}

pub const COMPARED: [Algorithm; 2] = [Algorithm::KCenter, Algorithm::DensityAware];

/// Runs k-center greedy and density-aware greedy on freshly generated data
/// for every seed. Both start from the same bootstrap pick (index 0) and
/// spend `budget` points in each of `rounds` unfiltered rounds.
pub fn compare_algorithms<T: Scalar>(
    spec: &GeneratorSpec,
    budget: usize,
    rounds: usize,
    seeds: &[u64],
    estimator: &EstimatorConfig,
    metric: Metric,
    bounds: &BoundParams,
) -> Result<ComparisonReport<T>> {
    if seeds.is_empty() {
        return Err(Error::validation("seeds", "at least one seed is required"));
    }
    spec.validate()?;
    let per_seed: Vec<Vec<AlgorithmRun<T>>> = seeds
        .par_iter()
        .map(|&seed| {
            let data: LabeledPointSet<T> = spec.with_seed(seed).generate()?;
            COMPARED
                .iter()
                .map(|&algorithm| {
                    let config = ProtocolConfig {
                        rounds,
                        budget,
                        alpha: None,
                        algorithm,
                        estimator: Some(estimator.clone()),
                        seed,
                        normalize_features: false,
                    };
                    let start = Instant::now();
                    let run = run_rounds(&data, None, &config, metric, bounds)?;
                    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
                    let selected = run.selected();
                    let report = &run.rounds.last().expect("at least one round").report;
                    let learner = PluginLearner::fit(&data, selected, metric)?;
                    let loss = core_set_loss(&data, selected, &learner, LossKind::ZeroOne)?;
                    Ok(AlgorithmRun {
                        seed,
                        algorithm,
                        delta: report.delta,
                        max_radial: report.max_radial,
                        loss,
                        classical_bound: report.classical_bound_value,
                        tight_bound: report.tight_bound_value,
                        runtime_ms,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut wins_radial = 0usize;
    let mut wins_loss = 0usize;
    for seed_runs in &per_seed {
        let (kc, da) = (&seed_runs[0], &seed_runs[1]);
        wins_radial += usize::from(da.max_radial < kc.max_radial);
        wins_loss += usize::from(da.loss < kc.loss);
    }
    let runs: Vec<AlgorithmRun<T>> = per_seed.into_iter().flatten().collect();
    let summaries = COMPARED
        .iter()
        .map(|&algorithm| {
            let mine: Vec<&AlgorithmRun<T>> = runs.iter().filter(|r| r.algorithm == algorithm).collect();
            let pick = |f: fn(&AlgorithmRun<T>) -> T| mine.iter().map(|r| f(r)).collect::<Vec<T>>();
            let radial = pick(|r| r.max_radial);
            AlgorithmSummary {
                algorithm,
                mean_delta: mean(&pick(|r| r.delta)),
                mean_max_radial: mean(&radial),
                std_max_radial: sample_std(&radial),
                mean_loss: mean(&pick(|r| r.loss)),
                mean_runtime_ms: mine.iter().map(|r| r.runtime_ms).sum::<f64>() / mine.len() as f64,
            }
        })
        .collect();
    let s = seeds.len() as f64;
    Ok(ComparisonReport {
        dataset: spec.clone(),
        budget,
        rounds,
        seeds: seeds.to_vec(),
        estimator: estimator.clone(),
        metric,
        runs,
        summaries,
        win_rate_max_radial: wins_radial as f64 / s,
        win_rate_loss: wins_loss as f64 / s,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundOrderingReport<T> {
    pub trials: usize,
    pub violations: usize,
    /// Smallest observed `delta - max_radial`.
    pub min_gap: T,
}

/// Draws random non-empty subsets and checks that the largest average
/// radial distance never exceeds the covering radius (relative tolerance
/// `1e-12`).
pub fn verify_bound_ordering<T: Scalar>(
    points: &PointSet<T>,
    trials: usize,
    seed: u64,
    metric: Metric,
) -> Result<BoundOrderingReport<T>> {
    let mut rng = SplitMix64::new(seed);
    let n = points.len();
    let params = BoundParams {
        num_classes: Some(1),
        ..BoundParams::default()
    };
    let mut violations = 0;
    let mut min_gap = T::infinity();
    for _ in 0..trials {
        let size = 1 + rng.below(n as u64) as usize;
        let subset = rng.sample_indices(n, size);
        let cov = crate::coverage::assign_coverage(points, &subset, metric)?;
        let delta = cov.classical_radius();
        let max_radial = cov
            .radial_distances(params.radial_mode)
            .into_iter()
            .fold(T::zero(), T::max);
        if max_radial > delta + delta * T::lit(1e-12) {
            violations += 1;
        }
        min_gap = min_gap.min(delta - max_radial);
    }
    Ok(BoundOrderingReport {
        trials,
        violations,
        min_gap,
    })
}

/// Bound report for a selection given by dataset ids.
pub fn evaluate_selection<T: Scalar>(
    data: &LabeledPointSet<T>,
    selected: &[usize],
    metric: Metric,
    bounds: &BoundParams,
) -> Result<(crate::coverage::BoundReport<T>, T)> {
    let bounds = BoundParams {
        num_classes: Some(bounds.num_classes.unwrap_or(data.num_classes())),
        ..*bounds
    };
    let report = bound_report(&data.points, selected, metric, &bounds)?;
    let learner = PluginLearner::fit(data, selected, metric)?;
    let loss = core_set_loss(data, selected, &learner, LossKind::ZeroOne)?;
    Ok((report, loss))
}
