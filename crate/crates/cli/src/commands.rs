use std::collections::HashSet;
use std::fs::File;

use serde::Serialize;

use dacs_core::coverage::BoundReport;
use dacs_core::density::{calibrate, CalibrationReport, DensityField};
use dacs_core::evaluation::{compare_algorithms, evaluate_selection};
use dacs_core::generate::GeneratorSpec;
use dacs_core::io::{load_pointset, save_pointset, write_density};
use dacs_core::selection::{
    density_aware_greedy, k_center_greedy, run_rounds, Algorithm, EstimatorConfig, ScoreMap,
};
use dacs_core::{ComparisonReportF64, LabeledPointSetF64};

use crate::config::{DatasetSource, ExperimentConfig, SelectionSource};
use crate::error::CliError;
use crate::report::Output;

/// Non-fatal conditions. Any entry turns the exit code into 3.
#[derive(Debug, Default)]
pub struct Outcome {
    pub warnings: Vec<String>,
}

struct Loaded {
    data: LabeledPointSetF64,
    scores: Option<Vec<f64>>,
}

fn load_dataset(cfg: &ExperimentConfig, outcome: &mut Outcome) -> Result<Loaded, CliError> {
    match ExperimentConfig::require(&cfg.dataset, "dataset")? {
        DatasetSource::Generate(spec) => Ok(Loaded {
            data: spec.generate()?,
            scores: None,
        }),
        DatasetSource::File(path) => {
            let ds = load_pointset::<f64>(path)?;
            if ds.label_defaulted {
                outcome
                    .warnings
                    .push(format!("{} has no label column; every label set to 1", path.display()));
            }
            Ok(Loaded {
                data: ds.data,
                scores: ds.scores,
            })
        }
    }
}

fn generator(cfg: &ExperimentConfig, command: &str) -> Result<GeneratorSpec, CliError> {
    match ExperimentConfig::require(&cfg.dataset, "dataset")? {
        DatasetSource::Generate(spec) => Ok(spec.clone()),
        DatasetSource::File(_) => Err(CliError::Invalid(format!("{command} needs `dataset.generate`"))),
    }
}

/// Dataset indices named by the selection source, in file order.
fn selected_indices(source: &SelectionSource, data: &LabeledPointSetF64) -> Result<Vec<usize>, CliError> {
    let path = match source {
        SelectionSource::All => return Ok((0..data.len()).collect()),
        SelectionSource::File(p) => p,
    };
    let file = File::open(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let column = rdr
        .headers()
        .map_err(dacs_core::Error::from)?
        .iter()
        .position(|h| h == "id")
        .ok_or_else(|| CliError::Invalid(format!("{}: no `id` column", path.display())))?;
    let mut ids = Vec::new();
    let mut seen = HashSet::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(dacs_core::Error::from)?;
        let raw = record.get(column).unwrap_or("");
        let id: u64 = raw
            .parse()
            .map_err(|_| CliError::Invalid(format!("{}:{}: invalid id `{raw}`", path.display(), line + 2)))?;
        if !seen.insert(id) {
            return Err(CliError::Invalid(format!("{}: id {id} listed twice", path.display())));
        }
        ids.push(id);
    }
    data.points.indices_of(&ids).map_err(|e| {
        CliError::Invalid(format!("selection {} does not match the dataset: {e}", path.display()))
    })
}

fn radius_field(r: f64) -> String {
    if r.is_nan() {
        String::new()
    } else {
        r.to_string()
    }
}

pub fn generate(cfg: &ExperimentConfig, out: &Output) -> Result<Outcome, CliError> {
    let spec = generator(cfg, "generate")?;
    let data: LabeledPointSetF64 = spec.generate()?;
    let path = out.path("dataset.csv");
    save_pointset(&path, &data, None)?;
    println!(
        "wrote {}: n = {}, D = {}, class counts {:?}",
        path.display(),
        data.len(),
        data.points.dim(),
        data.class_counts()
    );
    Ok(Outcome::default())
}

#[derive(Serialize)]
struct RoundBounds<'a> {
    round: usize,
    algorithm: Algorithm,
    new_picks: usize,
    report: &'a BoundReport<f64>,
}

pub fn select(cfg: &ExperimentConfig, out: &Output) -> Result<Outcome, CliError> {
    let mut outcome = Outcome::default();
    let protocol = ExperimentConfig::require(&cfg.protocol, "protocol")?;
    protocol.validate()?;
    let loaded = load_dataset(cfg, &mut outcome)?;
    let scores = loaded.scores.map(ScoreMap::scores).transpose()?;
    let data = &loaded.data;
    let run = run_rounds(data, scores.as_ref(), protocol, cfg.metric(), &cfg.bounds)?;
    let ids = data.points.ids();

    let mut all = csv::Writer::from_writer(Vec::new());
    all.write_record(["round", "order", "id", "radius_at_pick"]).map_err(dacs_core::Error::from)?;
    for r in &run.rounds {
        let round = r.round + 1;
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(["round", "order", "id", "radius_at_pick"]).map_err(dacs_core::Error::from)?;
        for (order, pick) in r.state.picks.iter().enumerate() {
            let row = [
                round.to_string(),
                (order + 1).to_string(),
                ids[pick.index].to_string(),
                radius_field(pick.radius),
            ];
            wtr.write_record(&row).map_err(dacs_core::Error::from)?;
            all.write_record(&row).map_err(dacs_core::Error::from)?;
        }
        let bytes = wtr.into_inner().expect("in-memory writer");
        out.bytes(&format!("selection_round_{round}.csv"), &bytes)?;
        out.json(
            &format!("bounds_round_{round}.json"),
            &RoundBounds {
                round,
                algorithm: protocol.algorithm,
                new_picks: r.state.picks.len(),
                report: &r.report,
            },
        )?;
        if let Some(field) = &r.densities {
            let pool_ids: Vec<u64> = r.pool.iter().map(|&t| ids[t]).collect();
            let mut buf = Vec::new();
            write_density(&mut buf, &pool_ids, field)?;
            out.bytes(&format!("density_round_{round}.csv"), &buf)?;
        }
        println!(
            "round {round}: +{} points, delta {:.6}, max radial {:.6}, tight bound {:.6}",
            r.state.picks.len(),
            r.report.delta,
            r.report.max_radial,
            r.report.tight_bound_value
        );
    }
    out.bytes("selection.csv", &all.into_inner().expect("in-memory writer"))?;
    if run.exhausted {
        outcome.warnings.push(format!(
            "the candidate pool ran out: {} of {} requested points selected",
            run.selected().len(),
            protocol.rounds * protocol.budget
        ));
    }
    Ok(outcome)
}

#[derive(Serialize)]
struct Evaluation<'a> {
    selected_count: usize,
    core_set_loss: f64,
    report: &'a BoundReport<f64>,
}

pub fn evaluate(cfg: &ExperimentConfig, out: &Output) -> Result<Outcome, CliError> {
    let mut outcome = Outcome::default();
    let loaded = load_dataset(cfg, &mut outcome)?;
    let source = ExperimentConfig::require(&cfg.selection, "selection")?;
    let selected = selected_indices(source, &loaded.data)?;
    let (report, loss) = evaluate_selection(&loaded.data, &selected, cfg.metric(), &cfg.bounds)?;
    let path = out.json(
        "evaluation.json",
        &Evaluation {
            selected_count: selected.len(),
            core_set_loss: loss,
            report: &report,
        },
    )?;
    println!(
        "{} selected of {}: delta {:.6}, max radial {:.6}, core-set loss {:.6} -> {}",
        selected.len(),
        loaded.data.len(),
        report.delta,
        report.max_radial,
        loss,
        path.display()
    );
    Ok(outcome)
}

#[derive(Serialize)]
struct Calibration<'a> {
    estimator: &'a EstimatorConfig,
    selection: &'static str,
    selected_ids: Vec<u64>,
    report: &'a CalibrationReport<f64>,
}

pub fn calibrate_cmd(cfg: &ExperimentConfig, out: &Output) -> Result<Outcome, CliError> {
    let mut outcome = Outcome::default();
    let loaded = load_dataset(cfg, &mut outcome)?;
    let estimator = ExperimentConfig::require(&cfg.estimator, "estimator")?;
    let section = cfg.calibration.clone().unwrap_or_default();
    let points = &loaded.data.points;
    let field: DensityField<f64> = estimator.estimate(points)?;
    let (selection, label) = match &cfg.selection {
        Some(source) => (selected_indices(source, &loaded.data)?, "file"),
        None => match section.algorithm {
            Algorithm::KCenter => (k_center_greedy(points, &[], section.budget)?.selected, "k-center"),
            Algorithm::DensityAware => (
                density_aware_greedy(points, &field, &[], section.budget)?.selected,
                "density-aware",
            ),
            other => {
                return Err(CliError::Invalid(format!(
                    "calibration.algorithm must be k-center or density-aware, got {}",
                    other.name()
                )))
            }
        },
    };
    let report = calibrate(points, &field, &selection, cfg.metric(), cfg.bounds.radial_mode, section.bins)?;
    let mut buf = Vec::new();
    write_density(&mut buf, points.ids(), &field)?;
    out.bytes("density.csv", &buf)?;
    let path = out.json(
        "calibration.json",
        &Calibration {
            estimator,
            selection: label,
            selected_ids: selection.iter().map(|&t| points.ids()[t]).collect(),
            report: &report,
        },
    )?;
    println!(
        "R^2 {:.4}, spearman {:.4}{} over {} selected points -> {}",
        report.r_squared,
        report.spearman,
        if report.degenerate { " (degenerate)" } else { "" },
        selection.len(),
        path.display()
    );
    Ok(outcome)
}

#[derive(Serialize)]
struct Comparison<'a> {
    report: &'a ComparisonReportF64,
}

pub fn compare(cfg: &ExperimentConfig, out: &Output) -> Result<Outcome, CliError> {
    let spec = generator(cfg, "compare")?;
    let section = ExperimentConfig::require(&cfg.compare, "compare")?;
    let estimator = cfg.estimator.clone().unwrap_or_else(|| EstimatorConfig::knn(10));
    let seeds = compare_seeds(cfg)?;
    let report: ComparisonReportF64 = compare_algorithms(
        &spec,
        section.budget,
        section.rounds,
        &seeds,
        &estimator,
        cfg.metric(),
        &cfg.bounds,
    )?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    out.bytes("comparison.csv", &csv)?;
    let path = out.json("comparison.json", &Comparison { report: &report })?;
    for s in &report.summaries {
        println!(
            "{:>13}: mean delta {:.6}, mean max radial {:.6}, mean loss {:.6}",
            s.algorithm.name(),
            s.mean_delta,
            s.mean_max_radial,
            s.mean_loss
        );
    }
    println!(
        "density-aware wins: max radial {:.0}%, loss {:.0}% of {} seeds -> {}",
        100.0 * report.win_rate_max_radial,
        100.0 * report.win_rate_loss,
        seeds.len(),
        path.display()
    );
    Ok(Outcome::default())
}

/// `--seed` (or a top-level `seed`) narrows the comparison to that one seed.
pub fn compare_seeds(cfg: &ExperimentConfig) -> Result<Vec<u64>, CliError> {
    let section = ExperimentConfig::require(&cfg.compare, "compare")?;
    Ok(match cfg.seed {
        Some(seed) => vec![seed],
        None => section.seeds.clone(),
    })
}
