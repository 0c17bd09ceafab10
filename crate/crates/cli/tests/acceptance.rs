//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails or exceeds its time limit.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode, Stdio};
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use dacs_core::coverage::{assign_coverage, brute_force_k_center, classical_radius, BoundParams, RadialMode};
use dacs_core::data::{FeatureGrid, LabeledPointSet, Metric, PointSet};
use dacs_core::density::{
    calibrate, default_beta, default_tau, density_from_error, kernel_density, masked_reconstruction_error,
    DensityField, MaskedReconstructor,
};
use dacs_core::evaluation::{compare_algorithms, core_set_loss, verify_bound_ordering, LossKind, PluginLearner};
use dacs_core::generate::{GeneratorSpec, Layout};
use dacs_core::rng::SplitMix64;
use dacs_core::selection::{
    density_aware_greedy, density_aware_greedy_observed, k_center_greedy, k_center_greedy_observed, Algorithm,
    EstimatorConfig,
};
use dacs_core::{ComparisonReportF64, LabeledPointSetF64};

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    check: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "max average radial distance never exceeds the covering radius", limit: secs(60), check: bound_ordering },
        Criterion { id: 2, name: "k-center greedy is within 2x of the brute-force optimum", limit: secs(30), check: two_approximation },
        Criterion { id: 3, name: "density-aware beats k-center on max radial distance and loss", limit: secs(300), check: synthetic_comparison },
        Criterion { id: 4, name: "radial distance tracks inverse density", limit: secs(120), check: density_calibration },
        Criterion { id: 5, name: "constant densities reproduce k-center greedy", limit: secs(60), check: uniform_reduction },
        Criterion { id: 6, name: "scaling every density by 7.3 changes no selection", limit: secs(60), check: scale_invariance },
        Criterion { id: 7, name: "greedy radii never increase", limit: secs(60), check: radii_monotone },
        Criterion { id: 8, name: "density mapping at err = 0 and err = tau", limit: secs(10), check: density_mapping },
        Criterion { id: 9, name: "library matches naive nested-loop oracles", limit: secs(60), check: oracle_equivalence },
        Criterion { id: 10, name: "CLI reruns produce byte-identical artifacts", limit: secs(300), check: reproducibility },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.check)();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.limit => Err(format!("{detail}; exceeded {} s limit", c.limit.as_secs())),
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        if outcome.is_err() {
            failed += 1;
        }
        println!("{tag} [{:>2}] {} ({detail}) [{:.1} s]", c.id, c.name, elapsed.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_points(rng: &mut SplitMix64, n: usize, dim: usize) -> PointSet<f64> {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.uniform(-10.0, 10.0)).collect())
        .collect();
    PointSet::from_rows(&rows).expect("finite rows")
}

fn random_densities(rng: &mut SplitMix64, n: usize) -> DensityField<f64> {
    let mut field = DensityField::constant(n, 1.0);
    for d in field.values.iter_mut() {
        *d = rng.uniform(0.05, 12.0);
    }
    field
}

/// Random instance for the selection criteria: points, a budget and a start set.
fn selection_instance(rng: &mut SplitMix64) -> (PointSet<f64>, Vec<usize>, usize) {
    let n = 2 + rng.below(79) as usize;
    let dim = 1 + rng.below(6) as usize;
    let points = random_points(rng, n, dim);
    let start = rng.below(4).min(n as u64 - 1) as usize;
    let s0 = rng.sample_indices(n, start);
    let b = 1 + rng.below((n - s0.len()) as u64) as usize;
    (points, s0, b)
}

fn bound_ordering() -> Outcome {
    let mut rng = SplitMix64::new(1);
    let (mut trials, mut violations, mut min_gap) = (0, 0, f64::INFINITY);
    for dataset in 0..100 {
        let n = 2 + rng.below(499) as usize;
        let dim = 1 + rng.below(8) as usize;
        let points = random_points(&mut rng, n, dim);
        let report = verify_bound_ordering(&points, 10, dataset, Metric::Euclidean).map_err(|e| e.to_string())?;
        trials += report.trials;
        violations += report.violations;
        min_gap = min_gap.min(report.min_gap);
    }
    ensure(
        trials >= 1000 && violations == 0,
        format!("{trials} trials, {violations} violations, min gap {min_gap:.3e}"),
    )
}

fn two_approximation() -> Outcome {
    let mut rng = SplitMix64::new(2);
    let mut violations = 0;
    let mut worst = 0.0f64;
    let instances = 200;
    for _ in 0..instances {
        let n = 1 + rng.below(12) as usize;
        let dim = 1 + rng.below(4) as usize;
        let points = random_points(&mut rng, n, dim);
        let b = 1 + rng.below(4.min(n as u64)) as usize;
        let greedy = k_center_greedy(&points, &[], b).map_err(|e| e.to_string())?;
        let delta = classical_radius(&points, &greedy.selected, Metric::Euclidean).map_err(|e| e.to_string())?;
        let (_, optimum) = brute_force_k_center(&points, b).map_err(|e| e.to_string())?;
        if delta > 2.0 * optimum {
            violations += 1;
        }
        if optimum > 0.0 {
            worst = worst.max(delta / optimum);
        }
    }
    ensure(
        violations == 0,
        format!("{instances} instances, {violations} violations, worst ratio {worst:.3}"),
    )
}

fn family_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/tiered-mixture.json")
}

/// The shared synthetic family, checked against the required shape.
fn family() -> Result<GeneratorSpec, String> {
    let text = fs::read_to_string(family_path()).map_err(|e| e.to_string())?;
    let spec: GeneratorSpec = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let Layout::GaussianMixture { components } = &spec.layout else {
        return Err("family is not a Gaussian mixture".into());
    };
    let n: usize = components.iter().map(|c| c.count).sum();
    let dims: Vec<usize> = components.iter().map(|c| c.mean.len()).collect();
    let min_std = components.iter().map(|c| c.std).fold(f64::INFINITY, f64::min);
    let mut ratios: Vec<f64> = components.iter().map(|c| (c.std / min_std * 1e9).round() / 1e9).collect();
    ratios.sort_by(f64::total_cmp);
    ratios.dedup();
    if n != 2000 || dims.iter().any(|&d| d != 8) || ratios != [1.0, 3.0, 9.0] {
        return Err(format!("family shape n = {n}, std ratios {ratios:?}"));
    }
    Ok(spec)
}

fn synthetic_comparison() -> Outcome {
    let spec = family()?;
    let seeds: Vec<u64> = (0..20).collect();
    let bounds = BoundParams::default();
    let report: ComparisonReportF64 =
        compare_algorithms(&spec, 20, 1, &seeds, &EstimatorConfig::knn(10), Metric::Euclidean, &bounds)
            .map_err(|e| e.to_string())?;
    let kc = report.summary(Algorithm::KCenter).ok_or("missing k-center summary")?;
    let da = report.summary(Algorithm::DensityAware).ok_or("missing density-aware summary")?;
    let detail = format!(
        "mean max radial {:.3} vs {:.3}; loss win rate {:.0}%; mean delta {:.3} vs {:.3}; mean loss {:.3} vs {:.3}",
        da.mean_max_radial,
        kc.mean_max_radial,
        100.0 * report.win_rate_loss,
        da.mean_delta,
        kc.mean_delta,
        da.mean_loss,
        kc.mean_loss,
    );
    ensure(da.mean_max_radial < kc.mean_max_radial && report.win_rate_loss >= 0.7, detail)
}

fn density_calibration() -> Outcome {
    let spec = family()?;
    let seeds = 10;
    let (mut r2, mut rho) = (0.0, 0.0);
    for seed in 0..seeds {
        let data: LabeledPointSetF64 = spec.with_seed(seed).generate().map_err(|e| e.to_string())?;
        let field = EstimatorConfig::knn(10).estimate(&data.points).map_err(|e| e.to_string())?;
        let selection = k_center_greedy(&data.points, &[], 30).map_err(|e| e.to_string())?.selected;
        let report = calibrate(&data.points, &field, &selection, Metric::Euclidean, RadialMode::Inclusive, 10)
            .map_err(|e| e.to_string())?;
        r2 += report.r_squared / seeds as f64;
        rho += report.spearman / seeds as f64;
    }
    ensure(r2 >= 0.5 && rho <= -0.5, format!("mean R^2 {r2:.3}, mean Spearman {rho:.3} over {seeds} seeds"))
}

fn uniform_reduction() -> Outcome {
    let mut rng = SplitMix64::new(5);
    let mut mismatches = 0;
    for _ in 0..100 {
        let (points, s0, b) = selection_instance(&mut rng);
        let constant = DensityField::constant(points.len(), rng.uniform(0.05, 12.0));
        let kc = k_center_greedy(&points, &s0, b).map_err(|e| e.to_string())?;
        let da = density_aware_greedy(&points, &constant, &s0, b).map_err(|e| e.to_string())?;
        mismatches += usize::from(kc.selected != da.selected);
    }
    ensure(mismatches == 0, format!("100 instances, {mismatches} mismatches"))
}

fn scale_invariance() -> Outcome {
    let mut rng = SplitMix64::new(6);
    let mut mismatches = 0;
    for _ in 0..50 {
        let (points, s0, b) = selection_instance(&mut rng);
        let field = random_densities(&mut rng, points.len());
        let base = density_aware_greedy(&points, &field, &s0, b).map_err(|e| e.to_string())?;
        let scaled = density_aware_greedy(&points, &field.scaled(7.3), &s0, b).map_err(|e| e.to_string())?;
        mismatches += usize::from(base.selected != scaled.selected);
    }
    ensure(mismatches == 0, format!("50 instances, {mismatches} mismatches"))
}

fn increases(history: &[Vec<f64>]) -> usize {
    history
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).filter(|(before, after)| after > before).count())
        .sum()
}

fn radii_monotone() -> Outcome {
    let mut rng = SplitMix64::new(7);
    let (mut violations, mut iterations) = (0, 0);
    for _ in 0..50 {
        let (points, s0, b) = selection_instance(&mut rng);
        let field = random_densities(&mut rng, points.len());
        let mut da = Vec::new();
        density_aware_greedy_observed(&points, &field, &s0, b, |r: &[f64]| da.push(r.to_vec()))
            .map_err(|e| e.to_string())?;
        let mut kc = Vec::new();
        k_center_greedy_observed(&points, &s0, b, |r: &[f64]| kc.push(r.to_vec())).map_err(|e| e.to_string())?;
        violations += increases(&da) + increases(&kc);
        iterations += da.len() + kc.len();
    }
    ensure(violations == 0, format!("50 instances, {iterations} observed iterations, {violations} violations"))
}

fn density_mapping() -> Outcome {
    let beta = default_beta();
    let tau = default_tau();
    let reference = 2.4f64.exp();
    let at_zero = density_from_error(0.0, beta, tau).map_err(|e| e.to_string())?;
    let at_tau = density_from_error(tau, beta, tau).map_err(|e| e.to_string())?;
    let e = std::f64::consts::E;
    let ok = (at_zero - reference).abs() <= 1e-12
        && (at_zero - 11.023176380641601).abs() <= 1e-12
        && (at_tau - reference / e).abs() <= 1e-12
        && tau == 0.25;
    ensure(ok, format!("D(0) = {at_zero:.15}, D(tau) = {at_tau:.15}, tau = {tau}"))
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn nearest(points: &PointSet<f64>, selected: &[usize], t: usize) -> usize {
    let mut best = (usize::MAX, f64::INFINITY);
    for &k in selected {
        let d = euclid(points.row(t), points.row(k));
        if d < best.1 {
            best = (k, d);
        }
    }
    best.0
}

fn oracle_equivalence() -> Outcome {
    const TOL: f64 = 1e-10;
    let mut rng = SplitMix64::new(9);
    let mut worst = [0.0f64; 5];
    let instances = 25;
    for _ in 0..instances {
        let n = 3 + rng.below(60) as usize;
        let dim = 1 + rng.below(8) as usize;
        let points = random_points(&mut rng, n, dim);
        let size = 1 + rng.below(n as u64 / 2) as usize;
        let mut selected = rng.sample_indices(n, size);
        selected.sort_unstable();
        let err = |e: dacs_core::Error| e.to_string();

        let delta = (0..n)
            .map(|t| euclid(points.row(t), points.row(nearest(&points, &selected, t))))
            .fold(0.0, f64::max);
        let got = classical_radius(&points, &selected, Metric::Euclidean).map_err(err)?;
        worst[0] = worst[0].max((got - delta).abs());

        let cov = assign_coverage(&points, &selected, Metric::Euclidean).map_err(err)?;
        for &k in &selected {
            let area: Vec<usize> = (0..n).filter(|&t| nearest(&points, &selected, t) == k).collect();
            let mean = area.iter().map(|&t| euclid(points.row(t), points.row(k))).sum::<f64>() / area.len() as f64;
            let got = cov.average_radial_distance(k, RadialMode::Inclusive).map_err(err)?;
            worst[1] = worst[1].max((got - mean).abs());
        }

        let labels: Vec<u32> = (0..n).map(|_| 1 + rng.below(3) as u32).collect();
        let data = LabeledPointSet::new(points.clone(), labels.clone(), 3).map_err(err)?;
        let wrong = (0..n).filter(|&t| labels[nearest(&points, &selected, t)] != labels[t]).count();
        let learner = PluginLearner::fit(&data, &selected, Metric::Euclidean).map_err(err)?;
        let got = core_set_loss(&data, &selected, &learner, LossKind::ZeroOne).map_err(err)?;
        worst[2] = worst[2].max((got - wrong as f64 / n as f64).abs());

        let h = rng.uniform(0.5, 5.0);
        let raw: Vec<f64> = (0..n)
            .map(|t| {
                (0..n)
                    .filter(|&j| j != t)
                    .map(|j| (-euclid(points.row(t), points.row(j)).powi(2) / (2.0 * h * h)).exp())
                    .sum()
            })
            .collect();
        let max = raw.iter().cloned().fold(0.0, f64::max);
        let field = kernel_density(&points, h, default_beta()).map_err(err)?;
        for t in 0..n {
            let expected = if max > 0.0 { (default_beta() * raw[t] / max).max(1e-12) } else { default_beta() };
            worst[3] = worst[3].max((field.values[t] - expected).abs());
        }

        let (gh, gw, gc) = (8, 8, 4);
        let values: Vec<f64> = (0..gh * gw * gc).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let grid = FeatureGrid::new(gh, gw, gc, values).map_err(err)?;
        let got = masked_reconstruction_error(&grid, &MaskedReconstructor::uniform(3)).map_err(err)?;
        for i in 0..gh {
            for j in 0..gw {
                let mut rec = vec![0.0; gc];
                for u in -1isize..=1 {
                    for v in -1isize..=1 {
                        if u == 0 && v == 0 {
                            continue;
                        }
                        let y = (i as isize + u).clamp(0, gh as isize - 1) as usize;
                        let x = (j as isize + v).clamp(0, gw as isize - 1) as usize;
                        for c in 0..gc {
                            rec[c] += grid.at(y, x)[c] / 8.0;
                        }
                    }
                }
                let expected: f64 = (0..gc).map(|c| (rec[c] - grid.at(i, j)[c]).powi(2)).sum();
                worst[4] = worst[4].max((got[i * gw + j] - expected).abs());
            }
        }
    }
    let names = ["classical radius", "average radial distance", "core-set loss", "kernel density", "masked reconstruction"];
    let detail = names
        .iter()
        .zip(worst)
        .map(|(n, w)| format!("{n} {w:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    ensure(worst.iter().all(|&w| w <= TOL), format!("{instances} instances each; max abs error: {detail}"))
}

/// Drops run-dependent values: timestamps and wall-clock timings.
fn stable_form(path: &Path) -> Vec<u8> {
    let bytes = fs::read(path).expect("artifact readable");
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => {
            let mut v: Value = serde_json::from_slice(&bytes).expect("artifact is JSON");
            strip_timing(&mut v);
            serde_json::to_vec(&v).expect("serializes")
        }
        Some("csv") if path.file_name().is_some_and(|n| n == "comparison.csv") => {
            let text = String::from_utf8(bytes).expect("utf-8 csv");
            text.lines()
                .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
                .collect::<Vec<_>>()
                .join("\n")
                .into_bytes()
        }
        _ => bytes,
    }
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|k, _| k != "timestamp_unix" && k != "runtime_ms" && k != "mean_runtime_ms");
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn run_cli(dir: &Path, command: &str, config: &Path, out: &str) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_dacs"))
        .args([command, "--config"])
        .arg(config)
        .args(["--out", out])
        .current_dir(dir)
        .stdout(Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    match status.code() {
        Some(0) => Ok(()),
        code => Err(format!("{command} exited with {code:?}")),
    }
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let family: Value = serde_json::from_str(&fs::read_to_string(family_path()).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let config = json!({
        "dataset": {"generate": family},
        "protocol": {"rounds": 3, "budget": 10, "algorithm": "density-aware", "estimator": {"kind": "knn", "k": 10}},
        "estimator": {"kind": "knn", "k": 10},
        "calibration": {"budget": 30},
        "compare": {"budget": 20, "seeds": [0, 1, 2]}
    });
    let mut with_selection = config.clone();
    with_selection["selection"] = json!({"file": "picked.csv"});
    let write = |name: &str, value: &Value| -> Result<PathBuf, String> {
        let path = dir.path().join(name);
        fs::write(&path, serde_json::to_vec_pretty(value).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        Ok(path)
    };
    let base = write("config.json", &config)?;
    let evaluate = write("evaluate.json", &with_selection)?;
    let commands = ["generate", "select", "evaluate", "calibrate", "compare"];
    for pass in ["first", "second"] {
        for command in commands {
            let path = if command == "evaluate" { &evaluate } else { &base };
            run_cli(dir.path(), command, path, &format!("{pass}/{command}"))?;
            if command == "select" {
                fs::copy(dir.path().join(pass).join("select/selection.csv"), dir.path().join("picked.csv"))
                    .map_err(|e| e.to_string())?;
            }
        }
    }
    let mut compared = 0;
    let mut differing = Vec::new();
    for command in commands {
        let first = dir.path().join("first").join(command);
        let mut names: Vec<_> = fs::read_dir(&first)
            .map_err(|e| e.to_string())?
            .map(|e| e.map(|e| e.file_name()))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        names.sort();
        for name in names {
            let second = dir.path().join("second").join(command).join(&name);
            if !second.is_file() || stable_form(&first.join(&name)) != stable_form(&second) {
                differing.push(format!("{command}/{}", name.to_string_lossy()));
            }
            compared += 1;
        }
    }
    ensure(
        differing.is_empty() && compared > 0,
        format!("{compared} artifacts from {} commands compared; differing: {differing:?}", commands.len()),
    )
}
