use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use dacs_core::coverage::BoundParams;
use dacs_core::data::Metric;
use dacs_core::density::DEFAULT_BINS;
use dacs_core::generate::GeneratorSpec;
use dacs_core::selection::{Algorithm, EstimatorConfig, ProtocolConfig};

use crate::error::CliError;

/// Where the points come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSource {
    Generate(GeneratorSpec),
    /// CSV with header `id,f0..f{D-1}[,label][,score]`.
    File(PathBuf),
}

/// Which points are selected, for `evaluate` and `calibrate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum SelectionSource {
    /// Every point.
    All,
    /// CSV with an `id` column.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    #[serde(default = "default_calibration_budget")]
    pub budget: usize,
    #[serde(default = "default_calibration_algorithm")]
    pub algorithm: Algorithm,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            budget: default_calibration_budget(),
            algorithm: default_calibration_algorithm(),
            bins: default_bins(),
        }
    }
}

fn default_calibration_budget() -> usize {
    30
}

fn default_calibration_algorithm() -> Algorithm {
    Algorithm::KCenter
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    /// Points added per round.
    pub budget: usize,
    #[serde(default = "default_compare_rounds")]
    pub rounds: usize,
    pub seeds: Vec<u64>,
}

fn default_compare_rounds() -> usize {
    1
}

/// One experiment. Each command reads the sections it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Overrides the generator seed and the protocol seed.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Metric for coverage, bounds and the plug-in learner.
    #[serde(default)]
    pub metric: Option<Metric>,
    #[serde(default)]
    pub dataset: Option<DatasetSource>,
    #[serde(default)]
    pub protocol: Option<ProtocolConfig>,
    #[serde(default)]
    pub estimator: Option<EstimatorConfig>,
    #[serde(default)]
    pub bounds: BoundParams,
    #[serde(default)]
    pub selection: Option<SelectionSource>,
    #[serde(default)]
    pub calibration: Option<CalibrationSection>,
    #[serde(default)]
    pub compare: Option<CompareSection>,
}

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub metric: Option<Metric>,
}

pub const OUT_DIR_ENV: &str = "DACS_OUT_DIR";
const FALLBACK_OUT_DIR: &str = "dacs-out";

impl ExperimentConfig {
    /// Parses `path`, resolves relative file references against its
    /// directory, applies `overrides`, and checks that referenced files exist.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.apply(overrides);
        config.check_files(path)?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(DatasetSource::File(p)) = &mut self.dataset {
            fix(p);
        }
        if let Some(SelectionSource::File(p)) = &mut self.selection {
            fix(p);
        }
    }

    fn apply(&mut self, overrides: &Overrides) {
        if overrides.seed.is_some() {
            self.seed = overrides.seed;
        }
        if overrides.out_dir.is_some() {
            self.out_dir = overrides.out_dir.clone();
        }
        if overrides.metric.is_some() {
            self.metric = overrides.metric;
        }
        if let Some(seed) = self.seed {
            if let Some(DatasetSource::Generate(spec)) = &mut self.dataset {
                spec.seed = seed;
            }
            if let Some(p) = &mut self.protocol {
                p.seed = seed;
            }
        }
    }

    fn check_files(&self, config_path: &Path) -> Result<(), CliError> {
        let files = [
            match &self.dataset {
                Some(DatasetSource::File(p)) => Some(("dataset.file", p)),
                _ => None,
            },
            match &self.selection {
                Some(SelectionSource::File(p)) => Some(("selection.file", p)),
                _ => None,
            },
        ];
        for (field, p) in files.into_iter().flatten() {
            if !p.is_file() {
                return Err(CliError::Config {
                    path: config_path.to_path_buf(),
                    message: format!("{field}: {} does not exist", p.display()),
                });
            }
        }
        Ok(())
    }

    pub fn metric(&self) -> Metric {
        self.metric.unwrap_or_default()
    }

    /// `out_dir` from the config or flags, then the environment, then `dacs-out`.
    pub fn out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR))
    }

    /// Hex SHA-256 of the effective configuration, output directory excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = None;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn require<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        section.as_ref().ok_or_else(|| CliError::Missing(name.to_string()))
    }
}
