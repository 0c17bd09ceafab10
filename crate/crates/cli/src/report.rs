use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::CliError;

/// Provenance block embedded in every JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_hash: String,
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    /// Wall-clock time of the run; the only field that differs between reruns.
    pub timestamp_unix: u64,
}

impl Metadata {
    pub fn new(command: &'static str, config_hash: String, seed: Option<u64>) -> Self {
        Self {
            tool: "dacs",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash,
            seed,
            seeds: None,
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, B> {
    metadata: &'a Metadata,
    #[serde(flatten)]
    body: &'a B,
}

/// Output directory plus the metadata stamped on its JSON files.
pub struct Output {
    dir: PathBuf,
    pub metadata: Metadata,
}

impl Output {
    pub fn create(dir: PathBuf, metadata: Metadata) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|source| CliError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(Self { dir, metadata })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn json<B: Serialize>(&self, name: &str, body: &B) -> Result<PathBuf, CliError> {
        let envelope = Envelope {
            metadata: &self.metadata,
            body,
        };
        let mut bytes = serde_json::to_vec_pretty(&envelope).expect("report serializes");
        bytes.push(b'\n');
        self.bytes(name, &bytes)
    }

    pub fn bytes(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        write(&path, bytes)?;
        Ok(path)
    }
}

pub fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
