//! Self-describing JSON experiment records.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::analysis::{ConcordanceReport, ControllerReport};
use crate::dynamics::TransferTask;
use crate::error::{Error, Result};
use crate::network::{NetworkDescriptor, SpinNetwork};
use crate::optimizer::{ControllerSet, OptimizationConfig};

pub const SCHEMA_VERSION: &str = "1.0";
const SCHEMA_MAJOR: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    Transfer {
        task: TransferTask,
    },
    /// One optimization per fixed time in `times`.
    Sweep {
        input: usize,
        output: usize,
        window: Option<f64>,
        times: Vec<f64>,
    },
    Localization {
        node: usize,
        hold: f64,
    },
}

impl Experiment {
    /// `(input, output)`; both equal the held node for localization.
    pub fn endpoints(&self) -> (usize, usize) {
        match self {
            Experiment::Transfer { task } => (task.input, task.output),
            Experiment::Sweep { input, output, .. } => (*input, *output),
            Experiment::Localization { node, .. } => (*node, *node),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Reports {
    #[serde(default)]
    pub controllers: Vec<ControllerReport>,
    #[serde(default)]
    pub concordance: Option<ConcordanceReport>,
}

/// Wall-clock bookkeeping. Ignored when comparing runs for determinism.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timestamps {
    pub created_unix: f64,
    pub elapsed_seconds: Option<f64>,
}

impl Timestamps {
    pub fn now() -> Self {
        let created_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        Self {
            created_unix,
            elapsed_seconds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub schema_version: String,
    pub tool_version: String,
    pub network: NetworkDescriptor,
    pub experiment: Experiment,
    pub config: OptimizationConfig,
    pub controllers: ControllerSet,
    #[serde(default)]
    pub reports: Reports,
    pub timestamps: Timestamps,
}

impl ExperimentRecord {
    pub fn new(
        net: &SpinNetwork,
        experiment: Experiment,
        config: OptimizationConfig,
        controllers: ControllerSet,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            network: net.descriptor(),
            experiment,
            config,
            controllers,
            reports: Reports::default(),
            timestamps: Timestamps::now(),
        }
    }

    pub fn network(&self) -> Result<SpinNetwork> {
        SpinNetwork::from_descriptor(&self.network)
    }

    /// Equality ignoring timestamps.
    pub fn same_content(&self, other: &Self) -> bool {
        let mut a = self.clone();
        a.timestamps = other.timestamps;
        a == *other
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Record(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Record(e.to_string()))?;
        let version = value
            .get("schema_version")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::Record("missing schema_version".into()))?;
        let major = version
            .split('.')
            .next()
            .and_then(|s| s.parse::<u32>().ok());
        if major != Some(SCHEMA_MAJOR) {
            return Err(Error::Record(format!(
                "unsupported schema version {version}"
            )));
        }
        serde_json::from_value(value).map_err(|e| Error::Record(e.to_string()))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Record(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Writes to a sibling temporary file, then renames over `path`.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_json()?.as_bytes())
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |e: std::io::Error| Error::Record(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Record(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let mut file = fs::File::create(&tmp).map_err(io)?;
    file.write_all(bytes).map_err(io)?;
    file.sync_all().map_err(io)?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}
