use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::error::CliError;

fn hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

impl OutputFile {
    pub fn describe(file: &str, body: &[u8]) -> Self {
        Self {
            file: file.to_string(),
            bytes: body.len(),
            sha256: hex(body),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub task: String,
    /// SHA-256 of the config file as read, before command-line overrides.
    pub config_sha256: String,
    pub toolkit_version: String,
    pub seed: Option<u64>,
    pub prng: String,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<OutputFile>,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn new(
        cfg: &ScenarioConfig,
        raw: &[u8],
        started: DateTime<Utc>,
        outputs: Vec<OutputFile>,
        warnings: Vec<String>,
    ) -> Self {
        let task = serde_json::to_value(cfg.task)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default();
        Self {
            name: cfg.name.clone(),
            task,
            config_sha256: hex(raw),
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.seed,
            prng: naeq_core::PRNG_ALGORITHM.to_string(),
            started_at: started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            outputs,
            warnings,
        }
    }

    /// Every listed output exists and is non-empty.
    pub fn check(&self, dir: &Path) -> Result<(), CliError> {
        for f in &self.outputs {
            let path = dir.join(&f.file);
            let len = std::fs::metadata(&path)
                .map_err(|e| CliError::io(format!("checking {}", path.display()), e))?
                .len();
            if len == 0 {
                return Err(CliError::io(
                    format!("checking {}", path.display()),
                    std::io::Error::other("output file is empty"),
                ));
            }
        }
        Ok(())
    }
}
