//! Artifact file IO and stage provenance stamps.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::PipelineError;

/// Reference to an upstream stage by name and config hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRef {
    pub stage: String,
    pub config_hash: String,
}

/// Provenance sidecar written next to each stage's artifacts.
///
/// JSONL artifacts keep their schema pure (one record per line), so the
/// config hash and seed they must embed live here; JSON artifacts embed the
/// same fields directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageMeta {
    pub stage: String,
    pub config_hash: String,
    pub seed: u64,
    pub upstream: Vec<StageRef>,
    pub outputs: Vec<String>,
}

impl StageMeta {
    pub fn path(out_dir: &Path, stage: &str) -> std::path::PathBuf {
        out_dir.join(format!("{stage}.meta.json"))
    }

    pub fn write(&self, out_dir: &Path) -> Result<(), PipelineError> {
        write_json_pretty(&StageMeta::path(out_dir, &self.stage), self)
    }

    /// Load the sidecar for `stage` and verify its stamp against the hash
    /// computed from the current config.
    pub fn check(
        out_dir: &Path,
        stage: &str,
        expected_hash: &str,
        produce_with: &str,
    ) -> Result<StageMeta, PipelineError> {
        let path = StageMeta::path(out_dir, stage);
        if !path.exists() {
            return Err(PipelineError::MissingArtifact {
                artifact: path.display().to_string(),
                produce_with: produce_with.to_string(),
            });
        }
        let meta: StageMeta = read_json(&path)?;
        if meta.config_hash != expected_hash {
            return Err(PipelineError::StaleArtifact {
                stage: stage.to_string(),
                expected: expected_hash.to_string(),
                found: meta.config_hash,
                rerun: produce_with.to_string(),
            });
        }
        Ok(meta)
    }
}

/// One line of predictions JSONL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub example_id: String,
    pub model_name: String,
    pub probability: f64,
    pub trace: String,
    pub latency_ms: u64,
}

pub fn io_err(path: &Path, source: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), PipelineError> {
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut writer = std::io::BufWriter::new(file);
    for row in rows {
        let line = serde_json::to_string(row).expect("row serializes");
        writeln!(writer, "{line}").map_err(|e| io_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(&line).map_err(|e| PipelineError::Json {
            path: format!("{}:{}", path.display(), idx + 1),
            message: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Json {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Require that an upstream artifact file exists, naming the command that
/// produces it otherwise.
pub fn require_file(path: &Path, produce_with: &str) -> Result<(), PipelineError> {
    if path.exists() {
        Ok(())
    } else {
        Err(PipelineError::MissingArtifact {
            artifact: path.display().to_string(),
            produce_with: produce_with.to_string(),
        })
    }
}
