//! Run configuration: one JSON file drives the whole pipeline.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use echograph_core::echo::EchoParams;
use echograph_core::ingest::Platform;
use serde::{Deserialize, Serialize};

fn default_alpha() -> f64 {
    0.05
}

fn default_heatmap_bins() -> usize {
    20
}

fn default_density_grid() -> usize {
    256
}

/// Mirrors the config JSON. Every field is echoed verbatim into the
/// header of each output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Corpus dump (JSONL).
    pub input: PathBuf,
    #[serde(default)]
    pub platform: Platform,
    /// Lexicon scorer files, one term per line. Order defines the
    /// ensemble order.
    #[serde(default)]
    pub lexicons: Vec<PathBuf>,
    /// Precomputed verdict file; every classifier named inside becomes
    /// one ensemble member.
    #[serde(default)]
    pub labels: Option<PathBuf>,
    /// Annotation file for scorer validation.
    #[serde(default)]
    pub annotations: Option<PathBuf>,
    /// Embedding sidecar (64- or 512-d vectors per post id).
    #[serde(default)]
    pub embeddings: Option<PathBuf>,
    #[serde(default)]
    pub echo: EchoParams,
    /// Disparity-filter significance level for the chamber backbone.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_heatmap_bins")]
    pub heatmap_bins: usize,
    /// Evaluation points per density curve.
    #[serde(default = "default_density_grid")]
    pub density_grid: usize,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let raw = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig = serde_json::from_str(&raw)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(config)
    }
}
