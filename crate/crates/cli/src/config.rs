//! Optional TOML config file. Every key mirrors a command-line flag; flags
//! win, then the file, then built-in defaults.
//!
//! ```toml
//! seed = 7
//! out = "results"
//! fps = 30.0
//!
//! [detect]
//! warnings_ms = [25000, 45000]
//! dims = "xyz"
//! ```

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub fps: Option<f64>,
    #[serde(default)]
    pub ingest: IngestSection,
    #[serde(default)]
    pub detect: DetectSection,
    #[serde(default)]
    pub spectral: SpectralSection,
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub srt: SrtSection,
    #[serde(default)]
    pub stats: StatsSection,
    #[serde(default)]
    pub synth: SynthSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestSection {
    pub format: Option<String>,
    pub dims: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectSection {
    pub format: Option<String>,
    pub baselines: Option<PathBuf>,
    pub warnings_ms: Option<Vec<f64>>,
    pub baseline_mean_ms: Option<f64>,
    pub baseline_sd_ms: Option<f64>,
    pub dims: Option<String>,
    pub method: Option<String>,
    pub emit_trace: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSection {
    pub format: Option<String>,
    pub dims: Option<String>,
    pub from_ms: Option<f64>,
    pub to_ms: Option<f64>,
    pub remove_mean: Option<bool>,
    pub scales: Option<Vec<f64>>,
    pub window_frames: Option<usize>,
    pub region_fraction: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub script: Option<String>,
    pub clock: Option<String>,
    pub shuffle: Option<bool>,
    pub delay_min_ms: Option<u64>,
    pub delay_max_ms: Option<u64>,
    pub responses: Option<bool>,
    pub response_mean_ms: Option<f64>,
    pub response_sd_ms: Option<f64>,
    pub gap_ms: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SrtSection {
    pub miss_ms: Option<u64>,
    pub budget_ms: Option<u64>,
    pub participant: Option<String>,
    pub setting: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsSection {
    pub records: Option<Vec<PathBuf>>,
    pub variant: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub participants: Option<usize>,
    pub duration_ms: Option<f64>,
    pub warnings_ms: Option<Vec<f64>>,
    pub noise_sigma: Option<f64>,
    pub snr: Option<f64>,
    pub rho: Option<f64>,
    pub format: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Flag value, else config value parsed from its string form, else default.
pub fn pick_parsed<T>(flag: Option<T>, file: Option<&str>, default: T, key: &str) -> anyhow::Result<T>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    if let Some(v) = flag {
        return Ok(v);
    }
    match file {
        Some(s) => s
            .parse()
            .map_err(|e| anyhow::anyhow!("config key `{key}`: {e}")),
        None => Ok(default),
    }
}
