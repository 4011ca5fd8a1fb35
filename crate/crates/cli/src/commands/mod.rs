pub mod detect;
pub mod ingest;
pub mod scenario;
pub mod spectral;
pub mod srt;
pub mod stats;
pub mod synth;

use std::path::Path;

use anyhow::Context;
use reactkit_core::pose::{parse_pose_stream, PoseFormat, PoseStream};

/// Explicit format, else the file extension.
pub fn pose_format(path: &Path, explicit: Option<PoseFormat>) -> anyhow::Result<PoseFormat> {
    explicit
        .or_else(|| PoseFormat::from_path(path))
        .with_context(|| format!("cannot tell the pose format of {}; pass --format", path.display()))
}

pub fn load_pose(path: &Path, explicit: Option<PoseFormat>, fps: f64) -> anyhow::Result<PoseStream> {
    let format = pose_format(path, explicit)?;
    parse_pose_stream(path, format, fps).with_context(|| format!("reading {}", path.display()))
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("unknown")
        .to_string()
}
