use std::path::PathBuf;

use reactkit_core::kinematics::{velocity_series, Dims, VelocitySeries};
use reactkit_core::pose::{select_upper_body, validate_stream, write_pose_stream, PoseFormat};
use serde::Serialize;

use super::{file_stem, load_pose};
use crate::config::pick_parsed;
use crate::output::{require_files, OutDir};
use crate::Global;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Pose files (CSV or JSONL).
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Input format; inferred from the extension when absent.
    #[arg(long)]
    format: Option<PoseFormat>,
    /// Coordinates used for velocity: xy or xyz.
    #[arg(long)]
    dims: Option<Dims>,
    /// Also rewrite each stream in this format.
    #[arg(long)]
    convert: Option<PoseFormat>,
}

#[derive(Serialize)]
struct Effective {
    inputs: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<String>,
    dims: String,
    fps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    convert: Option<String>,
}

pub fn run(global: &Global, args: Args) -> anyhow::Result<()> {
    let file = &global.file.ingest;
    let format = match args.format {
        Some(f) => Some(f),
        None => file.format.as_deref().map(str::parse).transpose().map_err(anyhow::Error::msg)?,
    };
    let dims = pick_parsed(args.dims, file.dims.as_deref(), Dims::default(), "ingest.dims")?;
    require_files(&args.inputs)?;
    let out = OutDir::create(&global.out)?;
    out.echo_config(
        "ingest",
        &Effective {
            inputs: args.inputs.clone(),
            format: format.map(|f| f.to_string()),
            dims: dims.to_string(),
            fps: global.fps,
            convert: args.convert.map(|f| f.to_string()),
        },
    )?;
    for path in &args.inputs {
        let stream = load_pose(path, format, global.fps)?;
        let stem = file_stem(path);
        let report = validate_stream(&stream);
        out.write_json(&format!("{stem}.validation.json"), &report)?;

        // One velocity series per gap-free segment, written back to back.
        let upper = select_upper_body(&stream);
        let mut samples = Vec::new();
        for segment in upper.split_at_gaps() {
            if segment.len() >= 2 {
                samples.extend(velocity_series(&segment, dims)?.samples);
            }
        }
        let velocity = VelocitySeries {
            source_id: stem.clone(),
            fps: stream.nominal_fps,
            dims,
            samples,
        };
        out.write_with(&format!("{stem}.velocity.csv"), |w| velocity.write_csv(w))?;
        if let Some(target) = args.convert {
            out.write_with(&format!("{stem}.{}", target.extension()), |w| write_pose_stream(&stream, target, w))?;
        }
        eprintln!(
            "{stem}: {} frames, {} finding(s), {} velocity samples",
            report.frames,
            report.findings.len(),
            velocity.len()
        );
    }
    Ok(())
}
