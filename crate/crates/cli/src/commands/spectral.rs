use std::path::PathBuf;

use anyhow::Context;
use reactkit_core::detector::{default_window, BaselineStats};
use reactkit_core::kinematics::{velocity_series, Dims};
use reactkit_core::pose::{select_upper_body, PoseFormat};
use reactkit_core::spectral::{cwt_gaus2, default_scales, fft_magnitude, peak_scale_map};
use serde::Serialize;

use super::load_pose;
use crate::config::pick_parsed;
use crate::output::{require_files, OutDir};
use crate::Global;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Pose file (CSV or JSONL).
    input: PathBuf,
    #[arg(long)]
    format: Option<PoseFormat>,
    #[arg(long)]
    dims: Option<Dims>,
    /// Start of the analysed span, ms.
    #[arg(long)]
    from_ms: Option<f64>,
    /// End of the analysed span, ms.
    #[arg(long)]
    to_ms: Option<f64>,
    /// Subtract the mean before the FFT.
    #[arg(long)]
    remove_mean: bool,
    /// Explicit ascending scale list in samples, comma separated.
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<f64>>,
    /// Largest default scale in samples; defaults to the detector window length.
    #[arg(long)]
    window_frames: Option<usize>,
    /// Strength fraction of the maximum that marks a dominant region.
    #[arg(long)]
    region_fraction: Option<f64>,
}

#[derive(Serialize)]
struct Effective {
    input: PathBuf,
    dims: String,
    fps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    from_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    to_ms: Option<f64>,
    remove_mean: bool,
    scales: Vec<f64>,
    region_fraction: f64,
}

#[derive(Serialize)]
struct Region {
    start_ms: f64,
    end_ms: f64,
    peak_ms: f64,
    dominant_scale: Option<f64>,
}

pub fn run(global: &Global, args: Args) -> anyhow::Result<()> {
    let file = &global.file.spectral;
    let dims = pick_parsed(args.dims, file.dims.as_deref(), Dims::default(), "spectral.dims")?;
    let format = match args.format {
        Some(f) => Some(f),
        None => file.format.as_deref().map(str::parse).transpose().map_err(anyhow::Error::msg)?,
    };
    let from_ms = args.from_ms.or(file.from_ms);
    let to_ms = args.to_ms.or(file.to_ms);
    let remove_mean = args.remove_mean || file.remove_mean.unwrap_or(false);
    let fraction = args.region_fraction.or(file.region_fraction).unwrap_or(0.5);
    let frame_ms = 1000.0 / global.fps;
    let scales = match args.scales.clone().or_else(|| file.scales.clone()) {
        Some(s) => s,
        None => {
            let stats = BaselineStats::default();
            let frames = args
                .window_frames
                .or(file.window_frames)
                .unwrap_or_else(|| default_window(stats.mean_ms, stats.sd_ms, frame_ms).length_frames);
            default_scales(frames)
        }
    };
    require_files([&args.input])?;

    let stream = load_pose(&args.input, format, global.fps)?;
    let upper = select_upper_body(&stream);
    let segments = upper.split_at_gaps();
    let anchor = from_ms.unwrap_or(f64::NEG_INFINITY);
    let segment = segments
        .iter()
        .filter(|s| s.len() >= 2)
        .find(|s| s.frames.last().is_some_and(|f| f.timestamp_ms >= anchor))
        .context("no gap-free span of the stream covers the requested start")?;
    let mut velocity = velocity_series(segment, dims)?;
    if from_ms.is_some() || to_ms.is_some() {
        velocity = velocity.slice_time(from_ms.unwrap_or(f64::NEG_INFINITY), to_ms.unwrap_or(f64::INFINITY));
    }

    let out = OutDir::create(&global.out)?;
    out.echo_config(
        "spectral",
        &Effective {
            input: args.input.clone(),
            dims: dims.to_string(),
            fps: global.fps,
            from_ms,
            to_ms,
            remove_mean,
            scales: scales.clone(),
            region_fraction: fraction,
        },
    )?;
    let spectrum = fft_magnitude(&velocity, remove_mean)?;
    out.write_with("spectrum.csv", |w| spectrum.write_csv(w))?;
    let cwt = cwt_gaus2(&velocity, &scales)?;
    out.write_with("cwt.bin", |w| cwt.write_binary(w))?;
    out.write_json("cwt.json", &cwt.sidecar())?;
    let trace = peak_scale_map(&cwt);
    out.write_with("peak_scale.csv", |w| trace.write_csv(w))?;
    let regions: Vec<Region> = trace
        .regions(fraction)
        .into_iter()
        .map(|(a, b)| {
            let peak = (a..=b)
                .max_by(|&i, &j| trace.strength[i].total_cmp(&trace.strength[j]))
                .unwrap_or(a);
            Region {
                start_ms: trace.translations_ms[a],
                end_ms: trace.translations_ms[b],
                peak_ms: trace.translations_ms[peak],
                dominant_scale: trace.scale[peak],
            }
        })
        .collect();
    out.write_json("peak_regions.json", &regions)?;
    if let Some(dom) = spectrum.dominant() {
        eprintln!(
            "{} samples; dominant frequency {:.3} Hz; {} dominant-scale region(s)",
            velocity.len(),
            dom.freq_hz,
            regions.len()
        );
    }
    Ok(())
}
