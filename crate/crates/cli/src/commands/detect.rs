use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use reactkit_core::detector::{
    BaselineStats, ConvMethod, Detection, DetectionReport, Detector, DetectorConfig, WarningOutcome,
};
use reactkit_core::kinematics::Dims;
use reactkit_core::pose::PoseFormat;
use reactkit_core::stats::{write_records, Method, ReactionRecord, Setting};
use reactkit_core::woz::Modality;
use serde::{Deserialize, Serialize};

use super::{file_stem, load_pose};
use crate::config::pick_parsed;
use crate::output::{require_files, OutDir};
use crate::Global;

pub const DEFAULT_WARNINGS_MS: [f64; 2] = [25_000.0, 45_000.0];

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Pose files; each file stem is the participant id.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// CSV `participant,baseline_rt_ms` giving each participant's kernel duration.
    #[arg(long)]
    baselines: Option<PathBuf>,
    /// Warning times in ms, comma separated.
    #[arg(long, value_delimiter = ',')]
    warnings: Option<Vec<f64>>,
    /// Group baseline mean used for the search-window length.
    #[arg(long)]
    baseline_mean: Option<f64>,
    /// Group baseline SD used for the search-window length.
    #[arg(long)]
    baseline_sd: Option<f64>,
    #[arg(long)]
    dims: Option<Dims>,
    /// Convolution method: direct or fft.
    #[arg(long)]
    method: Option<ConvMethod>,
    /// Write the convolution trace of every warning.
    #[arg(long)]
    emit_trace: bool,
    #[arg(long)]
    format: Option<PoseFormat>,
}

#[derive(Serialize)]
struct Effective {
    inputs: Vec<PathBuf>,
    baselines: PathBuf,
    warnings_ms: Vec<f64>,
    baseline_mean_ms: f64,
    baseline_sd_ms: f64,
    dims: String,
    method: String,
    emit_trace: bool,
    fps: f64,
}

#[derive(Deserialize)]
struct BaselineRow {
    participant: String,
    baseline_rt_ms: f64,
}

fn read_baselines(path: &Path) -> anyhow::Result<BTreeMap<String, f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening baselines {}", path.display()))?;
    let mut out = BTreeMap::new();
    for row in rdr.deserialize::<BaselineRow>() {
        let row = row.with_context(|| format!("reading baselines {}", path.display()))?;
        out.insert(row.participant, row.baseline_rt_ms);
    }
    Ok(out)
}

pub fn run(global: &Global, args: Args) -> anyhow::Result<()> {
    let file = &global.file.detect;
    let baselines_path = args
        .baselines
        .clone()
        .or_else(|| file.baselines.clone())
        .context("detect needs --baselines <csv>")?;
    let warnings = args
        .warnings
        .clone()
        .or_else(|| file.warnings_ms.clone())
        .unwrap_or_else(|| DEFAULT_WARNINGS_MS.to_vec());
    let defaults = BaselineStats::default();
    let stats = BaselineStats {
        mean_ms: args.baseline_mean.or(file.baseline_mean_ms).unwrap_or(defaults.mean_ms),
        sd_ms: args.baseline_sd.or(file.baseline_sd_ms).unwrap_or(defaults.sd_ms),
    };
    let config = DetectorConfig {
        dims: pick_parsed(args.dims, file.dims.as_deref(), Dims::default(), "detect.dims")?,
        method: pick_parsed(args.method, file.method.as_deref(), ConvMethod::default(), "detect.method")?,
    };
    let format = match args.format {
        Some(f) => Some(f),
        None => file.format.as_deref().map(str::parse).transpose().map_err(anyhow::Error::msg)?,
    };
    let emit_trace = args.emit_trace || file.emit_trace.unwrap_or(false);

    require_files(args.inputs.iter().chain(std::iter::once(&baselines_path)))?;
    let baselines = read_baselines(&baselines_path)?;
    let participants: Vec<String> = args.inputs.iter().map(|p| file_stem(p)).collect();
    if let Some(missing) = participants.iter().find(|p| !baselines.contains_key(*p)) {
        anyhow::bail!("no baseline reaction time for participant `{missing}` in {}", baselines_path.display());
    }

    let out = OutDir::create(&global.out)?;
    out.echo_config(
        "detect",
        &Effective {
            inputs: args.inputs.clone(),
            baselines: baselines_path.clone(),
            warnings_ms: warnings.clone(),
            baseline_mean_ms: stats.mean_ms,
            baseline_sd_ms: stats.sd_ms,
            dims: config.dims.to_string(),
            method: config.method.to_string(),
            emit_trace,
            fps: global.fps,
        },
    )?;

    let mut summary = String::from("participant,warning_index,warning_ms,status,t_max_ms,rt_ms,peak_value,error\n");
    let mut records = Vec::new();
    for (path, participant) in args.inputs.iter().zip(&participants) {
        let stream = load_pose(path, format, global.fps)?;
        let detector = Detector::new(config, baselines[participant], stats, stream.frame_ms())
            .with_context(|| format!("participant `{participant}`"))?;
        let results = detector.detect_stream(&stream, &warnings);
        let report = DetectionReport::new(participant, &detector, &warnings, &results, emit_trace);
        out.write_json(&format!("{participant}.detection.json"), &report)?;
        for w in &report.warnings {
            match &w.outcome {
                WarningOutcome::Detected {
                    t_max_ms,
                    rt_ms,
                    peak_value,
                    ..
                } => {
                    summary.push_str(&format!(
                        "{participant},{},{},detected,{t_max_ms},{rt_ms},{peak_value},\n",
                        w.warning_index, w.warning_ms
                    ));
                    if *rt_ms > 0.0 {
                        records.push(ReactionRecord {
                            participant: participant.clone(),
                            setting: Setting::VisionE,
                            modality: Modality::HAV,
                            method: Method::Vision,
                            rt_ms: *rt_ms,
                            trial: w.warning_index as u32,
                        });
                    }
                }
                WarningOutcome::Failed { error } => {
                    summary.push_str(&format!(
                        "{participant},{},{},failed,,,,\"{}\"\n",
                        w.warning_index,
                        w.warning_ms,
                        error.replace('"', "'")
                    ));
                }
            }
        }
        if emit_trace {
            for (k, r) in results.iter().enumerate() {
                if let Ok(d) = r {
                    out.write_with(&format!("{participant}.w{}.trace.csv", k + 1), |w| write_trace(d, w))?;
                }
            }
        }
        let ok = results.iter().filter(|r| r.is_ok()).count();
        eprintln!("{participant}: {ok}/{} warnings detected", results.len());
    }
    out.write_str("detect_summary.csv", &summary)?;
    out.write_with("vision_records.csv", |w| write_records(&records, w))?;
    Ok(())
}

/// `t_ms,velocity,convolution` for the whole series; the window is in the JSON report.
fn write_trace(d: &Detection, w: &mut dyn Write) -> std::io::Result<()> {
    writeln!(w, "t_ms,velocity,convolution")?;
    for (s, y) in d.velocity.samples.iter().zip(&d.convolution.values) {
        writeln!(w, "{},{},{}", s.t_ms, s.v, y)?;
    }
    Ok(())
}
