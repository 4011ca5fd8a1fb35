use std::fmt::Write as _;

use reactkit_core::pose::{write_pose_stream, PoseFormat};
use reactkit_core::stats::write_records;
use reactkit_core::synth::{gen_session, BurstTruth, SessionSpec};
use serde::Serialize;

use crate::output::OutDir;
use crate::Global;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Number of pose-captured participants.
    #[arg(long)]
    participants: Option<usize>,
    /// Recording length per participant, ms.
    #[arg(long)]
    duration_ms: Option<f64>,
    /// Warning times, ms, comma separated.
    #[arg(long, value_delimiter = ',')]
    warnings: Option<Vec<f64>>,
    /// Positional noise SD per coordinate.
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Expected velocity pulse rise over the noise-only velocity SD.
    #[arg(long)]
    snr: Option<f64>,
    /// Participant-level correlation between paired cells.
    #[arg(long)]
    rho: Option<f64>,
    /// Pose file format.
    #[arg(long)]
    format: Option<PoseFormat>,
}

#[derive(Serialize)]
struct Effective {
    seed: u64,
    format: String,
    #[serde(flatten)]
    spec: SessionSpec,
}

#[derive(Serialize)]
struct ParticipantTruth<'a> {
    participant: &'a str,
    baseline_rt_ms: f64,
    bursts: &'a [BurstTruth],
}

#[derive(Serialize)]
struct GroundTruth<'a> {
    seed: u64,
    spec: &'a SessionSpec,
    participants: Vec<ParticipantTruth<'a>>,
}

pub fn run(global: &Global, args: Args) -> anyhow::Result<()> {
    let seed = global.require_seed("synth")?;
    let file = &global.file.synth;
    let defaults = SessionSpec::default();
    let spec = SessionSpec {
        participants: args.participants.or(file.participants).unwrap_or(defaults.participants),
        duration_ms: args.duration_ms.or(file.duration_ms).unwrap_or(defaults.duration_ms),
        fps: global.fps,
        warnings_ms: args
            .warnings
            .clone()
            .or_else(|| file.warnings_ms.clone())
            .unwrap_or(defaults.warnings_ms),
        noise_sigma: args.noise_sigma.or(file.noise_sigma).unwrap_or(defaults.noise_sigma),
        snr: args.snr.or(file.snr).unwrap_or(defaults.snr),
        window_ms: defaults.window_ms,
        rho: args.rho.or(file.rho).unwrap_or(defaults.rho),
    };
    let format = match args.format {
        Some(f) => f,
        None => file
            .format
            .as_deref()
            .map(str::parse)
            .transpose()
            .map_err(anyhow::Error::msg)?
            .unwrap_or(PoseFormat::Csv),
    };

    let session = gen_session(&spec, seed)?;
    let out = OutDir::create(&global.out)?;
    out.echo_config(
        "synth",
        &Effective {
            seed,
            format: format.to_string(),
            spec: spec.clone(),
        },
    )?;
    let pose_dir = out.subdir("pose")?;
    let mut baselines = String::from("participant,baseline_rt_ms\n");
    for p in &session.participants {
        pose_dir.write_with(&format!("{}.{}", p.participant, format.extension()), |w| {
            write_pose_stream(&p.stream.stream, format, w)
        })?;
        writeln!(baselines, "{},{}", p.participant, p.baseline_rt_ms)?;
    }
    out.write_str("baselines.csv", &baselines)?;
    out.write_with("srt_records.csv", |w| write_records(&session.srt_records, w))?;
    out.write_json(
        "ground_truth.json",
        &GroundTruth {
            seed,
            spec: &spec,
            participants: session
                .participants
                .iter()
                .map(|p| ParticipantTruth {
                    participant: &p.participant,
                    baseline_rt_ms: p.baseline_rt_ms,
                    bursts: &p.stream.truth,
                })
                .collect(),
        },
    )?;
    eprintln!(
        "{} participant stream(s), {} SRT record(s)",
        session.participants.len(),
        session.srt_records.len()
    );
    Ok(())
}
