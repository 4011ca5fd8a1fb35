//! Seeded generators with known ground truth: pose streams carrying injected
//! reaction bursts, and reaction-time datasets drawn from group statistics.
//!
//! A burst is a Gaussian speed pulse shared out over a set of landmarks. Each
//! affected landmark moves along a fixed in-plane direction, and its
//! per-frame displacement equals the pulse speed at the end of the frame
//! times the frame duration, so the noise-free velocity series is exactly the
//! sampled pulse.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::Dims;
use crate::pose::{Landmark, PoseFrame, PoseStream, LANDMARK_COUNT, UPPER_BODY_MAX_ID};
use crate::stats::{Method, ReactionRecord, Setting};
use crate::woz::Modality;

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("bursts overlap: warning {a} and warning {b}")]
    Overlap { a: usize, b: usize },
    #[error("burst for warning {warning} extends past the stream ({end_ms} ms > {duration_ms} ms)")]
    OutOfStream { warning: usize, end_ms: f64, duration_ms: f64 },
    #[error("invalid parameter: {0}")]
    BadParams(String),
}

/// Shoulders, elbows and wrists.
pub const DEFAULT_AFFECTED: [u8; 6] = [11, 12, 13, 14, 15, 16];

/// Half-width of a burst's footprint in burst sigmas.
const BURST_EXTENT_SIGMAS: f64 = 4.0;

/// Lowest simulated reaction time.
pub const SRT_FLOOR_MS: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstSpec {
    /// Reaction onset after the warning.
    pub onset_ms: f64,
    pub burst_sigma_ms: f64,
    /// Peak speed summed over all affected landmarks (position units / s).
    pub burst_amplitude: f64,
    pub affected_landmarks: Vec<u8>,
    /// Delay from onset to the speed peak. Defaults to four burst sigmas,
    /// the same centre-to-sigma ratio the detector kernel uses.
    #[serde(default)]
    pub peak_offset_ms: Option<f64>,
}

impl BurstSpec {
    pub fn new(onset_ms: f64, burst_sigma_ms: f64, burst_amplitude: f64) -> Self {
        BurstSpec {
            onset_ms,
            burst_sigma_ms,
            burst_amplitude,
            affected_landmarks: DEFAULT_AFFECTED.to_vec(),
            peak_offset_ms: None,
        }
    }

    /// Burst whose shape matches the detector kernel for a baseline of
    /// `kernel_duration_ms`: peak half a duration after onset, sigma one
    /// eighth of the duration.
    pub fn matched(onset_ms: f64, kernel_duration_ms: f64, burst_amplitude: f64) -> Self {
        BurstSpec {
            peak_offset_ms: Some(kernel_duration_ms / 2.0),
            ..Self::new(onset_ms, kernel_duration_ms / 8.0, burst_amplitude)
        }
    }

    pub fn peak_offset(&self) -> f64 {
        self.peak_offset_ms.unwrap_or(BURST_EXTENT_SIGMAS * self.burst_sigma_ms)
    }

    fn validate(&self) -> Result<(), SpecError> {
        let bad = |m: String| Err(SpecError::BadParams(m));
        if !(self.onset_ms.is_finite() && self.onset_ms >= 0.0) {
            return bad(format!("onset {} ms", self.onset_ms));
        }
        if !(self.burst_amplitude.is_finite() && self.burst_amplitude > 0.0) {
            return bad(format!("amplitude {}", self.burst_amplitude));
        }
        if !(self.burst_sigma_ms.is_finite() && self.burst_sigma_ms > 0.0) {
            return bad(format!("burst sigma {} ms", self.burst_sigma_ms));
        }
        if !self.peak_offset().is_finite() || self.peak_offset() < 0.0 {
            return bad(format!("peak offset {} ms", self.peak_offset()));
        }
        if self.affected_landmarks.is_empty() {
            return bad("no affected landmarks".into());
        }
        let mut seen = [false; LANDMARK_COUNT];
        for &id in &self.affected_landmarks {
            if id > UPPER_BODY_MAX_ID {
                return bad(format!("landmark {id} is not an upper-body landmark"));
            }
            if std::mem::replace(&mut seen[id as usize], true) {
                return bad(format!("landmark {id} listed twice"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Per-coordinate positional noise SD in input units.
    pub sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarningSpec {
    pub t_ms: f64,
    pub bursts: Vec<BurstSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub source_id: String,
    pub duration_ms: f64,
    pub fps: f64,
    pub warnings: Vec<WarningSpec>,
    pub noise: NoiseSpec,
}

/// Where one burst actually sits in the generated stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstTruth {
    pub warning_index: usize,
    pub warning_ms: f64,
    /// Onset relative to the warning.
    pub onset_ms: f64,
    /// Speed peak, absolute stream time.
    pub peak_ms: f64,
    pub sigma_ms: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticStream {
    pub stream: PoseStream,
    pub truth: Vec<BurstTruth>,
}

/// SD of the velocity series produced by positional noise alone, for
/// `landmarks` landmarks each with independent N(0, sigma) jitter per
/// coordinate. The per-landmark frame step is the norm of a Gaussian vector
/// with variance `2 sigma^2` per coordinate.
pub fn noise_velocity_sd(sigma: f64, fps: f64, landmarks: usize, dims: Dims) -> f64 {
    let pi = std::f64::consts::PI;
    let chi_var = match dims {
        Dims::Xyz => 3.0 - 8.0 / pi,
        Dims::Xy => 2.0 - pi / 2.0,
    };
    fps * sigma * (2.0 * landmarks as f64 * chi_var).sqrt()
}

/// Burst amplitude giving `snr` against the noise-only velocity SD of the
/// upper-body landmarks.
pub fn amplitude_for_snr(snr: f64, noise_sigma: f64, fps: f64, dims: Dims) -> f64 {
    snr * noise_velocity_sd(noise_sigma, fps, UPPER_BODY_MAX_ID as usize + 1, dims)
}

/// Mean norm of `lambda * e + n` for a unit in-plane `e` and `n` standard
/// normal in each coordinate, by tensor-product trapezoid quadrature over the
/// parallel component and the norm of the perpendicular part.
fn mean_offset_norm(lambda: f64, dims: Dims) -> f64 {
    const H: f64 = 0.05;
    const REACH: f64 = 9.0;
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    // Perpendicular part: half-normal in the plane, Rayleigh in space.
    let perp = |r: f64| match dims {
        Dims::Xy => 2.0 * phi(r),
        Dims::Xyz => r * (-0.5 * r * r).exp(),
    };
    let steps = (REACH / H) as i64;
    let mut acc = 0.0;
    for i in -steps..=steps {
        let x = i as f64 * H;
        let wx = phi(x);
        for j in 0..=steps {
            let r = j as f64 * H;
            let wr = if j == 0 { 0.5 * perp(r) } else { perp(r) };
            acc += ((lambda + x).powi(2) + r * r).sqrt() * wx * wr;
        }
    }
    acc * H * H
}

/// Expected rise of the upper-body velocity series at a burst peak of
/// `amplitude`, over its noise-only mean. Noise makes this smaller than
/// `amplitude`, since each moving landmark's frame step is the norm of the
/// burst displacement plus jitter.
pub fn expected_peak_rise(amplitude: f64, noise_sigma: f64, fps: f64, dims: Dims, affected: usize) -> f64 {
    if noise_sigma == 0.0 {
        return amplitude;
    }
    // Per-coordinate SD of one landmark's frame step, in velocity units.
    let step_sd = fps * noise_sigma * 2f64.sqrt();
    let lambda = amplitude / affected as f64 / step_sd;
    affected as f64 * step_sd * (mean_offset_norm(lambda, dims) - mean_offset_norm(0.0, dims))
}

/// Burst amplitude whose expected peak rise in the velocity series is `snr`
/// noise-only velocity SDs. Unlike [`amplitude_for_snr`], this accounts for
/// the loss of pulse height when jitter and motion add inside the norm.
pub fn amplitude_for_effective_snr(snr: f64, noise_sigma: f64, fps: f64, dims: Dims, affected: usize) -> f64 {
    let target = amplitude_for_snr(snr, noise_sigma, fps, dims);
    if noise_sigma == 0.0 || target == 0.0 {
        return target;
    }
    // The rise is increasing in amplitude and never exceeds it.
    let rise = |a: f64| expected_peak_rise(a, noise_sigma, fps, dims, affected);
    let (mut lo, mut hi) = (target, 2.0 * target);
    while rise(hi) < target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if rise(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

struct PlacedBurst {
    peak_ms: f64,
    sigma_ms: f64,
    /// Per-landmark (id, peak speed, unit direction in the image plane).
    movers: Vec<(u8, f64, [f64; 2])>,
}

impl PlacedBurst {
    fn extent(&self) -> (f64, f64) {
        let half = BURST_EXTENT_SIGMAS * self.sigma_ms;
        (self.peak_ms - half, self.peak_ms + half)
    }

    fn speed_scale(&self, t_ms: f64) -> f64 {
        let d = (t_ms - self.peak_ms) / self.sigma_ms;
        (-0.5 * d * d).exp()
    }
}

pub fn gen_pose_stream(spec: &StreamSpec, seed: u64) -> Result<SyntheticStream, SpecError> {
    if !(spec.fps.is_finite() && spec.fps > 0.0) {
        return Err(SpecError::BadParams(format!("fps {}", spec.fps)));
    }
    if !(spec.duration_ms.is_finite() && spec.duration_ms > 0.0) {
        return Err(SpecError::BadParams(format!("duration {} ms", spec.duration_ms)));
    }
    if !(spec.noise.sigma.is_finite() && spec.noise.sigma >= 0.0) {
        return Err(SpecError::BadParams(format!("noise sigma {}", spec.noise.sigma)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frame_ms = 1000.0 / spec.fps;
    let n_frames = (spec.duration_ms / frame_ms).round() as usize;

    // Resting pose.
    let rest: Vec<[f64; 3]> = (0..LANDMARK_COUNT)
        .map(|_| {
            [
                rng.random_range(0.3..0.7),
                rng.random_range(0.2..0.8),
                rng.random_range(-0.2..0.2),
            ]
        })
        .collect();

    let mut placed: Vec<(usize, PlacedBurst)> = Vec::new();
    let mut truth = Vec::new();
    for (wi, w) in spec.warnings.iter().enumerate() {
        for b in &w.bursts {
            b.validate()?;
            let peak_ms = w.t_ms + b.onset_ms + b.peak_offset();
            let share = b.burst_amplitude / b.affected_landmarks.len() as f64;
            let movers = b
                .affected_landmarks
                .iter()
                .map(|&id| {
                    let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                    (id, share, [theta.cos(), theta.sin()])
                })
                .collect();
            let burst = PlacedBurst {
                peak_ms,
                sigma_ms: b.burst_sigma_ms,
                movers,
            };
            let (_, end) = burst.extent();
            if end > spec.duration_ms {
                return Err(SpecError::OutOfStream {
                    warning: wi,
                    end_ms: end,
                    duration_ms: spec.duration_ms,
                });
            }
            if let Some((other, _)) = placed.iter().find(|(_, p)| {
                let (a0, a1) = p.extent();
                let (b0, b1) = burst.extent();
                a0 < b1 && b0 < a1
            }) {
                return Err(SpecError::Overlap { a: *other, b: wi });
            }
            truth.push(BurstTruth {
                warning_index: wi,
                warning_ms: w.t_ms,
                onset_ms: b.onset_ms,
                peak_ms,
                sigma_ms: b.burst_sigma_ms,
                amplitude: b.burst_amplitude,
            });
            placed.push((wi, burst));
        }
    }

    // Integrate the speed pulses: displacement over frame i-1 -> i is the
    // speed at t_i times the frame duration.
    let mut offset = vec![[0.0f64; 2]; LANDMARK_COUNT];
    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.noise.seed);
    let noise = Normal::new(0.0, spec.noise.sigma).expect("validated sigma");
    let dt_s = frame_ms / 1000.0;
    let mut frames = Vec::with_capacity(n_frames);
    for i in 0..n_frames {
        let t = i as f64 * frame_ms;
        if i > 0 {
            for (_, burst) in &placed {
                let s = burst.speed_scale(t);
                if s < 1e-300 {
                    continue;
                }
                for &(id, amp, dir) in &burst.movers {
                    let step = amp * s * dt_s;
                    offset[id as usize][0] += step * dir[0];
                    offset[id as usize][1] += step * dir[1];
                }
            }
        }
        let landmarks = (0..LANDMARK_COUNT)
            .map(|id| {
                let r = rest[id];
                let o = offset[id];
                let mut jitter = || {
                    if spec.noise.sigma > 0.0 {
                        noise.sample(&mut noise_rng)
                    } else {
                        0.0
                    }
                };
                Landmark::new(id as u8, r[0] + o[0] + jitter(), r[1] + o[1] + jitter(), r[2] + jitter())
            })
            .collect();
        frames.push(PoseFrame {
            frame_index: i as u64,
            timestamp_ms: t,
            landmarks,
        });
    }
    Ok(SyntheticStream {
        stream: PoseStream {
            source_id: spec.source_id.clone(),
            nominal_fps: spec.fps,
            frames,
            timestamps_synthesized: false,
        },
        truth,
    })
}

// ---------------------------------------------------------------------------
// Reaction-time datasets

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub setting: Setting,
    pub modality: Modality,
    pub method: Method,
    pub mean_ms: f64,
    pub sd_ms: f64,
    pub n: usize,
    #[serde(default = "one")]
    pub trial: u32,
    /// Share the participant-level effect with the other correlated cells.
    #[serde(default)]
    pub correlated: bool,
}

fn one() -> u32 {
    1
}

impl CellSpec {
    pub fn srt(setting: Setting, modality: Modality, mean_ms: f64, sd_ms: f64, n: usize) -> Self {
        CellSpec {
            setting,
            modality,
            method: Method::SRT,
            mean_ms,
            sd_ms,
            n,
            trial: 1,
            correlated: false,
        }
    }
}

pub fn participant_id(i: usize) -> String {
    format!("P{:02}", i + 1)
}

/// Published group means and SDs per setting and modality, with the group
/// sizes of each setting. The HAV cell of the VR-with-traffic setting is
/// marked correlated so vision cells can be paired against it.
pub fn reference_srt_cells() -> Vec<CellSpec> {
    use Modality::*;
    use Setting::*;
    let table: [(Setting, usize, [(Modality, f64, f64); 4]); 4] = [
        (Baseline, 32, [(V, 410.0, 105.0), (AV, 422.0, 122.0), (HV, 359.0, 145.0), (HAV, 365.0, 149.0)]),
        (AR, 34, [(V, 597.0, 232.0), (AV, 627.0, 249.0), (HV, 530.0, 245.0), (HAV, 574.0, 273.0)]),
        (VrWot, 32, [(V, 489.0, 159.0), (AV, 483.0, 162.0), (HV, 410.0, 184.0), (HAV, 411.0, 127.0)]),
        (VrWt, 32, [(V, 493.0, 177.0), (AV, 477.0, 108.0), (HV, 411.0, 149.0), (HAV, 438.0, 154.0)]),
    ];
    let mut out = Vec::new();
    for (setting, n, cells) in table {
        for (modality, mean, sd) in cells {
            let mut c = CellSpec::srt(setting, modality, mean, sd, n);
            c.correlated = setting == VrWt && modality == HAV;
            out.push(c);
        }
    }
    out
}

/// Vision-measured reaction times for the two warnings of the vision
/// experiment (21 participants).
pub fn reference_vision_cells() -> Vec<CellSpec> {
    [(1, 490.0, 330.0), (2, 370.0, 220.0)]
        .into_iter()
        .map(|(trial, mean_ms, sd_ms)| CellSpec {
            setting: Setting::VisionE,
            modality: Modality::HAV,
            method: Method::Vision,
            mean_ms,
            sd_ms,
            n: 21,
            trial,
            correlated: true,
        })
        .collect()
}

/// Default participant-level correlation between correlated cells.
pub const DEFAULT_RHO: f64 = 0.5;

/// Draw one record per participant per cell. Participants are `P01..Pn`
/// within each cell. Values are normal with the cell's mean and SD,
/// truncated below at [`SRT_FLOOR_MS`]. In correlated cells a participant's
/// standardized draw is `sqrt(rho) * z_p + sqrt(1 - rho) * e`, with `z_p`
/// shared across those cells.
pub fn gen_srt_dataset(cells: &[CellSpec], seed: u64, rho: f64) -> Result<Vec<ReactionRecord>, SpecError> {
    if !(0.0..1.0).contains(&rho) {
        return Err(SpecError::BadParams(format!("rho {rho} outside [0, 1)")));
    }
    for c in cells {
        if !(c.sd_ms.is_finite() && c.sd_ms >= 0.0 && c.mean_ms.is_finite()) || c.n == 0 {
            return Err(SpecError::BadParams(format!(
                "cell {} {}: mean {} sd {} n {}",
                c.setting, c.modality, c.mean_ms, c.sd_ms, c.n
            )));
        }
        if c.mean_ms < SRT_FLOOR_MS {
            return Err(SpecError::BadParams(format!(
                "cell {} {}: mean {} below the {SRT_FLOOR_MS} ms floor",
                c.setting, c.modality, c.mean_ms
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_n = cells.iter().filter(|c| c.correlated).map(|c| c.n).max().unwrap_or(0);
    let latent: Vec<f64> = (0..max_n).map(|_| rng.sample(StandardNormal)).collect();
    let (w_shared, w_own) = (rho.sqrt(), (1.0 - rho).sqrt());

    let mut out = Vec::new();
    for c in cells {
        for p in 0..c.n {
            let shared = if c.correlated { w_shared * latent[p] } else { 0.0 };
            let own_w = if c.correlated { w_own } else { 1.0 };
            let mut rt = None;
            for _ in 0..1000 {
                let e: f64 = rng.sample(StandardNormal);
                let v = c.mean_ms + c.sd_ms * (shared + own_w * e);
                if v >= SRT_FLOOR_MS {
                    rt = Some(v);
                    break;
                }
            }
            out.push(ReactionRecord {
                participant: participant_id(p),
                setting: c.setting,
                modality: c.modality,
                method: c.method,
                rt_ms: rt.unwrap_or(SRT_FLOOR_MS),
                trial: c.trial,
            });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Complete vision session

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub participants: usize,
    pub duration_ms: f64,
    pub fps: f64,
    pub warnings_ms: Vec<f64>,
    pub noise_sigma: f64,
    /// Expected pulse rise in the velocity series over the noise-only
    /// velocity SD.
    pub snr: f64,
    /// Search-window length the onsets must fit into.
    pub window_ms: f64,
    pub rho: f64,
}

impl Default for SessionSpec {
    fn default() -> Self {
        SessionSpec {
            participants: 21,
            duration_ms: 60_000.0,
            fps: 30.0,
            warnings_ms: vec![25_000.0, 45_000.0],
            noise_sigma: 0.002,
            snr: 10.0,
            window_ms: 1000.0,
            rho: DEFAULT_RHO,
        }
    }
}

/// Kernel durations are kept in this range so every kernel fits the window.
pub const BASELINE_CLAMP_MS: (f64, f64) = (150.0, 800.0);

#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantSession {
    pub participant: String,
    /// Kernel duration for this participant.
    pub baseline_rt_ms: f64,
    pub stream: SyntheticStream,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub participants: Vec<ParticipantSession>,
    /// Trigger/response records for every setting and modality.
    pub srt_records: Vec<ReactionRecord>,
}

/// Synthetic vision experiment. SRT records come from the reference cells;
/// each vision participant's kernel duration is their own HAV time in the
/// VR-with-traffic setting, and their injected onsets are drawn from the
/// vision cells (correlated with that baseline) and clamped so the whole
/// burst peak lands inside the search window.
pub fn gen_session(spec: &SessionSpec, seed: u64) -> Result<Session, SpecError> {
    let mut srt_cells = reference_srt_cells();
    let mut vision_cells = reference_vision_cells();
    for c in &mut vision_cells {
        c.n = spec.participants;
    }
    if vision_cells.len() != spec.warnings_ms.len() {
        return Err(SpecError::BadParams(format!(
            "{} warnings but {} vision trials",
            spec.warnings_ms.len(),
            vision_cells.len()
        )));
    }
    for c in &mut srt_cells {
        if c.correlated {
            c.n = c.n.max(spec.participants);
        }
    }
    let mut cells = srt_cells;
    cells.extend(vision_cells);
    let records = gen_srt_dataset(&cells, seed, spec.rho)?;
    let (srt_records, vision): (Vec<_>, Vec<_>) = records.into_iter().partition(|r| r.method == Method::SRT);

    let baseline: BTreeMap<&str, f64> = srt_records
        .iter()
        .filter(|r| r.setting == Setting::VrWt && r.modality == Modality::HAV)
        .map(|r| (r.participant.as_str(), r.rt_ms))
        .collect();
    let frame_ms = 1000.0 / spec.fps;
    let amplitude =
        amplitude_for_effective_snr(spec.snr, spec.noise_sigma, spec.fps, Dims::default(), DEFAULT_AFFECTED.len());
    let mut participants = Vec::new();
    for p in 0..spec.participants {
        let id = participant_id(p);
        let d = baseline[id.as_str()].round().clamp(BASELINE_CLAMP_MS.0, BASELINE_CLAMP_MS.1);
        let max_onset = spec.window_ms - d / 2.0 - 2.0 * frame_ms;
        let warnings = spec
            .warnings_ms
            .iter()
            .enumerate()
            .map(|(k, &t_ms)| {
                let drawn = vision
                    .iter()
                    .find(|r| r.participant == id && r.trial == k as u32 + 1)
                    .map(|r| r.rt_ms)
                    .expect("one vision record per participant and trial");
                let onset = drawn.round().clamp(SRT_FLOOR_MS, max_onset);
                WarningSpec {
                    t_ms,
                    bursts: vec![BurstSpec::matched(onset, d, amplitude)],
                }
            })
            .collect();
        let stream_spec = StreamSpec {
            source_id: id.clone(),
            duration_ms: spec.duration_ms,
            fps: spec.fps,
            warnings,
            noise: NoiseSpec {
                sigma: spec.noise_sigma,
                seed: seed.wrapping_add(1 + p as u64),
            },
        };
        let stream = gen_pose_stream(&stream_spec, seed.wrapping_mul(31).wrapping_add(p as u64))?;
        participants.push(ParticipantSession {
            participant: id,
            baseline_rt_ms: d,
            stream,
        });
    }
    Ok(Session {
        participants,
        srt_records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::velocity_series;
    use crate::pose::select_upper_body;

    fn one_burst(onset: f64, sigma: f64, noise: f64) -> StreamSpec {
        StreamSpec {
            source_id: "s".into(),
            duration_ms: 10_000.0,
            fps: 30.0,
            warnings: vec![WarningSpec {
                t_ms: 3000.0,
                bursts: vec![BurstSpec::new(onset, sigma, 2.0)],
            }],
            noise: NoiseSpec { sigma: noise, seed: 1 },
        }
    }

    #[test]
    fn static_stream_without_bursts() {
        let mut spec = one_burst(0.0, 50.0, 0.0);
        spec.warnings.clear();
        let s = gen_pose_stream(&spec, 3).unwrap();
        assert_eq!(s.stream.len(), 300);
        let v = velocity_series(&s.stream, Dims::Xyz).unwrap();
        assert!(v.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn noise_free_velocity_is_the_sampled_pulse() {
        let s = gen_pose_stream(&one_burst(400.0, 50.0, 0.0), 9).unwrap();
        let peak = s.truth[0].peak_ms;
        assert_eq!(peak, 3000.0 + 400.0 + 200.0);
        let v = velocity_series(&select_upper_body(&s.stream), Dims::Xyz).unwrap();
        for sample in &v.samples {
            let d = (sample.t_ms - peak) / 50.0;
            let expected = 2.0 * (-0.5 * d * d).exp();
            assert!((sample.v - expected).abs() < 1e-9, "t={} {} vs {}", sample.t_ms, sample.v, expected);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = gen_pose_stream(&one_burst(400.0, 50.0, 0.01), 5).unwrap();
        let b = gen_pose_stream(&one_burst(400.0, 50.0, 0.01), 5).unwrap();
        let c = gen_pose_stream(&one_burst(400.0, 50.0, 0.01), 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.stream.frames, c.stream.frames);
    }

    #[test]
    fn spec_errors() {
        let mut spec = one_burst(400.0, 50.0, 0.0);
        spec.warnings[0].bursts.push(BurstSpec::new(450.0, 50.0, 1.0));
        assert_eq!(gen_pose_stream(&spec, 1), Err(SpecError::Overlap { a: 0, b: 0 }));

        let spec = one_burst(6900.0, 50.0, 0.0);
        assert!(matches!(gen_pose_stream(&spec, 1), Err(SpecError::OutOfStream { .. })));

        let mut spec = one_burst(400.0, 50.0, 0.0);
        spec.warnings[0].bursts[0].burst_amplitude = 0.0;
        assert!(matches!(gen_pose_stream(&spec, 1), Err(SpecError::BadParams(_))));
        spec.warnings[0].bursts[0].burst_amplitude = 1.0;
        spec.warnings[0].bursts[0].affected_landmarks = vec![30];
        assert!(matches!(gen_pose_stream(&spec, 1), Err(SpecError::BadParams(_))));
    }

    #[test]
    fn srt_cell_shape_and_floor() {
        let cells = [CellSpec::srt(Setting::VrWt, Modality::HAV, 438.0, 154.0, 32)];
        let recs = gen_srt_dataset(&cells, 11, DEFAULT_RHO).unwrap();
        assert_eq!(recs.len(), 32);
        assert!(recs.iter().all(|r| r.rt_ms >= SRT_FLOOR_MS));
        assert_eq!(recs[0].participant, "P01");
        assert_eq!(recs[31].participant, "P32");
    }

    #[test]
    fn zero_sd_gives_the_mean() {
        let cells = [CellSpec::srt(Setting::AR, Modality::V, 597.0, 0.0, 5)];
        let recs = gen_srt_dataset(&cells, 1, 0.0).unwrap();
        assert!(recs.iter().all(|r| r.rt_ms == 597.0));
    }

    #[test]
    fn bad_srt_params() {
        let mut c = CellSpec::srt(Setting::AR, Modality::V, 597.0, -1.0, 5);
        assert!(gen_srt_dataset(std::slice::from_ref(&c), 1, 0.0).is_err());
        c.sd_ms = 1.0;
        assert!(gen_srt_dataset(std::slice::from_ref(&c), 1, 1.0).is_err());
        c.n = 0;
        assert!(gen_srt_dataset(&[c], 1, 0.0).is_err());
    }

    #[test]
    fn reference_cells_cover_the_grid() {
        let cells = reference_srt_cells();
        assert_eq!(cells.len(), 16);
        assert_eq!(cells.iter().filter(|c| c.correlated).count(), 1);
        let ar_v = cells.iter().find(|c| c.setting == Setting::AR && c.modality == Modality::V).unwrap();
        assert_eq!((ar_v.mean_ms, ar_v.sd_ms, ar_v.n), (597.0, 232.0, 34));
    }

    #[test]
    fn noise_sd_formula_matches_simulation() {
        let sigma = 0.01;
        let spec = StreamSpec {
            source_id: "n".into(),
            duration_ms: 200_000.0,
            fps: 30.0,
            warnings: vec![],
            noise: NoiseSpec { sigma, seed: 4 },
        };
        let s = gen_pose_stream(&spec, 4).unwrap();
        let v = velocity_series(&select_upper_body(&s.stream), Dims::Xyz).unwrap().values();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let sd = (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt();
        let expected = noise_velocity_sd(sigma, 30.0, 25, Dims::Xyz);
        assert!((sd / expected - 1.0).abs() < 0.05, "{sd} vs {expected}");
    }

    #[test]
    fn mean_offset_norm_limits() {
        let pi = std::f64::consts::PI;
        assert!((mean_offset_norm(0.0, Dims::Xyz) - 2.0 * (2.0 / pi).sqrt()).abs() < 1e-3);
        assert!((mean_offset_norm(0.0, Dims::Xy) - (pi / 2.0).sqrt()).abs() < 1e-3);
        // Jensen bounds the mean norm by the root mean square norm.
        let far = mean_offset_norm(6.0, Dims::Xyz);
        assert!(far > 6.0 && far < (36.0f64 + 3.0).sqrt());
    }

    #[test]
    fn effective_amplitude_gives_the_target_rise() {
        let (sigma, fps, snr) = (0.002, 30.0, 5.0);
        let affected = DEFAULT_AFFECTED.len();
        let amp = amplitude_for_effective_snr(snr, sigma, fps, Dims::Xyz, affected);
        assert!(amp > amplitude_for_snr(snr, sigma, fps, Dims::Xyz));
        let mut rise = 0.0;
        let seeds = 400u64;
        for seed in 0..seeds {
            let mut spec = one_burst(300.0, 56.0, sigma);
            spec.duration_ms = 4000.0;
            spec.warnings[0].t_ms = 1000.0;
            spec.warnings[0].bursts[0].peak_offset_ms = Some(200.0);
            spec.warnings[0].bursts[0].burst_amplitude = amp;
            spec.noise.seed = seed;
            let s = gen_pose_stream(&spec, seed).unwrap();
            let v = velocity_series(&select_upper_body(&s.stream), Dims::Xyz).unwrap();
            let peak = s.truth[0].peak_ms;
            let at = v
                .samples
                .iter()
                .min_by(|a, b| (a.t_ms - peak).abs().total_cmp(&(b.t_ms - peak).abs()))
                .unwrap();
            // Noise-only reference: a frame well before the warning.
            rise += at.v - v.samples[5].v;
        }
        let observed = rise / seeds as f64 / noise_velocity_sd(sigma, fps, 25, Dims::Xyz);
        assert!((observed / snr - 1.0).abs() < 0.08, "observed {observed}");
    }
}
