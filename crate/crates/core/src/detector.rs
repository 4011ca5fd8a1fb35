//! Gaussian matched-filter detection of reaction onsets in velocity series.
//!
//! Each participant gets a kernel whose duration `D` is their baseline
//! reaction time to the haptic-audio-visual warning. The kernel is centred at
//! `D / 2` with standard deviation `D / 8` and unit amplitude. The velocity
//! series is convolved with it, the maximum of the convolution inside the
//! post-warning search window gives `t_max`, and the reaction time is
//! `t_max - D / 2`.
//!
//! Convolution output is "same"-aligned: output sample `n` corresponds to the
//! kernel centre placed at input sample `n`. For kernels with an even number
//! of samples the centre falls half a sample before `n`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{velocity_series, Dims, KinematicsError, VelocitySeries};
use crate::pose::{select_upper_body, PoseStream, GAP_TOLERANCE};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DetectError {
    #[error("kernel of {duration_ms} ms at {frame_ms} ms/frame has fewer than 3 samples")]
    KernelTooShort { duration_ms: f64, frame_ms: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("series of {series} samples is shorter than the {kernel}-sample kernel")]
    Length { series: usize, kernel: usize },
    #[error("search window of {window} frames cannot hold the {kernel}-sample kernel")]
    WindowTooShort { window: usize, kernel: usize },
    #[error("search window starting at {start_ms} ms extends past the fully-overlapped part of the series")]
    WindowOutOfRange { start_ms: f64 },
    #[error("convolution is constant inside the search window")]
    FlatSignal,
    #[error("search window starting at {start_ms} ms contains a frame gap")]
    GapInWindow { start_ms: f64 },
    #[error("t_max {t_max_ms} ms is earlier than half the kernel duration ({half_ms} ms)")]
    NegativeOnset { t_max_ms: f64, half_ms: f64 },
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

// ---------------------------------------------------------------------------
// Kernel

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianKernel {
    pub duration_ms: f64,
    pub mu_ms: f64,
    pub sigma_ms: f64,
    pub amplitude: f64,
    pub frame_ms: f64,
    /// Kernel evaluated on a frame-spaced grid placed symmetrically about `mu_ms`.
    pub samples: Vec<f64>,
}

impl GaussianKernel {
    pub fn value_at(&self, t_ms: f64) -> f64 {
        let d = t_ms - self.mu_ms;
        self.amplitude * (-(d * d) / (2.0 * self.sigma_ms * self.sigma_ms)).exp()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Index of the output alignment sample used by "same" convolution.
    pub fn center_index(&self) -> usize {
        (self.samples.len() - 1) / 2
    }

    /// Time of each sample, in ms from the kernel start.
    pub fn sample_times(&self) -> Vec<f64> {
        let half = (self.samples.len() - 1) as f64 / 2.0;
        (0..self.samples.len())
            .map(|i| self.mu_ms + (i as f64 - half) * self.frame_ms)
            .collect()
    }

    pub fn sum(&self) -> f64 {
        self.samples.iter().sum()
    }
}

pub fn build_kernel(baseline_rt_ms: f64, frame_ms: f64) -> Result<GaussianKernel, DetectError> {
    if !(baseline_rt_ms.is_finite() && baseline_rt_ms > 0.0) {
        return Err(DetectError::InvalidParameter(format!("baseline {baseline_rt_ms} ms")));
    }
    if !(frame_ms.is_finite() && frame_ms > 0.0) {
        return Err(DetectError::InvalidParameter(format!("frame duration {frame_ms} ms")));
    }
    let len = (baseline_rt_ms / frame_ms).round() as usize + 1;
    if baseline_rt_ms < 3.0 * frame_ms || len < 3 {
        return Err(DetectError::KernelTooShort {
            duration_ms: baseline_rt_ms,
            frame_ms,
        });
    }
    let duration_ms = baseline_rt_ms;
    let mu_ms = duration_ms / 2.0;
    let sigma_ms = duration_ms / 8.0;
    let amplitude = 1.0;
    // Offsets (i - half) are exact negations of each other for mirrored i,
    // so the sampled kernel is exactly symmetric.
    let half = (len - 1) as f64 / 2.0;
    let samples = (0..len)
        .map(|i| {
            let d = (i as f64 - half) * frame_ms;
            amplitude * (-(d * d) / (2.0 * sigma_ms * sigma_ms)).exp()
        })
        .collect();
    Ok(GaussianKernel {
        duration_ms,
        mu_ms,
        sigma_ms,
        amplitude,
        frame_ms,
        samples,
    })
}

// ---------------------------------------------------------------------------
// Search window

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchWindow {
    pub start_ms: f64,
    pub length_frames: usize,
    pub length_ms: f64,
}

impl SearchWindow {
    pub fn from_frames(start_ms: f64, length_frames: usize, frame_ms: f64) -> Self {
        SearchWindow {
            start_ms,
            length_frames,
            length_ms: length_frames as f64 * frame_ms,
        }
    }

    pub fn at(self, start_ms: f64) -> Self {
        SearchWindow { start_ms, ..self }
    }
}

/// Baseline reaction-time statistics the window length is derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineStats {
    pub mean_ms: f64,
    pub sd_ms: f64,
}

impl Default for BaselineStats {
    /// Haptic-audio-visual warning in VR with traffic: 438 ms, SD 154 ms.
    fn default() -> Self {
        BaselineStats {
            mean_ms: 438.0,
            sd_ms: 154.0,
        }
    }
}

/// Window covering `mean + 3 sd`, rounded up to a whole second. Starts at 0;
/// place it with [`SearchWindow::at`].
pub fn default_window(baseline_mean_ms: f64, baseline_sd_ms: f64, frame_ms: f64) -> SearchWindow {
    let span = baseline_mean_ms + 3.0 * baseline_sd_ms;
    let length_ms = (span / 1000.0).ceil() * 1000.0;
    SearchWindow {
        start_ms: 0.0,
        length_frames: (length_ms / frame_ms).round() as usize,
        length_ms,
    }
}

// ---------------------------------------------------------------------------
// Convolution

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvMethod {
    #[default]
    Direct,
    Fft,
}

impl FromStr for ConvMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "direct" => Ok(ConvMethod::Direct),
            "fft" => Ok(ConvMethod::Fft),
            other => Err(format!("unknown convolution method `{other}`")),
        }
    }
}

impl fmt::Display for ConvMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConvMethod::Direct => "direct",
            ConvMethod::Fft => "fft",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionSeries {
    /// Time of the kernel centre for each output sample.
    pub times_ms: Vec<f64>,
    pub values: Vec<f64>,
    pub frame_ms: f64,
    pub kernel_len: usize,
    pub center: usize,
}

impl ConvolutionSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Output indices whose kernel placement lies entirely inside the input,
    /// so no zero padding contributes.
    pub fn valid_range(&self) -> std::ops::RangeInclusive<usize> {
        let right = self.kernel_len - 1 - self.center;
        self.center..=self.values.len().saturating_sub(right + 1)
    }
}

/// "Same"-aligned linear convolution with zero padding.
pub fn convolve_same_direct(x: &[f64], kernel: &[f64]) -> Vec<f64> {
    let n = x.len() as isize;
    let c = ((kernel.len() - 1) / 2) as isize;
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (m, &k) in kernel.iter().enumerate() {
                let j = i + c - m as isize;
                if (0..n).contains(&j) {
                    acc += x[j as usize] * k;
                }
            }
            acc
        })
        .collect()
}

/// Same result as [`convolve_same_direct`], computed through a zero-padded FFT.
pub fn convolve_same_fft(x: &[f64], kernel: &[f64]) -> Vec<f64> {
    let full = x.len() + kernel.len() - 1;
    let size = full.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward: Arc<dyn rustfft::Fft<f64>> = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);

    let pad = |v: &[f64]| {
        let mut buf: Vec<Complex<f64>> = v.iter().map(|&r| Complex::new(r, 0.0)).collect();
        buf.resize(size, Complex::new(0.0, 0.0));
        buf
    };
    let mut xs = pad(x);
    let mut ks = pad(kernel);
    forward.process(&mut xs);
    forward.process(&mut ks);
    for (a, b) in xs.iter_mut().zip(&ks) {
        *a *= b;
    }
    inverse.process(&mut xs);
    let scale = 1.0 / size as f64;
    let c = (kernel.len() - 1) / 2;
    xs[c..c + x.len()].iter().map(|z| z.re * scale).collect()
}

pub fn convolve(series: &VelocitySeries, kernel: &GaussianKernel, method: ConvMethod) -> Result<ConvolutionSeries, DetectError> {
    if series.len() < kernel.len() {
        return Err(DetectError::Length {
            series: series.len(),
            kernel: kernel.len(),
        });
    }
    let x = series.values();
    let values = match method {
        ConvMethod::Direct => convolve_same_direct(&x, &kernel.samples),
        ConvMethod::Fft => convolve_same_fft(&x, &kernel.samples),
    };
    // An even-length kernel is centred between two samples, half a frame
    // before the "same" alignment sample. Label each output with the time
    // its kernel centre actually sits at.
    let lag_ms = ((kernel.len() - 1) as f64 / 2.0 - kernel.center_index() as f64) * series.frame_ms();
    Ok(ConvolutionSeries {
        times_ms: series.times().into_iter().map(|t| t - lag_ms).collect(),
        values,
        frame_ms: series.frame_ms(),
        kernel_len: kernel.len(),
        center: kernel.center_index(),
    })
}

// ---------------------------------------------------------------------------
// Peak and reaction time

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    /// Relative to the window start.
    pub t_max_ms: f64,
    pub value: f64,
}

/// Index range of `conv` covered by `window`: the first sample at or after
/// the window start and the following `length_frames` samples.
fn window_indices(conv: &ConvolutionSeries, window: &SearchWindow) -> Result<(usize, usize), DetectError> {
    let eps = conv.frame_ms * 1e-6;
    let out_of_range = DetectError::WindowOutOfRange {
        start_ms: window.start_ms,
    };
    let first = conv
        .times_ms
        .iter()
        .position(|&t| t >= window.start_ms - eps)
        .ok_or(out_of_range.clone())?;
    let last = first + window.length_frames;
    let valid = conv.valid_range();
    if first < *valid.start() || last > *valid.end() || last >= conv.len() {
        return Err(out_of_range);
    }
    Ok((first, last))
}

/// Time of the largest convolution value inside the window. Ties go to the
/// earliest sample.
pub fn locate_peak(conv: &ConvolutionSeries, window: &SearchWindow) -> Result<Peak, DetectError> {
    let (first, last) = window_indices(conv, window)?;
    let gap_limit = conv.frame_ms * (1.0 + GAP_TOLERANCE);
    if conv.times_ms[first..=last].windows(2).any(|w| w[1] - w[0] > gap_limit) {
        return Err(DetectError::GapInWindow {
            start_ms: window.start_ms,
        });
    }
    let slice = &conv.values[first..=last];
    let (mut best, mut best_val) = (0, slice[0]);
    let mut min_val = slice[0];
    for (i, &v) in slice.iter().enumerate().skip(1) {
        if v > best_val {
            best = i;
            best_val = v;
        }
        min_val = min_val.min(v);
    }
    let spread = best_val - min_val;
    if !(spread > 1e-12 * best_val.abs().max(min_val.abs())) {
        return Err(DetectError::FlatSignal);
    }
    let index = first + best;
    Ok(Peak {
        index,
        t_max_ms: conv.times_ms[index] - window.start_ms,
        value: best_val,
    })
}

/// Onset time: the kernel peak sits half its duration after the onset.
pub fn reaction_time(t_max_ms: f64, kernel: &GaussianKernel) -> Result<f64, DetectError> {
    let half_ms = kernel.duration_ms / 2.0;
    if t_max_ms < half_ms {
        return Err(DetectError::NegativeOnset { t_max_ms, half_ms });
    }
    Ok(t_max_ms - half_ms)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionEstimate {
    /// Time of the convolution maximum, relative to warning delivery.
    pub t_max_ms: f64,
    pub rt_ms: f64,
    pub peak_value: f64,
    pub kernel: GaussianKernel,
    pub window: SearchWindow,
}

/// A reaction estimate together with the intermediate signals it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub estimate: ReactionEstimate,
    pub velocity: VelocitySeries,
    pub convolution: ConvolutionSeries,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub dims: Dims,
    pub method: ConvMethod,
}

/// Per-participant detector: one kernel, any number of warnings.
#[derive(Debug, Clone)]
pub struct Detector {
    pub config: DetectorConfig,
    pub kernel: GaussianKernel,
    pub window: SearchWindow,
}

impl Detector {
    pub fn new(config: DetectorConfig, baseline_rt_ms: f64, stats: BaselineStats, frame_ms: f64) -> Result<Self, DetectError> {
        let kernel = build_kernel(baseline_rt_ms, frame_ms)?;
        let window = default_window(stats.mean_ms, stats.sd_ms, frame_ms);
        if window.length_frames < kernel.len() {
            return Err(DetectError::WindowTooShort {
                window: window.length_frames,
                kernel: kernel.len(),
            });
        }
        Ok(Detector { config, kernel, window })
    }

    /// Run the detector on an already-computed velocity series.
    pub fn detect_velocity(&self, velocity: &VelocitySeries, warning_t_ms: f64) -> Result<Detection, DetectError> {
        let convolution = convolve(velocity, &self.kernel, self.config.method)?;
        let window = self.window.at(warning_t_ms);
        let peak = locate_peak(&convolution, &window)?;
        let rt_ms = reaction_time(peak.t_max_ms, &self.kernel)?;
        Ok(Detection {
            estimate: ReactionEstimate {
                t_max_ms: peak.t_max_ms,
                rt_ms,
                peak_value: peak.value,
                kernel: self.kernel.clone(),
                window,
            },
            velocity: velocity.clone(),
            convolution,
        })
    }

    /// Full pipeline on a raw pose stream, one result per warning.
    ///
    /// Streams with frame gaps are split into gap-free segments; a warning
    /// whose window (plus kernel margin) crosses a gap fails with
    /// [`DetectError::GapInWindow`].
    pub fn detect_stream(&self, stream: &PoseStream, warnings_ms: &[f64]) -> Vec<Result<Detection, DetectError>> {
        let upper = select_upper_body(stream);
        let segments: Result<Vec<_>, _> = upper
            .split_at_gaps()
            .into_iter()
            .filter(|s| s.len() >= 2)
            .map(|s| velocity_series(&s, self.config.dims))
            .collect();
        let velocities = match segments {
            Ok(v) => v,
            Err(e) => return warnings_ms.iter().map(|_| Err(e.clone().into())).collect(),
        };
        let span = |v: &VelocitySeries| (v.samples[0].t_ms, v.samples[v.len() - 1].t_ms);
        warnings_ms
            .iter()
            .map(|&w| {
                match velocities.iter().position(|v| {
                    let (first, last) = span(v);
                    w >= first && w <= last
                }) {
                    Some(i) => match self.detect_velocity(&velocities[i], w) {
                        Err(DetectError::WindowOutOfRange { start_ms }) if i + 1 < velocities.len() => {
                            Err(DetectError::GapInWindow { start_ms })
                        }
                        other => other,
                    },
                    None => {
                        let inside = velocities.first().is_some_and(|v| w >= span(v).0)
                            && velocities.last().is_some_and(|v| w <= span(v).1);
                        if inside {
                            Err(DetectError::GapInWindow { start_ms: w })
                        } else {
                            Err(DetectError::WindowOutOfRange { start_ms: w })
                        }
                    }
                }
            })
            .collect()
    }
}

/// End-to-end detection for a single warning.
pub fn detect(
    stream: &PoseStream,
    warning_t_ms: f64,
    baseline_rt_ms: f64,
    baseline_stats: BaselineStats,
    config: DetectorConfig,
) -> Result<Detection, DetectError> {
    let detector = Detector::new(config, baseline_rt_ms, baseline_stats, stream.frame_ms())?;
    detector
        .detect_stream(stream, &[warning_t_ms])
        .pop()
        .expect("one warning in, one result out")
}

// ---------------------------------------------------------------------------
// Report

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceData {
    pub t_ms: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarningReport {
    pub warning_index: usize,
    pub warning_ms: f64,
    #[serde(flatten)]
    pub outcome: WarningOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum WarningOutcome {
    Detected {
        window: SearchWindow,
        t_max_ms: f64,
        rt_ms: f64,
        peak_value: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trace: Option<TraceData>,
    },
    Failed {
        error: String,
    },
}

/// Per-participant detection report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub participant: String,
    pub dims: Dims,
    pub method: ConvMethod,
    pub kernel: KernelSummary,
    pub formula: String,
    pub warnings: Vec<WarningReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSummary {
    pub duration_ms: f64,
    pub mu_ms: f64,
    pub sigma_ms: f64,
    pub amplitude: f64,
    pub frame_ms: f64,
    pub samples: Vec<f64>,
}

impl From<&GaussianKernel> for KernelSummary {
    fn from(k: &GaussianKernel) -> Self {
        KernelSummary {
            duration_ms: k.duration_ms,
            mu_ms: k.mu_ms,
            sigma_ms: k.sigma_ms,
            amplitude: k.amplitude,
            frame_ms: k.frame_ms,
            samples: k.samples.clone(),
        }
    }
}

pub const RT_FORMULA: &str = "rt_ms = t_max_ms - kernel.duration_ms / 2";

impl DetectionReport {
    pub fn new(participant: &str, detector: &Detector, warnings_ms: &[f64], results: &[Result<Detection, DetectError>], with_trace: bool) -> Self {
        let warnings = warnings_ms
            .iter()
            .zip(results)
            .enumerate()
            .map(|(i, (&w, r))| WarningReport {
                warning_index: i + 1,
                warning_ms: w,
                outcome: match r {
                    Ok(d) => WarningOutcome::Detected {
                        window: d.estimate.window,
                        t_max_ms: d.estimate.t_max_ms,
                        rt_ms: d.estimate.rt_ms,
                        peak_value: d.estimate.peak_value,
                        trace: with_trace.then(|| TraceData {
                            t_ms: d.convolution.times_ms.clone(),
                            y: d.convolution.values.clone(),
                        }),
                    },
                    Err(e) => WarningOutcome::Failed { error: e.to_string() },
                },
            })
            .collect();
        DetectionReport {
            participant: participant.to_string(),
            dims: detector.config.dims,
            method: detector.config.method,
            kernel: (&detector.kernel).into(),
            formula: RT_FORMULA.to_string(),
            warnings,
        }
    }
}
