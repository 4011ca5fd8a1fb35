//! Reaction-time measurement for driver-warning experiments.
//!
//! Two measurement paths share one crate:
//!
//! * trigger/response timing from scripted warning scenarios ([`woz`]), and
//! * vision-based reaction onsets detected in pose-landmark motion
//!   ([`pose`] → [`kinematics`] → [`detector`]), with frequency and
//!   time-scale views of the same motion signal ([`spectral`]).
//!
//! [`stats`] summarizes and compares the resulting reaction times, and
//! [`synth`] generates data with known ground truth for testing all of it.

pub mod detector;
pub mod kinematics;
pub mod pose;
pub mod spectral;
pub mod stats;
pub mod synth;
pub mod woz;

pub use detector::{
    build_kernel, default_window, BaselineStats, ConvMethod, DetectError, Detection, DetectionReport, Detector,
    DetectorConfig, GaussianKernel, ReactionEstimate, SearchWindow,
};
pub use kinematics::{velocity_series, Dims, KinematicsError, VelocitySample, VelocitySeries};
pub use pose::{parse_pose_stream, IngestError, Landmark, PoseFormat, PoseFrame, PoseStream, ValidationReport};
pub use spectral::{cwt_gaus2, fft_magnitude, peak_scale_map, CwtResult, MagnitudeSpectrum, ScaleTrace, SpectralError};
pub use stats::{Method, ReactionRecord, Setting, StatsError, TTestResult, TestVariant};
pub use synth::{BurstSpec, CellSpec, NoiseSpec, SpecError};
pub use woz::{Modality, ScenarioScript, TriggerEvent};
