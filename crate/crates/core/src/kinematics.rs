//! Upper-body movement velocity.
//!
//! The velocity at frame `i + 1` is the summed Euclidean displacement of every
//! landmark between frames `i` and `i + 1`, divided by the frame delta in
//! seconds. Units are input coordinate units per second; divide by the frame
//! rate to get the per-frame quantity.

use std::fmt;
use std::io::{BufWriter, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pose::{PoseFrame, PoseStream, GAP_TOLERANCE};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum KinematicsError {
    #[error("frames {prev} and {curr} carry different landmark sets")]
    MismatchedLandmarks { prev: u64, curr: u64 },
    #[error("stream has {0} frame(s); at least 2 are needed")]
    TooShort(usize),
    #[error("frame gaps before frame indices {frames:?}")]
    Gap { frames: Vec<u64> },
    #[error("non-increasing timestamp at frame {0}")]
    NonIncreasingTime(u64),
}

/// Which coordinates enter the displacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dims {
    Xy,
    #[default]
    Xyz,
}

impl FromStr for Dims {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "xy" => Ok(Dims::Xy),
            "xyz" => Ok(Dims::Xyz),
            other => Err(format!("unknown dims `{other}` (expected xy or xyz)")),
        }
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dims::Xy => "xy",
            Dims::Xyz => "xyz",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocitySample {
    pub frame_index: u64,
    pub t_ms: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocitySeries {
    pub source_id: String,
    pub fps: f64,
    pub dims: Dims,
    pub samples: Vec<VelocitySample>,
}

impl VelocitySeries {
    /// Build a uniformly sampled series directly from values; sample `i` sits at
    /// `start_ms + i * 1000 / fps`.
    pub fn from_values(source_id: &str, fps: f64, start_ms: f64, values: &[f64]) -> Self {
        let frame_ms = 1000.0 / fps;
        let samples = values
            .iter()
            .enumerate()
            .map(|(i, &v)| VelocitySample {
                frame_index: i as u64,
                t_ms: start_ms + i as f64 * frame_ms,
                v,
            })
            .collect();
        VelocitySeries {
            source_id: source_id.to_string(),
            fps,
            dims: Dims::default(),
            samples,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn frame_ms(&self) -> f64 {
        1000.0 / self.fps
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.v).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t_ms).collect()
    }

    /// Samples with `from_ms <= t_ms < to_ms`.
    pub fn slice_time(&self, from_ms: f64, to_ms: f64) -> VelocitySeries {
        VelocitySeries {
            source_id: self.source_id.clone(),
            fps: self.fps,
            dims: self.dims,
            samples: self
                .samples
                .iter()
                .filter(|s| s.t_ms >= from_ms && s.t_ms < to_ms)
                .copied()
                .collect(),
        }
    }

    /// CSV export with header `frame,t_ms,v`.
    pub fn write_csv<W: Write>(&self, writer: W) -> std::io::Result<()> {
        let mut w = BufWriter::new(writer);
        writeln!(w, "frame,t_ms,v")?;
        for s in &self.samples {
            writeln!(w, "{},{},{}", s.frame_index, s.t_ms, s.v)?;
        }
        w.flush()
    }
}

/// Sum over landmarks of the distance each moved between `prev` and `curr`.
pub fn frame_displacement(prev: &PoseFrame, curr: &PoseFrame, dims: Dims) -> Result<f64, KinematicsError> {
    let mismatch = || KinematicsError::MismatchedLandmarks {
        prev: prev.frame_index,
        curr: curr.frame_index,
    };
    if prev.landmarks.len() != curr.landmarks.len() {
        return Err(mismatch());
    }
    let mut total = 0.0;
    for (a, b) in prev.landmarks.iter().zip(&curr.landmarks) {
        if a.id != b.id {
            return Err(mismatch());
        }
        let dx = b.x - a.x;
        let dy = b.y - a.y;
        let sq = match dims {
            Dims::Xy => dx * dx + dy * dy,
            Dims::Xyz => {
                let dz = b.z - a.z;
                dx * dx + dy * dy + dz * dz
            }
        };
        total += sq.sqrt();
    }
    Ok(total)
}

/// Velocity of cumulative landmark movement, one sample per consecutive
/// frame pair. Refuses streams with frame gaps; split them with
/// [`PoseStream::split_at_gaps`] first.
pub fn velocity_series(stream: &PoseStream, dims: Dims) -> Result<VelocitySeries, KinematicsError> {
    if stream.frames.len() < 2 {
        return Err(KinematicsError::TooShort(stream.frames.len()));
    }
    let gap_limit = stream.frame_ms() * (1.0 + GAP_TOLERANCE);
    let mut gaps = Vec::new();
    for pair in stream.frames.windows(2) {
        let dt = pair[1].timestamp_ms - pair[0].timestamp_ms;
        if dt.is_nan() || dt <= 0.0 {
            return Err(KinematicsError::NonIncreasingTime(pair[1].frame_index));
        }
        if dt > gap_limit {
            gaps.push(pair[1].frame_index);
        }
    }
    if !gaps.is_empty() {
        return Err(KinematicsError::Gap { frames: gaps });
    }
    let samples = stream
        .frames
        .windows(2)
        .map(|pair| {
            let (prev, curr) = (&pair[0], &pair[1]);
            let d = frame_displacement(prev, curr, dims)?;
            let dt_s = (curr.timestamp_ms - prev.timestamp_ms) / 1000.0;
            Ok(VelocitySample {
                frame_index: curr.frame_index,
                t_ms: curr.timestamp_ms,
                v: d / dt_s,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VelocitySeries {
        source_id: stream.source_id.clone(),
        fps: stream.nominal_fps,
        dims,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::Landmark;

    fn frame(idx: u64, t: f64, pts: &[(f64, f64, f64)]) -> PoseFrame {
        PoseFrame {
            frame_index: idx,
            timestamp_ms: t,
            landmarks: pts
                .iter()
                .enumerate()
                .map(|(i, &(x, y, z))| Landmark::new(i as u8, x, y, z))
                .collect(),
        }
    }

    fn stream(frames: Vec<PoseFrame>) -> PoseStream {
        PoseStream {
            source_id: "t".into(),
            nominal_fps: 30.0,
            frames,
            timestamps_synthesized: false,
        }
    }

    #[test]
    fn zero_motion_is_zero() {
        let f = frame(0, 0.0, &[(0.1, 0.2, 0.3); 25]);
        assert_eq!(frame_displacement(&f, &f, Dims::Xyz).unwrap(), 0.0);
    }

    #[test]
    fn three_four_five() {
        let a = frame(0, 0.0, &[(0.0, 0.0, 0.0), (1.0, 1.0, 1.0)]);
        let b = frame(1, 33.3, &[(0.3, 0.4, 0.9), (1.0, 1.0, 1.0)]);
        let d = frame_displacement(&a, &b, Dims::Xy).unwrap();
        assert!((d - 0.5).abs() < 1e-15, "{d}");
    }

    #[test]
    fn mismatched_ids() {
        let a = frame(0, 0.0, &[(0.0, 0.0, 0.0); 3]);
        let mut b = a.clone();
        b.frame_index = 1;
        b.landmarks[2].id = 7;
        assert_eq!(
            frame_displacement(&a, &b, Dims::Xy),
            Err(KinematicsError::MismatchedLandmarks { prev: 0, curr: 1 })
        );
        b.landmarks.pop();
        assert!(frame_displacement(&a, &b, Dims::Xy).is_err());
    }

    #[test]
    fn constant_speed_single_landmark() {
        let frames = (0..10)
            .map(|i| frame(i, i as f64 * 1000.0 / 30.0, &[(0.1 * i as f64, 0.0, 0.0), (0.5, 0.5, 0.5)]))
            .collect();
        let v = velocity_series(&stream(frames), Dims::Xyz).unwrap();
        assert_eq!(v.len(), 9);
        for s in &v.samples {
            assert!((s.v - 3.0).abs() < 1e-9, "{}", s.v);
        }
    }

    #[test]
    fn dropped_frame_is_gap_error() {
        let mut frames: Vec<_> = (0..6).map(|i| frame(i, i as f64 * 1000.0 / 30.0, &[(0.0, 0.0, 0.0)])).collect();
        frames.remove(3);
        let err = velocity_series(&stream(frames), Dims::Xyz).unwrap_err();
        assert_eq!(err, KinematicsError::Gap { frames: vec![4] });
    }

    #[test]
    fn single_frame_is_too_short() {
        let s = stream(vec![frame(0, 0.0, &[(0.0, 0.0, 0.0)])]);
        assert_eq!(velocity_series(&s, Dims::Xy), Err(KinematicsError::TooShort(1)));
    }

    #[test]
    fn xy_ignores_depth() {
        let a = frame(0, 0.0, &[(0.0, 0.0, 0.0)]);
        let b = frame(1, 33.3, &[(0.0, 0.0, 5.0)]);
        assert_eq!(frame_displacement(&a, &b, Dims::Xy).unwrap(), 0.0);
        assert_eq!(frame_displacement(&a, &b, Dims::Xyz).unwrap(), 5.0);
    }
}
