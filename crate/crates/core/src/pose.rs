//! Pose-landmark streams: parsing, writing, validation and upper-body filtering.
//!
//! A stream is a sequence of frames, each carrying the 33 landmarks of the
//! standard body-pose model. Ids 0..=24 form the upper body.
//!
//! Two on-disk formats are supported:
//!
//! - CSV, header `frame,timestamp_ms,id,x,y,z,visibility`, one row per landmark.
//!   `timestamp_ms` and `visibility` may be left empty.
//! - JSONL, one frame object per line:
//!   `{"frame":n,"timestamp_ms":t,"landmarks":[{"id":..,"x":..,"y":..,"z":..,"v":..}]}`.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Landmarks per frame in the full-body model.
pub const LANDMARK_COUNT: usize = 33;
/// Highest landmark id considered upper body.
pub const UPPER_BODY_MAX_ID: u8 = 24;
pub const DEFAULT_FPS: f64 = 30.0;

/// Relative tolerance on a frame delta before it is reported as a gap (too
/// long) or an anomaly (too short).
pub const GAP_TOLERANCE: f64 = 0.5;

pub const CSV_HEADER: &str = "frame,timestamp_ms,id,x,y,z,visibility";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("frame {frame}: {message}")]
    Schema { frame: u64, message: String },
    #[error("stream contains no frames")]
    EmptyStream,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoseFormat {
    Csv,
    Jsonl,
}

impl PoseFormat {
    /// Guess the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(PoseFormat::Csv),
            "jsonl" | "ndjson" => Some(PoseFormat::Jsonl),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            PoseFormat::Csv => "csv",
            PoseFormat::Jsonl => "jsonl",
        }
    }
}

impl FromStr for PoseFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(PoseFormat::Csv),
            "jsonl" => Ok(PoseFormat::Jsonl),
            other => Err(format!("unknown pose format `{other}` (expected csv or jsonl)")),
        }
    }
}

impl fmt::Display for PoseFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PoseFormat::Csv => "csv",
            PoseFormat::Jsonl => "jsonl",
        })
    }
}

/// One tracked keypoint. Coordinates are in whatever consistent unit the
/// producer used (normalized image coordinates or pixels).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub id: u8,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    #[serde(rename = "v", default = "default_visibility")]
    pub visibility: f64,
}

fn default_visibility() -> f64 {
    1.0
}

impl Landmark {
    pub fn new(id: u8, x: f64, y: f64, z: f64) -> Self {
        Landmark { id, x, y, z, visibility: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseFrame {
    pub frame_index: u64,
    pub timestamp_ms: f64,
    /// Ordered by id, one entry per id.
    pub landmarks: Vec<Landmark>,
}

impl PoseFrame {
    pub fn landmark(&self, id: u8) -> Option<&Landmark> {
        self.landmarks
            .binary_search_by_key(&id, |l| l.id)
            .ok()
            .map(|i| &self.landmarks[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseStream {
    pub source_id: String,
    pub nominal_fps: f64,
    pub frames: Vec<PoseFrame>,
    /// Set when the input carried no timestamps and they were derived from
    /// frame indices.
    pub timestamps_synthesized: bool,
}

impl PoseStream {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Nominal frame duration in milliseconds.
    pub fn frame_ms(&self) -> f64 {
        1000.0 / self.nominal_fps
    }

    /// Positions `i` (into `frames`) where the delta from frame `i - 1` to
    /// frame `i` exceeds the gap threshold.
    pub fn gap_positions(&self) -> Vec<usize> {
        let limit = self.frame_ms() * (1.0 + GAP_TOLERANCE);
        self.frames
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1].timestamp_ms - w[0].timestamp_ms > limit)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Split into maximal runs of frames with no gap between neighbours.
    pub fn split_at_gaps(&self) -> Vec<PoseStream> {
        let mut cuts = self.gap_positions();
        cuts.push(self.frames.len());
        let mut start = 0;
        let mut out = Vec::with_capacity(cuts.len());
        for cut in cuts {
            out.push(PoseStream {
                source_id: self.source_id.clone(),
                nominal_fps: self.nominal_fps,
                frames: self.frames[start..cut].to_vec(),
                timestamps_synthesized: self.timestamps_synthesized,
            });
            start = cut;
        }
        out
    }
}

/// Keep landmarks 0..=24 in every frame. Frame order and timestamps are untouched.
pub fn select_upper_body(stream: &PoseStream) -> PoseStream {
    let frames = stream
        .frames
        .iter()
        .map(|f| PoseFrame {
            frame_index: f.frame_index,
            timestamp_ms: f.timestamp_ms,
            landmarks: f
                .landmarks
                .iter()
                .filter(|l| l.id <= UPPER_BODY_MAX_ID)
                .copied()
                .collect(),
        })
        .collect();
    PoseStream {
        source_id: stream.source_id.clone(),
        nominal_fps: stream.nominal_fps,
        frames,
        timestamps_synthesized: stream.timestamps_synthesized,
    }
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    /// Delta longer than nominal by more than the tolerance; frames are missing.
    Gap {
        frame_index: u64,
        delta_ms: f64,
        expected_ms: f64,
    },
    /// Delta non-positive or shorter than nominal by more than the tolerance.
    TimestampAnomaly {
        frame_index: u64,
        delta_ms: f64,
        expected_ms: f64,
    },
    FrameIndexNotIncreasing { position: usize, frame_index: u64, previous: u64 },
    OutOfRange {
        frame_index: u64,
        landmark: u8,
        field: &'static str,
        value: f64,
    },
    TimestampsSynthesized,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub frames: usize,
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn gaps(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| matches!(f, Finding::Gap { .. }))
    }
}

pub fn validate_stream(stream: &PoseStream) -> ValidationReport {
    let mut findings = Vec::new();
    if stream.timestamps_synthesized {
        findings.push(Finding::TimestampsSynthesized);
    }
    let expected = stream.frame_ms();
    for (pos, pair) in stream.frames.windows(2).enumerate() {
        let (prev, curr) = (&pair[0], &pair[1]);
        if curr.frame_index <= prev.frame_index {
            findings.push(Finding::FrameIndexNotIncreasing {
                position: pos + 1,
                frame_index: curr.frame_index,
                previous: prev.frame_index,
            });
        }
        let delta = curr.timestamp_ms - prev.timestamp_ms;
        if delta > expected * (1.0 + GAP_TOLERANCE) {
            findings.push(Finding::Gap {
                frame_index: curr.frame_index,
                delta_ms: delta,
                expected_ms: expected,
            });
        } else if delta < expected * (1.0 - GAP_TOLERANCE) {
            findings.push(Finding::TimestampAnomaly {
                frame_index: curr.frame_index,
                delta_ms: delta,
                expected_ms: expected,
            });
        }
    }
    for frame in &stream.frames {
        for lm in &frame.landmarks {
            let mut flag = |field, value: f64| {
                findings.push(Finding::OutOfRange {
                    frame_index: frame.frame_index,
                    landmark: lm.id,
                    field,
                    value,
                })
            };
            if !(0.0..=1.0).contains(&lm.visibility) {
                flag("visibility", lm.visibility);
            }
            if !lm.x.is_finite() {
                flag("x", lm.x);
            }
            if !lm.y.is_finite() {
                flag("y", lm.y);
            }
            if !lm.z.is_finite() {
                flag("z", lm.z);
            }
        }
    }
    ValidationReport {
        frames: stream.frames.len(),
        findings,
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Deserialize)]
struct CsvRow {
    frame: u64,
    timestamp_ms: Option<f64>,
    id: u8,
    x: f64,
    y: f64,
    z: f64,
    visibility: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonFrame {
    frame: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    timestamp_ms: Option<f64>,
    landmarks: Vec<Landmark>,
}

struct PendingFrame {
    frame: u64,
    timestamp_ms: Option<f64>,
    line: u64,
    landmarks: Vec<Landmark>,
}

/// Accumulates raw frames and enforces the per-frame schema.
struct StreamBuilder {
    fps: f64,
    frames: Vec<PoseFrame>,
    timestamps: Vec<Option<f64>>,
    seen: BTreeSet<u64>,
}

impl StreamBuilder {
    fn new(fps: f64) -> Self {
        StreamBuilder {
            fps,
            frames: Vec::new(),
            timestamps: Vec::new(),
            seen: BTreeSet::new(),
        }
    }

    fn push(&mut self, pending: PendingFrame) -> Result<(), IngestError> {
        let PendingFrame {
            frame,
            timestamp_ms,
            line,
            mut landmarks,
        } = pending;
        if !self.seen.insert(frame) {
            return Err(IngestError::Parse {
                line,
                message: format!("frame {frame} appears more than once"),
            });
        }
        landmarks.sort_by_key(|l| l.id);
        if let Some(bad) = landmarks.iter().find(|l| l.id as usize >= LANDMARK_COUNT) {
            return Err(IngestError::Schema {
                frame,
                message: format!("landmark id {} outside 0..{}", bad.id, LANDMARK_COUNT),
            });
        }
        if let Some(dup) = landmarks.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(IngestError::Schema {
                frame,
                message: format!("landmark id {} repeated", dup[0].id),
            });
        }
        if landmarks.len() != LANDMARK_COUNT {
            return Err(IngestError::Schema {
                frame,
                message: format!(
                    "expected {LANDMARK_COUNT} landmarks, found {}",
                    landmarks.len()
                ),
            });
        }
        self.timestamps.push(timestamp_ms);
        self.frames.push(PoseFrame {
            frame_index: frame,
            timestamp_ms: timestamp_ms.unwrap_or(f64::NAN),
            landmarks,
        });
        Ok(())
    }

    fn finish(mut self, source_id: &str) -> Result<PoseStream, IngestError> {
        if self.frames.is_empty() {
            return Err(IngestError::EmptyStream);
        }
        let all_present = self.timestamps.iter().all(Option::is_some);
        let synthesized = !all_present;
        if synthesized {
            if let Some(pos) = self.timestamps.iter().position(Option::is_some) {
                if self.timestamps.iter().any(Option::is_none) {
                    return Err(IngestError::Schema {
                        frame: self.frames[pos].frame_index,
                        message: "timestamps must be present on every frame or on none".into(),
                    });
                }
            }
            let frame_ms = 1000.0 / self.fps;
            for f in &mut self.frames {
                f.timestamp_ms = f.frame_index as f64 * frame_ms;
            }
        }
        Ok(PoseStream {
            source_id: source_id.to_string(),
            nominal_fps: self.fps,
            frames: self.frames,
            timestamps_synthesized: synthesized,
        })
    }
}

fn csv_err(e: csv::Error) -> IngestError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IngestError::Io(io),
        kind => IngestError::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}

pub fn read_pose_csv<R: Read>(reader: R, source_id: &str, fps: f64) -> Result<PoseStream, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER.split(',')) {
        return Err(IngestError::Parse {
            line: 1,
            message: format!("expected header `{CSV_HEADER}`"),
        });
    }
    let mut builder = StreamBuilder::new(fps);
    let mut pending: Option<PendingFrame> = None;
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row: CsvRow = record
            .deserialize(Some(&header))
            .map_err(|e| IngestError::Parse {
                line,
                message: e.to_string(),
            })?;
        let lm = Landmark {
            id: row.id,
            x: row.x,
            y: row.y,
            z: row.z,
            visibility: row.visibility.unwrap_or(1.0),
        };
        match pending.as_mut() {
            Some(p) if p.frame == row.frame => {
                if p.timestamp_ms != row.timestamp_ms {
                    return Err(IngestError::Parse {
                        line,
                        message: format!("frame {} has inconsistent timestamps", row.frame),
                    });
                }
                p.landmarks.push(lm);
            }
            _ => {
                if let Some(done) = pending.take() {
                    builder.push(done)?;
                }
                pending = Some(PendingFrame {
                    frame: row.frame,
                    timestamp_ms: row.timestamp_ms,
                    line,
                    landmarks: vec![lm],
                });
            }
        }
    }
    if let Some(done) = pending.take() {
        builder.push(done)?;
    }
    builder.finish(source_id)
}

pub fn read_pose_jsonl<R: BufRead>(reader: R, source_id: &str, fps: f64) -> Result<PoseStream, IngestError> {
    let mut builder = StreamBuilder::new(fps);
    for (i, line) in reader.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let frame: JsonFrame = serde_json::from_str(&line).map_err(|e| IngestError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        builder.push(PendingFrame {
            frame: frame.frame,
            timestamp_ms: frame.timestamp_ms,
            line: line_no,
            landmarks: frame.landmarks,
        })?;
    }
    builder.finish(source_id)
}

/// Parse a pose file. The stream's `source_id` is the file stem.
pub fn parse_pose_stream(path: &Path, format: PoseFormat, fps: f64) -> Result<PoseStream, IngestError> {
    let source_id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("unknown")
        .to_string();
    let file = File::open(path)?;
    match format {
        PoseFormat::Csv => read_pose_csv(file, &source_id, fps),
        PoseFormat::Jsonl => read_pose_jsonl(BufReader::new(file), &source_id, fps),
    }
}

// ---------------------------------------------------------------------------
// Writing

pub fn write_pose_csv<W: Write>(stream: &PoseStream, writer: W) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{CSV_HEADER}")?;
    for frame in &stream.frames {
        for lm in &frame.landmarks {
            if stream.timestamps_synthesized {
                write!(w, "{},,", frame.frame_index)?;
            } else {
                write!(w, "{},{},", frame.frame_index, frame.timestamp_ms)?;
            }
            writeln!(w, "{},{},{},{},{}", lm.id, lm.x, lm.y, lm.z, lm.visibility)?;
        }
    }
    w.flush()
}

pub fn write_pose_jsonl<W: Write>(stream: &PoseStream, writer: W) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    for frame in &stream.frames {
        let json = JsonFrame {
            frame: frame.frame_index,
            timestamp_ms: (!stream.timestamps_synthesized).then_some(frame.timestamp_ms),
            landmarks: frame.landmarks.clone(),
        };
        serde_json::to_writer(&mut w, &json)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_pose_stream<W: Write>(stream: &PoseStream, format: PoseFormat, writer: W) -> std::io::Result<()> {
    match format {
        PoseFormat::Csv => write_pose_csv(stream, writer),
        PoseFormat::Jsonl => write_pose_jsonl(stream, writer),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(index: u64, t: f64) -> PoseFrame {
        PoseFrame {
            frame_index: index,
            timestamp_ms: t,
            landmarks: (0..LANDMARK_COUNT as u8)
                .map(|id| Landmark::new(id, 0.5 + id as f64 * 1e-3, 0.25, -0.125))
                .collect(),
        }
    }

    fn stream(times: &[f64]) -> PoseStream {
        PoseStream {
            source_id: "p".into(),
            nominal_fps: 30.0,
            frames: times.iter().enumerate().map(|(i, &t)| frame(i as u64, t)).collect(),
            timestamps_synthesized: false,
        }
    }

    fn csv_rows(frames: &[(u64, &str)]) -> String {
        let mut s = format!("{CSV_HEADER}\n");
        for (f, t) in frames {
            for id in 0..LANDMARK_COUNT {
                s.push_str(&format!("{f},{t},{id},0.5,0.5,0.0,0.9\n"));
            }
        }
        s
    }

    #[test]
    fn csv_round_trip() {
        let s = stream(&[0.0, 33.3, 66.7, 100.0]);
        let mut buf = Vec::new();
        write_pose_csv(&s, &mut buf).unwrap();
        let back = read_pose_csv(buf.as_slice(), "p", 30.0).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn jsonl_round_trip() {
        let s = stream(&[0.0, 33.3, 66.7]);
        let mut buf = Vec::new();
        write_pose_jsonl(&s, &mut buf).unwrap();
        let back = read_pose_jsonl(buf.as_slice(), "p", 30.0).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn missing_timestamps_are_synthesized() {
        let text = csv_rows(&[(0, ""), (1, ""), (2, "")]);
        let s = read_pose_csv(text.as_bytes(), "p", 30.0).unwrap();
        assert!(s.timestamps_synthesized);
        assert_eq!(s.frames[2].timestamp_ms, 2.0 * 1000.0 / 30.0);
        let report = validate_stream(&s);
        assert_eq!(report.findings, vec![Finding::TimestampsSynthesized]);
    }

    #[test]
    fn partial_timestamps_are_rejected() {
        let text = csv_rows(&[(0, "0"), (1, "")]);
        assert!(matches!(
            read_pose_csv(text.as_bytes(), "p", 30.0),
            Err(IngestError::Schema { .. })
        ));
    }

    #[test]
    fn schema_errors() {
        let mut text = csv_rows(&[(0, "0")]);
        text.push_str("1,33.3,0,0.5,0.5,0.0,1.0\n");
        assert!(matches!(
            read_pose_csv(text.as_bytes(), "p", 30.0),
            Err(IngestError::Schema { frame: 1, .. })
        ));

        let text = csv_rows(&[(0, "0")]).replace("\n0,0,32,", "\n0,0,40,");
        assert!(matches!(
            read_pose_csv(text.as_bytes(), "p", 30.0),
            Err(IngestError::Schema { frame: 0, .. })
        ));

        let text = csv_rows(&[(0, "0"), (1, "33"), (0, "66")]);
        assert!(matches!(
            read_pose_csv(text.as_bytes(), "p", 30.0),
            Err(IngestError::Parse { .. })
        ));
    }

    #[test]
    fn parse_error_reports_line() {
        let text = csv_rows(&[(0, "0")]).replace("0,0,5,0.5", "0,0,5,abc");
        match read_pose_csv(text.as_bytes(), "p", 30.0) {
            Err(IngestError::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            read_pose_csv("a,b\n".as_bytes(), "p", 30.0),
            Err(IngestError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_pose_csv(format!("{CSV_HEADER}\n").as_bytes(), "p", 30.0),
            Err(IngestError::EmptyStream)
        ));
    }

    #[test]
    fn gaps_and_anomalies() {
        let s = stream(&[0.0, 33.3, 66.7, 166.7, 170.0, 200.0]);
        let report = validate_stream(&s);
        assert_eq!(report.gaps().count(), 1);
        assert!(report
            .findings
            .iter()
            .any(|f| matches!(f, Finding::TimestampAnomaly { frame_index: 4, .. })));
        assert_eq!(s.gap_positions(), vec![3]);
        let parts = s.split_at_gaps();
        assert_eq!(parts.iter().map(PoseStream::len).collect::<Vec<_>>(), vec![3, 3]);
    }

    #[test]
    fn out_of_range_visibility() {
        let mut s = stream(&[0.0, 33.3]);
        s.frames[1].landmarks[3].visibility = 1.5;
        let report = validate_stream(&s);
        assert_eq!(
            report.findings,
            vec![Finding::OutOfRange {
                frame_index: 1,
                landmark: 3,
                field: "visibility",
                value: 1.5
            }]
        );
    }

    #[test]
    fn upper_body_keeps_25() {
        let s = select_upper_body(&stream(&[0.0, 33.3]));
        assert!(s.frames.iter().all(|f| f.landmarks.len() == 25));
        assert_eq!(s.frames[0].landmark(24).unwrap().id, 24);
        assert!(s.frames[0].landmark(25).is_none());
    }

    #[test]
    fn format_from_path() {
        assert_eq!(PoseFormat::from_path(Path::new("a/b.csv")), Some(PoseFormat::Csv));
        assert_eq!(PoseFormat::from_path(Path::new("b.jsonl")), Some(PoseFormat::Jsonl));
        assert_eq!(PoseFormat::from_path(Path::new("b.txt")), None);
    }
}
