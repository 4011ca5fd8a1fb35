//! Line-delimited trigger/ack/response wire format and event-log parsing.
//!
//! ```text
//! # reactkit-eventlog v1 script=V
//! TRIG <seq> <modality> <scheduled_ms> <dispatched_ms>
//! ACK <seq> <recv_ms>
//! RESP <seq> <response_ms>
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use super::transport::Ack;
use super::{Modality, TriggerEvent};

pub const LOG_VERSION: &str = "reactkit-eventlog v1";

/// Reaction times longer than this count as misses unless configured otherwise.
pub const DEFAULT_MISS_MS: u64 = 5000;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Response {
    pub seq: u64,
    pub response_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LogLine {
    Trig(TriggerEvent),
    Ack(Ack),
    Resp(Response),
}

pub fn format_trig(e: &TriggerEvent) -> String {
    format!("TRIG {} {} {} {}", e.seq, e.modality, e.scheduled_ms, e.dispatched_ms)
}

impl LogLine {
    pub fn to_line(&self) -> String {
        match self {
            LogLine::Trig(e) => format_trig(e),
            LogLine::Ack(a) => format!("ACK {} {}", a.seq, a.recv_ms),
            LogLine::Resp(r) => format!("RESP {} {}", r.seq, r.response_ms),
        }
    }

    /// Time the line refers to, used to order a merged log.
    pub fn time_ms(&self) -> u64 {
        match self {
            LogLine::Trig(e) => e.dispatched_ms,
            LogLine::Ack(a) => a.recv_ms,
            LogLine::Resp(r) => r.response_ms,
        }
    }

    /// Parse one line. `Ok(None)` for blanks and comments.
    pub fn parse(line: &str) -> Result<Option<LogLine>, String> {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            return Ok(None);
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str, what: &str| s.parse::<u64>().map_err(|_| format!("bad {what} `{s}`"));
        let expect = |n: usize| {
            if fields.len() == n {
                Ok(())
            } else {
                Err(format!("{} expects {} fields, got {}", fields[0], n - 1, fields.len() - 1))
            }
        };
        match fields[0] {
            "TRIG" => {
                expect(5)?;
                let event = TriggerEvent {
                    seq: num(fields[1], "seq")?,
                    modality: fields[2].parse()?,
                    scheduled_ms: num(fields[3], "scheduled_ms")?,
                    dispatched_ms: num(fields[4], "dispatched_ms")?,
                };
                if event.dispatched_ms < event.scheduled_ms {
                    return Err(format!("trigger {} dispatched before it was scheduled", event.seq));
                }
                Ok(Some(LogLine::Trig(event)))
            }
            "ACK" => {
                expect(3)?;
                Ok(Some(LogLine::Ack(Ack {
                    seq: num(fields[1], "seq")?,
                    recv_ms: num(fields[2], "recv_ms")?,
                })))
            }
            "RESP" => {
                expect(3)?;
                Ok(Some(LogLine::Resp(Response {
                    seq: num(fields[1], "seq")?,
                    response_ms: num(fields[2], "response_ms")?,
                })))
            }
            other => Err(format!("unknown record `{other}`")),
        }
    }
}

/// Render a log: version header, then lines ordered by time. Lines at the
/// same time keep their input order.
pub fn render_log(script_name: &str, lines: &[LogLine]) -> String {
    let mut sorted: Vec<&LogLine> = lines.iter().collect();
    sorted.sort_by_key(|l| l.time_ms());
    let mut out = format!("# {LOG_VERSION} script={script_name}\n");
    for l in sorted {
        out.push_str(&l.to_line());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SrtEvent {
    pub trigger_seq: u64,
    pub modality: Modality,
    pub trigger_ms: u64,
    pub response_ms: u64,
    pub rt_ms: u64,
    /// Reaction time exceeded the miss threshold.
    pub miss: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Orphan {
    pub line: usize,
    pub seq: u64,
    pub response_ms: u64,
    pub reason: &'static str,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ParsedLog {
    pub header: Option<String>,
    pub triggers: Vec<TriggerEvent>,
    pub acks: Vec<Ack>,
    pub responses: Vec<Response>,
    pub srt: Vec<SrtEvent>,
    pub orphans: Vec<Orphan>,
    /// Triggers that never received a response.
    pub unanswered: Vec<u64>,
}

impl ParsedLog {
    /// Sequence numbers of all misses: late responses and unanswered triggers.
    pub fn misses(&self) -> Vec<u64> {
        let mut out: Vec<u64> = self
            .srt
            .iter()
            .filter(|e| e.miss)
            .map(|e| e.trigger_seq)
            .chain(self.unanswered.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }

    /// Reaction times of paired, non-miss responses.
    pub fn hits(&self) -> impl Iterator<Item = &SrtEvent> {
        self.srt.iter().filter(|e| !e.miss)
    }
}

pub fn parse_event_log_str(text: &str, miss_threshold_ms: u64) -> Result<ParsedLog, LogError> {
    let mut log = ParsedLog::default();
    let mut triggers: BTreeMap<u64, TriggerEvent> = BTreeMap::new();
    let mut answered: BTreeMap<u64, ()> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if log.header.is_none() && raw.starts_with('#') && raw.contains("reactkit-eventlog") {
            log.header = Some(raw.trim_start_matches('#').trim().to_string());
        }
        let parsed = LogLine::parse(raw).map_err(|message| LogError::Parse {
            line: line_no,
            message,
        })?;
        match parsed {
            None => {}
            Some(LogLine::Trig(e)) => {
                if triggers.contains_key(&e.seq) {
                    return Err(LogError::Parse {
                        line: line_no,
                        message: format!("duplicate trigger seq {}", e.seq),
                    });
                }
                triggers.insert(e.seq, e.clone());
                log.triggers.push(e);
            }
            Some(LogLine::Ack(a)) => log.acks.push(a),
            Some(LogLine::Resp(r)) => {
                log.responses.push(r);
                let orphan = |reason| Orphan {
                    line: line_no,
                    seq: r.seq,
                    response_ms: r.response_ms,
                    reason,
                };
                let Some(trig) = triggers.get(&r.seq) else {
                    log.orphans.push(orphan("no prior trigger"));
                    continue;
                };
                if answered.contains_key(&r.seq) {
                    log.orphans.push(orphan("duplicate response"));
                    continue;
                }
                if r.response_ms <= trig.dispatched_ms {
                    log.orphans.push(orphan("response not after trigger"));
                    continue;
                }
                answered.insert(r.seq, ());
                let rt_ms = r.response_ms - trig.dispatched_ms;
                log.srt.push(SrtEvent {
                    trigger_seq: r.seq,
                    modality: trig.modality,
                    trigger_ms: trig.dispatched_ms,
                    response_ms: r.response_ms,
                    rt_ms,
                    miss: rt_ms > miss_threshold_ms,
                });
            }
        }
    }
    log.unanswered = log
        .triggers
        .iter()
        .map(|t| t.seq)
        .filter(|s| !answered.contains_key(s))
        .collect();
    Ok(log)
}

pub fn parse_event_log(path: &Path, miss_threshold_ms: u64) -> Result<ParsedLog, LogError> {
    let text = std::fs::read_to_string(path)?;
    parse_event_log_str(&text, miss_threshold_ms)
}

// ---------------------------------------------------------------------------
// Latency

pub const LATENCY_BUDGET_MS: u64 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatencyEntry {
    pub seq: u64,
    /// `None` when the trigger was never acknowledged.
    pub latency_ms: Option<u64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyReport {
    pub budget_ms: u64,
    pub events: Vec<LatencyEntry>,
    pub passed: usize,
    pub failed: usize,
    pub p99_ms: Option<u64>,
    pub max_ms: Option<u64>,
    pub all_pass: bool,
}

/// Nearest-rank percentile of an unsorted sample.
pub fn percentile(values: &[u64], pct: f64) -> Option<u64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let rank = ((pct / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
    Some(v[rank.min(v.len()) - 1])
}

/// Transport latency (ack receipt minus dispatch) of every trigger against a
/// strict `< budget_ms` limit. Unacknowledged triggers fail.
pub fn latency_budget_check(triggers: &[TriggerEvent], acks: &[Ack], budget_ms: u64) -> LatencyReport {
    let by_seq: BTreeMap<u64, u64> = acks.iter().map(|a| (a.seq, a.recv_ms)).collect();
    let events: Vec<LatencyEntry> = triggers
        .iter()
        .map(|t| {
            let latency_ms = by_seq.get(&t.seq).map(|&r| r.saturating_sub(t.dispatched_ms));
            LatencyEntry {
                seq: t.seq,
                latency_ms,
                pass: latency_ms.is_some_and(|l| l < budget_ms),
            }
        })
        .collect();
    let latencies: Vec<u64> = events.iter().filter_map(|e| e.latency_ms).collect();
    let passed = events.iter().filter(|e| e.pass).count();
    LatencyReport {
        budget_ms,
        passed,
        failed: events.len() - passed,
        p99_ms: percentile(&latencies, 99.0),
        max_ms: latencies.iter().copied().max(),
        all_pass: passed == events.len(),
        events,
    }
}
