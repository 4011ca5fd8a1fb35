//! Trigger transports: where dispatched triggers go and where acks come from.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::log::{format_trig, LogLine};
use super::TriggerEvent;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("endpoint rejected trigger {seq}: {reason}")]
    Rejected { seq: u64, reason: String },
    #[error("bad ack for trigger {seq}: {line:?}")]
    BadAck { seq: u64, line: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Ack {
    pub seq: u64,
    pub recv_ms: u64,
}

pub trait TriggerSink {
    /// Deliver one trigger. Returns the endpoint's acknowledgement when the
    /// transport provides one.
    fn dispatch(&mut self, event: &TriggerEvent) -> Result<Option<Ack>, TransportError>;
}

impl<T: TriggerSink + ?Sized> TriggerSink for &mut T {
    fn dispatch(&mut self, event: &TriggerEvent) -> Result<Option<Ack>, TransportError> {
        (**self).dispatch(event)
    }
}

/// Writes `TRIG` lines to any writer; no acks.
pub struct WireSink<W: Write> {
    writer: W,
}

impl<W: Write> WireSink<W> {
    pub fn new(writer: W) -> Self {
        WireSink { writer }
    }

    pub fn into_inner(self) -> W {
        self.writer
    }
}

impl<W: Write> TriggerSink for WireSink<W> {
    fn dispatch(&mut self, event: &TriggerEvent) -> Result<Option<Ack>, TransportError> {
        writeln!(self.writer, "{}", format_trig(event))?;
        self.writer.flush()?;
        Ok(None)
    }
}

/// Line-oriented request/ack over a bidirectional byte stream, e.g. a
/// `TcpStream`. Sends `TRIG ...` and blocks for `ACK <seq> <recv_ms>`.
pub struct StreamSink<S: Read + Write> {
    writer: S,
    reader: BufReader<S>,
}

impl<S: Read + Write> StreamSink<S> {
    /// `reader` and `writer` are two handles on the same connection
    /// (for TCP, use `try_clone`).
    pub fn new(writer: S, reader: S) -> Self {
        StreamSink {
            writer,
            reader: BufReader::new(reader),
        }
    }
}

impl<S: Read + Write> TriggerSink for StreamSink<S> {
    fn dispatch(&mut self, event: &TriggerEvent) -> Result<Option<Ack>, TransportError> {
        writeln!(self.writer, "{}", format_trig(event))?;
        self.writer.flush()?;
        let mut line = String::new();
        if self.reader.read_line(&mut line)? == 0 {
            return Err(TransportError::Io(std::io::ErrorKind::UnexpectedEof.into()));
        }
        match LogLine::parse(line.trim_end()) {
            Ok(Some(LogLine::Ack(ack))) if ack.seq == event.seq => Ok(Some(ack)),
            _ => Err(TransportError::BadAck {
                seq: event.seq,
                line: line.trim_end().to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub enum DelayModel {
    Fixed(u64),
    /// Uniform integer delay in `min..=max` ms.
    Uniform { min: u64, max: u64 },
}

/// In-process endpoint that acknowledges each trigger after a modelled
/// delay. Can be told to fail on a given sequence number.
#[derive(Debug, Clone)]
pub struct SimulatedTransport {
    delay: DelayModel,
    rng: ChaCha8Rng,
    overrides: BTreeMap<u64, u64>,
    fail_at: Option<u64>,
    pub delivered: Vec<TriggerEvent>,
}

impl SimulatedTransport {
    pub fn new(delay: DelayModel, seed: u64) -> Self {
        SimulatedTransport {
            delay,
            rng: ChaCha8Rng::seed_from_u64(seed),
            overrides: BTreeMap::new(),
            fail_at: None,
            delivered: Vec::new(),
        }
    }

    pub fn fixed(delay_ms: u64) -> Self {
        Self::new(DelayModel::Fixed(delay_ms), 0)
    }

    /// Force the delay for one sequence number.
    pub fn with_delay_for(mut self, seq: u64, delay_ms: u64) -> Self {
        self.overrides.insert(seq, delay_ms);
        self
    }

    pub fn failing_at(mut self, seq: u64) -> Self {
        self.fail_at = Some(seq);
        self
    }
}

impl TriggerSink for SimulatedTransport {
    fn dispatch(&mut self, event: &TriggerEvent) -> Result<Option<Ack>, TransportError> {
        if self.fail_at == Some(event.seq) {
            return Err(TransportError::Rejected {
                seq: event.seq,
                reason: "simulated failure".into(),
            });
        }
        // Draw even when overridden so the stream of delays stays aligned.
        let drawn = match self.delay {
            DelayModel::Fixed(d) => d,
            DelayModel::Uniform { min, max } => self.rng.random_range(min..=max),
        };
        let delay = self.overrides.get(&event.seq).copied().unwrap_or(drawn);
        self.delivered.push(event.clone());
        Ok(Some(Ack {
            seq: event.seq,
            recv_ms: event.dispatched_ms + delay,
        }))
    }
}
