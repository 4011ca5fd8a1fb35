//! Scripted Wizard-of-Oz warning scenarios.
//!
//! A [`ScenarioScript`] lists warning triggers by time and modality. Running
//! it against a [`Clock`] and a [`TriggerSink`] dispatches each trigger at its
//! scheduled time and records what happened. On a [`SimClock`] the result is
//! fully deterministic.

pub mod clock;
pub mod log;
pub mod transport;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use clock::{Clock, SimClock, WallClock};
pub use log::{
    latency_budget_check, parse_event_log, parse_event_log_str, render_log, LatencyReport, LogLine, ParsedLog, Response, SrtEvent,
};
pub use transport::{Ack, DelayModel, SimulatedTransport, StreamSink, TransportError, TriggerSink, WireSink};

/// Which sensory cues a warning combines. Cues within one warning fire together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modality {
    V,
    AV,
    HV,
    HAV,
}

impl Modality {
    pub const ALL: [Modality; 4] = [Modality::V, Modality::AV, Modality::HV, Modality::HAV];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::V => "V",
            Modality::AV => "AV",
            Modality::HV => "HV",
            Modality::HAV => "HAV",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "V" => Ok(Modality::V),
            "AV" => Ok(Modality::AV),
            "HV" => Ok(Modality::HV),
            "HAV" => Ok(Modality::HAV),
            other => Err(format!("unknown modality `{other}`")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ScriptError {
    #[error("script `{name}`: trigger times must be strictly increasing")]
    NotIncreasing { name: String },
    #[error("script `{name}`: trigger at {t_ms} ms is not before the {duration_ms} ms end")]
    PastEnd { name: String, t_ms: u64, duration_ms: u64 },
    #[error("unknown script `{0}`")]
    Unknown(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledTrigger {
    pub t_ms: u64,
    pub modality: Modality,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioScript {
    pub name: String,
    pub duration_ms: u64,
    pub triggers: Vec<ScheduledTrigger>,
}

impl ScenarioScript {
    pub fn new(name: &str, duration_ms: u64, triggers: Vec<ScheduledTrigger>) -> Result<Self, ScriptError> {
        let script = ScenarioScript {
            name: name.to_string(),
            duration_ms,
            triggers,
        };
        script.validate()?;
        Ok(script)
    }

    fn uniform(name: &str, duration_s: u64, modality: Modality, times_s: &[u64]) -> Self {
        ScenarioScript {
            name: name.to_string(),
            duration_ms: duration_s * 1000,
            triggers: times_s
                .iter()
                .map(|&t| ScheduledTrigger {
                    t_ms: t * 1000,
                    modality,
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<(), ScriptError> {
        if self.triggers.windows(2).any(|w| w[1].t_ms <= w[0].t_ms) {
            return Err(ScriptError::NotIncreasing { name: self.name.clone() });
        }
        if let Some(t) = self.triggers.iter().find(|t| t.t_ms >= self.duration_ms) {
            return Err(ScriptError::PastEnd {
                name: self.name.clone(),
                t_ms: t.t_ms,
                duration_ms: self.duration_ms,
            });
        }
        Ok(())
    }

    pub fn trigger_times_ms(&self) -> Vec<u64> {
        self.triggers.iter().map(|t| t.t_ms).collect()
    }
}

/// The five built-in schedules: one 45 s run per modality with five
/// triggers, and the 60 s pose-capture run with two HAV triggers.
pub fn builtin_scripts() -> Vec<ScenarioScript> {
    vec![
        ScenarioScript::uniform("V", 45, Modality::V, &[10, 20, 28, 33, 36]),
        ScenarioScript::uniform("HV", 45, Modality::HV, &[15, 25, 28, 33, 36]),
        ScenarioScript::uniform("AV", 45, Modality::AV, &[17, 21, 28, 35, 38]),
        ScenarioScript::uniform("HAV", 45, Modality::HAV, &[12, 17, 22, 24, 27]),
        ScenarioScript::uniform("ExpE", 60, Modality::HAV, &[25, 45]),
    ]
}

/// Look up a built-in script by name. `ExpE-HAV` is accepted for `ExpE`.
pub fn builtin_script(name: &str) -> Result<ScenarioScript, ScriptError> {
    let canonical = if name == "ExpE-HAV" { "ExpE" } else { name };
    builtin_scripts()
        .into_iter()
        .find(|s| s.name == canonical)
        .ok_or_else(|| ScriptError::Unknown(name.to_string()))
}

/// Seeded permutation of the scripts.
pub fn randomize_session(scripts: &[ScenarioScript], seed: u64) -> Vec<ScenarioScript> {
    let mut out = scripts.to_vec();
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerEvent {
    pub seq: u64,
    pub modality: Modality,
    pub scheduled_ms: u64,
    pub dispatched_ms: u64,
}

impl TriggerEvent {
    pub fn jitter_ms(&self) -> u64 {
        self.dispatched_ms - self.scheduled_ms
    }
}

/// Everything recorded while running a script.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioRun {
    pub script: String,
    pub triggers: Vec<TriggerEvent>,
    pub acks: Vec<Ack>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JitterSummary {
    pub events: usize,
    pub mean_ms: f64,
    pub p99_ms: u64,
    pub max_ms: u64,
}

impl ScenarioRun {
    pub fn jitter(&self) -> Option<JitterSummary> {
        let j: Vec<u64> = self.triggers.iter().map(TriggerEvent::jitter_ms).collect();
        Some(JitterSummary {
            events: j.len(),
            mean_ms: j.iter().sum::<u64>() as f64 / j.len().max(1) as f64,
            p99_ms: log::percentile(&j, 99.0)?,
            max_ms: *j.iter().max()?,
        })
    }

    pub fn log_lines(&self) -> Vec<LogLine> {
        self.triggers
            .iter()
            .cloned()
            .map(LogLine::Trig)
            .chain(self.acks.iter().copied().map(LogLine::Ack))
            .collect()
    }

    pub fn render(&self) -> String {
        render_log(&self.script, &self.log_lines())
    }
}

#[derive(Debug, Error)]
#[error("transport failed after {} trigger(s): {source}", partial.triggers.len())]
pub struct ScenarioError {
    #[source]
    pub source: TransportError,
    /// Events dispatched before the failure.
    pub partial: ScenarioRun,
}

/// Dispatch every trigger of `script` at its scheduled time. Sequence
/// numbers start at `first_seq`. Times are relative to `clock`'s origin
/// offset by `start_ms`.
pub fn run_scenario_from<C: Clock, S: TriggerSink>(
    script: &ScenarioScript,
    clock: &mut C,
    sink: &mut S,
    start_ms: u64,
    first_seq: u64,
) -> Result<ScenarioRun, ScenarioError> {
    let mut run = ScenarioRun {
        script: script.name.clone(),
        ..Default::default()
    };
    for (i, trig) in script.triggers.iter().enumerate() {
        let scheduled_ms = start_ms + trig.t_ms;
        clock.sleep_until(scheduled_ms);
        let event = TriggerEvent {
            seq: first_seq + i as u64,
            modality: trig.modality,
            scheduled_ms,
            dispatched_ms: clock.now_ms(),
        };
        match sink.dispatch(&event) {
            Ok(ack) => {
                run.triggers.push(event);
                run.acks.extend(ack);
            }
            Err(source) => return Err(ScenarioError { source, partial: run }),
        }
    }
    clock.sleep_until(start_ms + script.duration_ms);
    Ok(run)
}

pub fn run_scenario<C: Clock, S: TriggerSink>(script: &ScenarioScript, clock: &mut C, sink: &mut S) -> Result<ScenarioRun, ScenarioError> {
    let start = clock.now_ms();
    run_scenario_from(script, clock, sink, start, 1)
}

/// Simulated button presses: one response per trigger, reaction time drawn
/// from a normal distribution and floored at `floor_ms`.
pub fn simulate_responses(triggers: &[TriggerEvent], mean_ms: f64, sd_ms: f64, floor_ms: f64, seed: u64) -> Vec<Response> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(mean_ms, sd_ms.max(0.0)).expect("finite parameters");
    triggers
        .iter()
        .map(|t| {
            let rt = normal.sample(&mut rng).max(floor_ms).round() as u64;
            Response {
                seq: t.seq,
                response_ms: t.dispatched_ms + rt.max(1),
            }
        })
        .collect()
}
