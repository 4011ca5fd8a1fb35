use std::path::Path;

use anyhow::Context;
use reactkit_core::woz::log::LogLine;
use reactkit_core::woz::{
    builtin_script, randomize_session, render_log, run_scenario_from, simulate_responses, Clock, DelayModel,
    JitterSummary, ScenarioScript, SimClock, SimulatedTransport, WallClock,
};
use serde::Serialize;

use crate::output::OutDir;
use crate::Global;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockMode {
    Sim,
    Wall,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Built-in script name (V, HV, AV, HAV, ExpE), a JSON script file, or a
    /// comma-separated list of either.
    #[arg(long)]
    script: Option<String>,
    #[arg(long, value_enum)]
    clock: Option<ClockMode>,
    /// Run the scripts in a seeded random order.
    #[arg(long)]
    shuffle: bool,
    /// Smallest simulated transport delay, ms.
    #[arg(long)]
    delay_min_ms: Option<u64>,
    /// Largest simulated transport delay, ms.
    #[arg(long)]
    delay_max_ms: Option<u64>,
    /// Add simulated participant responses to the log.
    #[arg(long)]
    responses: bool,
    #[arg(long)]
    response_mean_ms: Option<f64>,
    #[arg(long)]
    response_sd_ms: Option<f64>,
    /// Pause between consecutive scripts, ms.
    #[arg(long)]
    gap_ms: Option<u64>,
}

#[derive(Serialize)]
struct Effective {
    script: String,
    clock: ClockMode,
    shuffle: bool,
    delay_min_ms: u64,
    delay_max_ms: u64,
    responses: bool,
    response_mean_ms: f64,
    response_sd_ms: f64,
    gap_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct ScriptSummary {
    name: String,
    log: String,
    start_ms: u64,
    triggers: usize,
    jitter: Option<JitterSummary>,
}

fn load_script(spec: &str) -> anyhow::Result<ScenarioScript> {
    let path = Path::new(spec);
    if path.extension().is_some_and(|e| e == "json") {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading script {spec}"))?;
        let script: ScenarioScript =
            serde_json::from_str(&text).with_context(|| format!("parsing script {spec}"))?;
        script.validate()?;
        Ok(script)
    } else {
        Ok(builtin_script(spec)?)
    }
}

pub fn run(global: &Global, args: Args) -> anyhow::Result<()> {
    let file = &global.file.scenario;
    let script_spec = args
        .script
        .clone()
        .or_else(|| file.script.clone())
        .context("scenario needs --script")?;
    let clock_mode = match (args.clock, file.clock.as_deref()) {
        (Some(c), _) => c,
        (None, Some("wall")) => ClockMode::Wall,
        (None, Some("sim")) | (None, None) => ClockMode::Sim,
        (None, Some(other)) => anyhow::bail!("config key `scenario.clock`: unknown clock `{other}`"),
    };
    let shuffle = args.shuffle || file.shuffle.unwrap_or(false);
    let delay_min = args.delay_min_ms.or(file.delay_min_ms).unwrap_or(0);
    let delay_max = args.delay_max_ms.or(file.delay_max_ms).unwrap_or(delay_min);
    if delay_max < delay_min {
        anyhow::bail!("delay range {delay_min}..={delay_max} ms is empty");
    }
    let responses = args.responses || file.responses.unwrap_or(false);
    let response_mean = args.response_mean_ms.or(file.response_mean_ms).unwrap_or(438.0);
    let response_sd = args.response_sd_ms.or(file.response_sd_ms).unwrap_or(154.0);
    let gap_ms = args.gap_ms.or(file.gap_ms).unwrap_or(0);

    let scripts = script_spec
        .split(',')
        .map(|s| load_script(s.trim()))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let needs_seed = shuffle || responses || delay_max > delay_min;
    let seed = if needs_seed {
        Some(global.require_seed("randomized scenario execution")?)
    } else {
        global.seed
    };
    let scripts = if shuffle {
        randomize_session(&scripts, seed.expect("checked above"))
    } else {
        scripts
    };

    let out = OutDir::create(&global.out)?;
    out.echo_config(
        "scenario",
        &Effective {
            script: script_spec.clone(),
            clock: clock_mode,
            shuffle,
            delay_min_ms: delay_min,
            delay_max_ms: delay_max,
            responses,
            response_mean_ms: response_mean,
            response_sd_ms: response_sd,
            gap_ms,
            seed,
        },
    )?;

    let delay = if delay_min == delay_max {
        DelayModel::Fixed(delay_min)
    } else {
        DelayModel::Uniform {
            min: delay_min,
            max: delay_max,
        }
    };
    let mut transport = SimulatedTransport::new(delay, seed.unwrap_or(0));
    match clock_mode {
        ClockMode::Sim => run_session(&scripts, &mut SimClock::new(), &mut transport, gap_ms, responses, (response_mean, response_sd), seed, &out),
        ClockMode::Wall => run_session(&scripts, &mut WallClock::new(), &mut transport, gap_ms, responses, (response_mean, response_sd), seed, &out),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_session<C: Clock>(
    scripts: &[ScenarioScript],
    clock: &mut C,
    transport: &mut SimulatedTransport,
    gap_ms: u64,
    responses: bool,
    (mean, sd): (f64, f64),
    seed: Option<u64>,
    out: &OutDir,
) -> anyhow::Result<()> {
    let mut summaries = Vec::new();
    let mut seq = 1;
    for (i, script) in scripts.iter().enumerate() {
        let start_ms = clock.now_ms();
        let run = run_scenario_from(script, clock, transport, start_ms, seq)
            .with_context(|| format!("running script `{}`", script.name))?;
        seq += run.triggers.len() as u64;
        let mut lines = run.log_lines();
        if responses {
            let r_seed = seed.expect("responses require a seed").wrapping_add(i as u64);
            lines.extend(
                simulate_responses(&run.triggers, mean, sd, 50.0, r_seed)
                    .into_iter()
                    .map(LogLine::Resp),
            );
        }
        let log_name = format!("{:02}_{}.log", i + 1, script.name);
        out.write_str(&log_name, &render_log(&script.name, &lines))?;
        eprintln!("{}: {} trigger(s) -> {}", script.name, run.triggers.len(), log_name);
        summaries.push(ScriptSummary {
            name: script.name.clone(),
            log: log_name,
            start_ms,
            triggers: run.triggers.len(),
            jitter: run.jitter(),
        });
        clock.sleep_until(clock.now_ms() + gap_ms);
    }
    out.write_json("session.json", &summaries)?;
    Ok(())
}
