use std::fmt::Write as _;
use std::path::PathBuf;

use reactkit_core::stats::{write_records, Method, ReactionRecord, Setting};
use reactkit_core::woz::log::{latency_budget_check, parse_event_log, LatencyReport, Orphan, DEFAULT_MISS_MS, LATENCY_BUDGET_MS};
use serde::Serialize;

use super::file_stem;
use crate::output::{require_files, OutDir};
use crate::Global;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Event-log files.
    #[arg(required = true)]
    logs: Vec<PathBuf>,
    /// Reaction times above this count as misses.
    #[arg(long)]
    miss_ms: Option<u64>,
    /// Transport latency budget (strict upper bound), ms.
    #[arg(long)]
    budget_ms: Option<u64>,
    /// Also write reaction-time records for this participant.
    #[arg(long)]
    participant: Option<String>,
    /// Setting for the written records (Baseline, AR, VR_WOT, VR_WT).
    #[arg(long)]
    setting: Option<Setting>,
}

#[derive(Serialize)]
struct Effective {
    logs: Vec<PathBuf>,
    miss_ms: u64,
    budget_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    participant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    setting: Option<String>,
}

#[derive(Serialize)]
struct LogReport {
    log: String,
    header: Option<String>,
    triggers: usize,
    hits: usize,
    misses: Vec<u64>,
    orphans: Vec<Orphan>,
    latency: LatencyReport,
}

pub fn run(global: &Global, args: Args) -> anyhow::Result<()> {
    let file = &global.file.srt;
    let miss_ms = args.miss_ms.or(file.miss_ms).unwrap_or(DEFAULT_MISS_MS);
    let budget_ms = args.budget_ms.or(file.budget_ms).unwrap_or(LATENCY_BUDGET_MS);
    let participant = args.participant.clone().or_else(|| file.participant.clone());
    let setting = match (args.setting, file.setting.as_deref()) {
        (Some(s), _) => Some(s),
        (None, Some(s)) => Some(s.parse().map_err(anyhow::Error::msg)?),
        (None, None) => None,
    };
    if participant.is_some() != setting.is_some() {
        anyhow::bail!("--participant and --setting go together");
    }
    require_files(&args.logs)?;
    let out = OutDir::create(&global.out)?;
    out.echo_config(
        "srt",
        &Effective {
            logs: args.logs.clone(),
            miss_ms,
            budget_ms,
            participant: participant.clone(),
            setting: setting.map(|s| s.to_string()),
        },
    )?;

    let mut csv = String::from("log,trigger_seq,modality,trigger_ms,response_ms,rt_ms,miss\n");
    let mut reports = Vec::new();
    let mut records = Vec::new();
    let mut all_pass = true;
    for path in &args.logs {
        let parsed = parse_event_log(path, miss_ms).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        let name = file_stem(path);
        for e in &parsed.srt {
            writeln!(
                csv,
                "{name},{},{},{},{},{},{}",
                e.trigger_seq, e.modality, e.trigger_ms, e.response_ms, e.rt_ms, e.miss
            )?;
            if let (Some(p), Some(s), false) = (&participant, setting, e.miss) {
                records.push(ReactionRecord {
                    participant: p.clone(),
                    setting: s,
                    modality: e.modality,
                    method: Method::SRT,
                    rt_ms: e.rt_ms as f64,
                    trial: 1,
                });
            }
        }
        let latency = latency_budget_check(&parsed.triggers, &parsed.acks, budget_ms);
        all_pass &= latency.all_pass;
        eprintln!(
            "{name}: {} trigger(s), {} hit(s), {} miss(es), {} orphan(s), latency {}",
            parsed.triggers.len(),
            parsed.hits().count(),
            parsed.misses().len(),
            parsed.orphans.len(),
            if latency.all_pass { "within budget" } else { "OVER BUDGET" }
        );
        reports.push(LogReport {
            log: name,
            header: parsed.header.clone(),
            triggers: parsed.triggers.len(),
            hits: parsed.hits().count(),
            misses: parsed.misses(),
            orphans: parsed.orphans.clone(),
            latency,
        });
    }
    out.write_str("srt.csv", &csv)?;
    out.write_json("srt_report.json", &reports)?;
    if participant.is_some() {
        out.write_with("srt_records.csv", |w| write_records(&records, w))?;
    }
    if !all_pass {
        eprintln!("warning: at least one trigger missed the {budget_ms} ms latency budget");
    }
    Ok(())
}
