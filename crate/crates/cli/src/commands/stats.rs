use std::fs::File;
use std::path::PathBuf;

use anyhow::Context;
use reactkit_core::stats::{
    read_records, significance_grid, summary_table, vision_paired_report, write_paired_csv, write_summary_csv, Method,
    TestVariant,
};
use serde::Serialize;

use crate::output::{require_files, OutDir};
use crate::Global;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Records CSV files (`participant,setting,modality,method,rt_ms[,trial]`); repeatable.
    #[arg(long)]
    records: Vec<PathBuf>,
    /// Unpaired test: welch or student.
    #[arg(long)]
    variant: Option<TestVariant>,
}

#[derive(Serialize)]
struct Effective {
    records: Vec<PathBuf>,
    variant: String,
}

pub fn run(global: &Global, args: Args) -> anyhow::Result<()> {
    let file = &global.file.stats;
    let paths = if args.records.is_empty() {
        file.records.clone().unwrap_or_default()
    } else {
        args.records.clone()
    };
    if paths.is_empty() {
        anyhow::bail!("stats needs at least one --records file");
    }
    let variant = match (args.variant, file.variant.as_deref()) {
        (Some(v), _) => v,
        (None, Some(s)) => s.parse().map_err(anyhow::Error::msg)?,
        (None, None) => TestVariant::Welch,
    };
    require_files(&paths)?;
    let mut records = Vec::new();
    for p in &paths {
        let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
        records.extend(read_records(f).with_context(|| format!("reading {}", p.display()))?);
    }
    if records.is_empty() {
        anyhow::bail!("no records in {}", paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "));
    }

    let out = OutDir::create(&global.out)?;
    out.echo_config(
        "stats",
        &Effective {
            records: paths.clone(),
            variant: variant.to_string(),
        },
    )?;
    let summary = summary_table(&records);
    out.write_with("summary.csv", |w| write_summary_csv(&summary, w))?;

    let has_srt = records.iter().any(|r| r.method == Method::SRT);
    if has_srt {
        let grid = significance_grid(&records, variant)?;
        out.write_with("grid_setting.csv", |w| grid.write_settings_csv(w))?;
        out.write_with("grid_modality.csv", |w| grid.write_modalities_csv(w))?;
        out.write_with("tests.csv", |w| grid.write_long_csv(w))?;
    }
    if records.iter().any(|r| r.method == Method::Vision) {
        let paired = vision_paired_report(&records)?;
        out.write_with("paired.csv", |w| write_paired_csv(&paired, w))?;
    }
    eprintln!("{} record(s), {} populated cell(s)", records.len(), summary.len());
    Ok(())
}
