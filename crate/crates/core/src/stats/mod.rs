//! Reaction-time summaries and t-tests.
//!
//! Unpaired comparisons use Welch's test (Student's pooled test is available
//! as a variant). Paired comparisons use Student's paired test on
//! per-participant differences. All p-values are two-sided.
//!
//! When a participant has several records in one cell (for example five
//! trials of the same warning) the tests use the participant's mean.

pub mod tdist;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::woz::Modality;

pub use tdist::{reg_inc_beta, student_t_cdf, two_sided_p};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("both samples have zero variance and equal means")]
    DegenerateSample,
    #[error("paired samples differ in length ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
    #[error("participants without a partner: {0:?}")]
    Pairing(Vec<String>),
    #[error("missing or under-filled cells: {}", fmt_cells(.0))]
    MissingCell(Vec<(Setting, Modality)>),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("records CSV line {line}: {message}")]
    Csv { line: u64, message: String },
}

fn fmt_cells(cells: &[(Setting, Modality)]) -> String {
    cells
        .iter()
        .map(|(s, m)| format!("({s}, {m})"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Setting {
    Baseline,
    AR,
    #[serde(rename = "VR_WOT", alias = "VR-WOT")]
    VrWot,
    #[serde(rename = "VR_WT", alias = "VR-WT")]
    VrWt,
    VisionE,
}

impl Setting {
    /// Settings measured with trigger/response logs, in table order.
    pub const SRT: [Setting; 4] = [Setting::Baseline, Setting::AR, Setting::VrWot, Setting::VrWt];

    pub fn as_str(self) -> &'static str {
        match self {
            Setting::Baseline => "Baseline",
            Setting::AR => "AR",
            Setting::VrWot => "VR_WOT",
            Setting::VrWt => "VR_WT",
            Setting::VisionE => "VisionE",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Setting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Baseline" => Ok(Setting::Baseline),
            "AR" => Ok(Setting::AR),
            "VR_WOT" | "VR-WOT" => Ok(Setting::VrWot),
            "VR_WT" | "VR-WT" => Ok(Setting::VrWt),
            "VisionE" => Ok(Setting::VisionE),
            other => Err(format!("unknown setting `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    SRT,
    Vision,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::SRT => "SRT",
            Method::Vision => "Vision",
        })
    }
}

fn default_trial() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionRecord {
    pub participant: String,
    pub setting: Setting,
    pub modality: Modality,
    pub method: Method,
    pub rt_ms: f64,
    /// 1-based repetition index (e.g. first or second warning). Optional
    /// trailing column in the records CSV.
    #[serde(default = "default_trial")]
    pub trial: u32,
}

impl ReactionRecord {
    pub fn validate(&self) -> Result<(), StatsError> {
        if !(self.rt_ms.is_finite() && self.rt_ms > 0.0) {
            return Err(StatsError::InvalidRecord(format!(
                "{}: rt_ms {} is not positive",
                self.participant, self.rt_ms
            )));
        }
        if self.setting == Setting::VisionE && (self.method != Method::Vision || self.modality != Modality::HAV) {
            return Err(StatsError::InvalidRecord(format!(
                "{}: VisionE records must be Vision/HAV",
                self.participant
            )));
        }
        Ok(())
    }
}

pub const RECORDS_HEADER: &str = "participant,setting,modality,method,rt_ms,trial";

pub fn read_records<R: Read>(reader: R) -> Result<Vec<ReactionRecord>, StatsError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut out = Vec::new();
    for result in rdr.deserialize::<ReactionRecord>() {
        let record = result.map_err(|e| StatsError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        record.validate()?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_records<W: Write>(records: &[ReactionRecord], mut writer: W) -> std::io::Result<()> {
    writeln!(writer, "{RECORDS_HEADER}")?;
    for r in records {
        writeln!(
            writer,
            "{},{},{},{},{},{}",
            r.participant, r.setting, r.modality, r.method, r.rt_ms, r.trial
        )?;
    }
    writer.flush()
}

// ---------------------------------------------------------------------------
// Summaries

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleSummary {
    pub n: usize,
    pub mean_ms: f64,
    /// Sample standard deviation (n - 1 denominator); absent for n < 2.
    pub sd_ms: Option<f64>,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with the n - 1 denominator, two-pass.
fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

pub fn summarize(values: &[f64]) -> Result<SampleSummary, StatsError> {
    if values.is_empty() {
        return Err(StatsError::TooFew { needed: 1, got: 0 });
    }
    Ok(SampleSummary {
        n: values.len(),
        mean_ms: mean(values),
        sd_ms: (values.len() >= 2).then(|| variance(values).sqrt()),
    })
}

// ---------------------------------------------------------------------------
// t-tests

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestVariant {
    Welch,
    /// Pooled-variance two-sample test.
    Student,
    StudentPaired,
}

impl FromStr for TestVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "welch" => Ok(TestVariant::Welch),
            "student" => Ok(TestVariant::Student),
            other => Err(format!("unknown unpaired test `{other}` (welch or student)")),
        }
    }
}

impl fmt::Display for TestVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestVariant::Welch => "welch",
            TestVariant::Student => "student",
            TestVariant::StudentPaired => "student_paired",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub paired: bool,
    pub variant: TestVariant,
    pub n_a: usize,
    pub n_b: usize,
    /// mean(a) - mean(b)
    pub mean_diff: f64,
}

fn check_len(x: &[f64]) -> Result<(), StatsError> {
    if x.len() < 2 {
        Err(StatsError::TooFew { needed: 2, got: x.len() })
    } else {
        Ok(())
    }
}

fn degenerate_or(diff: f64, se: f64) -> Result<f64, StatsError> {
    if se > 0.0 {
        Ok(diff / se)
    } else if diff == 0.0 {
        Err(StatsError::DegenerateSample)
    } else {
        Ok(diff.signum() * f64::INFINITY)
    }
}

pub fn welch_ttest(a: &[f64], b: &[f64]) -> Result<TTestResult, StatsError> {
    check_len(a)?;
    check_len(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (variance(a) / na, variance(b) / nb);
    let diff = mean(a) - mean(b);
    let t = degenerate_or(diff, (va + vb).sqrt())?;
    let df = if va + vb > 0.0 {
        (va + vb).powi(2) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0))
    } else {
        na + nb - 2.0
    };
    Ok(TTestResult {
        t,
        df,
        p: two_sided_p(t, df),
        paired: false,
        variant: TestVariant::Welch,
        n_a: a.len(),
        n_b: b.len(),
        mean_diff: diff,
    })
}

/// Two-sample test assuming equal variances.
pub fn student_ttest(a: &[f64], b: &[f64]) -> Result<TTestResult, StatsError> {
    check_len(a)?;
    check_len(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let df = na + nb - 2.0;
    let pooled = ((na - 1.0) * variance(a) + (nb - 1.0) * variance(b)) / df;
    let diff = mean(a) - mean(b);
    let t = degenerate_or(diff, (pooled * (1.0 / na + 1.0 / nb)).sqrt())?;
    Ok(TTestResult {
        t,
        df,
        p: two_sided_p(t, df),
        paired: false,
        variant: TestVariant::Student,
        n_a: a.len(),
        n_b: b.len(),
        mean_diff: diff,
    })
}

pub fn unpaired_ttest(a: &[f64], b: &[f64], variant: TestVariant) -> Result<TTestResult, StatsError> {
    match variant {
        TestVariant::Student => student_ttest(a, b),
        _ => welch_ttest(a, b),
    }
}

/// Student's paired test; `a[i]` and `b[i]` belong to the same participant.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTestResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch { a: a.len(), b: b.len() });
    }
    check_len(a)?;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let md = mean(&d);
    let t = degenerate_or(md, (variance(&d) / n).sqrt())?;
    let df = n - 1.0;
    Ok(TTestResult {
        t,
        df,
        p: two_sided_p(t, df),
        paired: true,
        variant: TestVariant::StudentPaired,
        n_a: a.len(),
        n_b: b.len(),
        mean_diff: md,
    })
}

/// Align two per-participant samples. Every participant of `a` must appear in
/// `b`; participants only in `b` are ignored. Output is ordered by participant.
pub fn pair_by_participant(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> Result<(Vec<f64>, Vec<f64>), StatsError> {
    let missing: Vec<String> = a.keys().filter(|p| !b.contains_key(*p)).cloned().collect();
    if !missing.is_empty() {
        return Err(StatsError::Pairing(missing));
    }
    Ok(a.iter().map(|(p, &x)| (x, b[p])).unzip())
}

// ---------------------------------------------------------------------------
// Cells and grids

/// Per-participant mean reaction time for one selection of records.
pub fn participant_means<'a, I>(records: I) -> BTreeMap<String, f64>
where
    I: IntoIterator<Item = &'a ReactionRecord>,
{
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in records {
        let e = acc.entry(r.participant.clone()).or_insert((0.0, 0));
        e.0 += r.rt_ms;
        e.1 += 1;
    }
    acc.into_iter().map(|(p, (s, n))| (p, s / n as f64)).collect()
}

/// Per-participant means of the SRT records in one (setting, modality) cell.
pub fn cell(records: &[ReactionRecord], setting: Setting, modality: Modality) -> Vec<f64> {
    participant_means(
        records
            .iter()
            .filter(|r| r.method == Method::SRT && r.setting == setting && r.modality == modality),
    )
    .into_values()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub setting: Setting,
    pub modality: Modality,
    pub summary: SampleSummary,
}

/// Mean and SD of every populated SRT cell, ordered by modality then setting.
pub fn summary_table(records: &[ReactionRecord]) -> Vec<CellSummary> {
    let mut out = Vec::new();
    for modality in Modality::ALL {
        for setting in Setting::SRT {
            let values = cell(records, setting, modality);
            if let Ok(summary) = summarize(&values) {
                out.push(CellSummary { setting, modality, summary });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SettingComparison {
    pub modality: Modality,
    pub row: Setting,
    pub col: Setting,
    pub result: TTestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModalityComparison {
    pub setting: Setting,
    pub row: Modality,
    pub col: Modality,
    pub result: TTestResult,
}

/// Lower-triangular test grids across settings (per modality) and across
/// modalities (per setting).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignificanceGrid {
    pub variant: TestVariant,
    pub across_settings: Vec<SettingComparison>,
    pub across_modalities: Vec<ModalityComparison>,
}

impl SignificanceGrid {
    pub fn setting_test(&self, modality: Modality, a: Setting, b: Setting) -> Option<&TTestResult> {
        self.across_settings
            .iter()
            .find(|c| c.modality == modality && ((c.row == a && c.col == b) || (c.row == b && c.col == a)))
            .map(|c| &c.result)
    }

    pub fn modality_test(&self, setting: Setting, a: Modality, b: Modality) -> Option<&TTestResult> {
        self.across_modalities
            .iter()
            .find(|c| c.setting == setting && ((c.row == a && c.col == b) || (c.row == b && c.col == a)))
            .map(|c| &c.result)
    }

    /// Settings grid: one row per (modality, row setting), p-values under
    /// each column setting; upper-triangle cells left empty.
    pub fn write_settings_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let cols = &Setting::SRT[..3];
        writeln!(w, "modality,setting,{}", join(cols))?;
        for modality in Modality::ALL {
            for row in &Setting::SRT[1..] {
                let cells: Vec<String> = cols
                    .iter()
                    .map(|col| {
                        self.across_settings
                            .iter()
                            .find(|c| c.modality == modality && c.row == *row && c.col == *col)
                            .map_or(String::new(), |c| format!("{:.6}", c.result.p))
                    })
                    .collect();
                writeln!(w, "{modality},{row},{}", cells.join(","))?;
            }
        }
        w.flush()
    }

    pub fn write_modalities_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let cols = &Modality::ALL[..3];
        writeln!(w, "setting,modality,{}", join(cols))?;
        for setting in Setting::SRT {
            for row in &Modality::ALL[1..] {
                let cells: Vec<String> = cols
                    .iter()
                    .map(|col| {
                        self.across_modalities
                            .iter()
                            .find(|c| c.setting == setting && c.row == *row && c.col == *col)
                            .map_or(String::new(), |c| format!("{:.6}", c.result.p))
                    })
                    .collect();
                writeln!(w, "{setting},{row},{}", cells.join(","))?;
            }
        }
        w.flush()
    }

    /// Every test with its statistic, degrees of freedom and p-value.
    pub fn write_long_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "family,group,a,b,n_a,n_b,mean_diff,t,df,p")?;
        for c in &self.across_settings {
            write_test_row(&mut w, "setting", c.modality, c.row, c.col, &c.result)?;
        }
        for c in &self.across_modalities {
            write_test_row(&mut w, "modality", c.setting, c.row, c.col, &c.result)?;
        }
        w.flush()
    }
}

fn write_test_row<W: Write>(
    w: &mut W,
    family: &str,
    group: impl fmt::Display,
    a: impl fmt::Display,
    b: impl fmt::Display,
    r: &TTestResult,
) -> std::io::Result<()> {
    writeln!(
        w,
        "{family},{group},{a},{b},{},{},{:.6},{:.6},{:.6},{:.6}",
        r.n_a, r.n_b, r.mean_diff, r.t, r.df, r.p
    )
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}

pub fn significance_grid(records: &[ReactionRecord], variant: TestVariant) -> Result<SignificanceGrid, StatsError> {
    let mut cells = BTreeMap::new();
    let mut missing = Vec::new();
    for setting in Setting::SRT {
        for modality in Modality::ALL {
            let values = cell(records, setting, modality);
            if values.len() < 2 {
                missing.push((setting, modality));
            }
            cells.insert((setting, modality), values);
        }
    }
    if !missing.is_empty() {
        return Err(StatsError::MissingCell(missing));
    }
    let mut across_settings = Vec::new();
    for modality in Modality::ALL {
        for (i, &row) in Setting::SRT.iter().enumerate() {
            for &col in &Setting::SRT[..i] {
                let result = unpaired_ttest(&cells[&(row, modality)], &cells[&(col, modality)], variant)?;
                across_settings.push(SettingComparison { modality, row, col, result });
            }
        }
    }
    let mut across_modalities = Vec::new();
    for setting in Setting::SRT {
        for (i, &row) in Modality::ALL.iter().enumerate() {
            for &col in &Modality::ALL[..i] {
                let result = unpaired_ttest(&cells[&(setting, row)], &cells[&(setting, col)], variant)?;
                across_modalities.push(ModalityComparison { setting, row, col, result });
            }
        }
    }
    Ok(SignificanceGrid {
        variant,
        across_settings,
        across_modalities,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedComparison {
    pub label: String,
    pub result: TTestResult,
}

/// Paired tests of the vision-based reaction times: each trial against the
/// participant's VR_WT HAV trigger/response time, and consecutive trials
/// against each other.
pub fn vision_paired_report(records: &[ReactionRecord]) -> Result<Vec<PairedComparison>, StatsError> {
    let baseline = participant_means(
        records
            .iter()
            .filter(|r| r.method == Method::SRT && r.setting == Setting::VrWt && r.modality == Modality::HAV),
    );
    let mut trials: BTreeMap<u32, BTreeMap<String, f64>> = BTreeMap::new();
    for (trial, rs) in group_by_trial(records.iter().filter(|r| r.method == Method::Vision)) {
        trials.insert(trial, participant_means(rs));
    }
    if trials.is_empty() {
        return Err(StatsError::MissingCell(vec![(Setting::VisionE, Modality::HAV)]));
    }
    let mut out = Vec::new();
    for (trial, vision) in &trials {
        let (a, b) = pair_by_participant(vision, &baseline)?;
        out.push(PairedComparison {
            label: format!("vision_trial{trial}_vs_VR_WT_HAV"),
            result: paired_ttest(&a, &b)?,
        });
    }
    let keys: Vec<u32> = trials.keys().copied().collect();
    for w in keys.windows(2) {
        let (a, b) = pair_by_participant(&trials[&w[0]], &trials[&w[1]])?;
        out.push(PairedComparison {
            label: format!("vision_trial{}_vs_trial{}", w[0], w[1]),
            result: paired_ttest(&a, &b)?,
        });
    }
    Ok(out)
}

fn group_by_trial<'a>(records: impl Iterator<Item = &'a ReactionRecord>) -> BTreeMap<u32, Vec<&'a ReactionRecord>> {
    let mut out: BTreeMap<u32, Vec<&ReactionRecord>> = BTreeMap::new();
    for r in records {
        out.entry(r.trial).or_default().push(r);
    }
    out
}

pub fn write_paired_csv<W: Write>(report: &[PairedComparison], mut w: W) -> std::io::Result<()> {
    writeln!(w, "comparison,n,mean_diff,t,df,p")?;
    for c in report {
        let r = &c.result;
        writeln!(w, "{},{},{:.6},{:.6},{:.6},{:.6}", c.label, r.n_a, r.mean_diff, r.t, r.df, r.p)?;
    }
    w.flush()
}

/// Long-form summary: `setting,modality,n,mean_ms,sd_ms`.
pub fn write_summary_csv<W: Write>(summary: &[CellSummary], mut w: W) -> std::io::Result<()> {
    writeln!(w, "setting,modality,n,mean_ms,sd_ms")?;
    for c in summary {
        let sd = c.summary.sd_ms.map_or(String::new(), |s| format!("{s:.6}"));
        writeln!(w, "{},{},{},{:.6},{}", c.setting, c.modality, c.summary.n, c.summary.mean_ms, sd)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_basics() {
        let s = summarize(&[400.0, 500.0, 600.0]).unwrap();
        assert_eq!(s.n, 3);
        assert!((s.mean_ms - 500.0).abs() < 1e-12);
        assert!((s.sd_ms.unwrap() - 100.0).abs() < 1e-12);
        let one = summarize(&[321.0]).unwrap();
        assert_eq!(one.mean_ms, 321.0);
        assert_eq!(one.sd_ms, None);
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn identical_samples() {
        let a = [1.0, 4.0, 2.0, 8.0];
        let r = welch_ttest(&a, &a).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p, 1.0);
        let r = paired_ttest(&[1.0, 2.0, 4.0], &[1.0, 2.0, 5.0]).unwrap();
        assert!(r.p > 0.0 && r.p < 1.0);
    }

    #[test]
    fn degenerate_cases() {
        assert_eq!(welch_ttest(&[3.0, 3.0], &[3.0, 3.0]), Err(StatsError::DegenerateSample));
        let r = welch_ttest(&[3.0, 3.0], &[4.0, 4.0]).unwrap();
        assert_eq!(r.t, f64::NEG_INFINITY);
        assert_eq!(r.p, 0.0);
        assert_eq!(paired_ttest(&[1.0, 2.0], &[1.0, 2.0]), Err(StatsError::DegenerateSample));
        assert!(matches!(welch_ttest(&[1.0], &[1.0, 2.0]), Err(StatsError::TooFew { .. })));
        assert_eq!(
            paired_ttest(&[1.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(StatsError::LengthMismatch { a: 2, b: 3 })
        );
    }

    #[test]
    fn pairing_reports_missing_participants() {
        let a: BTreeMap<String, f64> = [("P1".into(), 1.0), ("P2".into(), 2.0)].into();
        let b: BTreeMap<String, f64> = [("P1".into(), 1.5), ("P3".into(), 2.0)].into();
        assert_eq!(pair_by_participant(&a, &b), Err(StatsError::Pairing(vec!["P2".into()])));
    }

    #[test]
    fn record_invariants() {
        let mut r = ReactionRecord {
            participant: "P1".into(),
            setting: Setting::VisionE,
            modality: Modality::HAV,
            method: Method::Vision,
            rt_ms: 400.0,
            trial: 1,
        };
        r.validate().unwrap();
        r.method = Method::SRT;
        assert!(r.validate().is_err());
        r.method = Method::Vision;
        r.rt_ms = 0.0;
        assert!(r.validate().is_err());
    }

    #[test]
    fn records_csv_accepts_optional_trial_and_dashed_settings() {
        let text = "participant,setting,modality,method,rt_ms\nP1,VR-WT,HAV,SRT,438\nP2,AR,V,SRT,597.5\n";
        let recs = read_records(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].setting, Setting::VrWt);
        assert_eq!(recs[0].trial, 1);
        let mut out = Vec::new();
        write_records(&recs, &mut out).unwrap();
        assert_eq!(read_records(out.as_slice()).unwrap(), recs);
    }

    #[test]
    fn missing_cell_is_named() {
        let mut recs = Vec::new();
        for setting in Setting::SRT {
            for modality in Modality::ALL {
                if setting == Setting::AR && modality == Modality::HV {
                    continue;
                }
                for p in 0..3 {
                    recs.push(ReactionRecord {
                        participant: format!("P{p}"),
                        setting,
                        modality,
                        method: Method::SRT,
                        rt_ms: 300.0 + p as f64 * 10.0 + modality as u8 as f64,
                        trial: 1,
                    });
                }
            }
        }
        assert_eq!(
            significance_grid(&recs, TestVariant::Welch),
            Err(StatsError::MissingCell(vec![(Setting::AR, Modality::HV)]))
        );
    }
}
