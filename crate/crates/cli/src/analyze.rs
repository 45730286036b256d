use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use delta_spec::deficiency::{analyze, CriterionVerdict, DeficiencyAnalysis, OracleMode};
use delta_spec::report::{probe_records, ProbeRecord, SCHEMA_VERSION};
use serde::Serialize;

use crate::case::CaseArgs;
use crate::config::AnalysisConfig;
use crate::write_output;

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    /// off | when-uncertified | always
    #[arg(long, value_parser = parse_oracle)]
    pub oracle: Option<OracleMode>,
    /// Report path; `-` or absent writes to stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Directory for per-probe `n,value` CSV files.
    #[arg(long)]
    pub probes_csv: Option<PathBuf>,
    /// Include wall-clock seconds per stage (output is then not reproducible).
    #[arg(long)]
    pub with_timings: bool,
}

pub fn parse_oracle(s: &str) -> Result<OracleMode, String> {
    match s {
        "off" => Ok(OracleMode::Off),
        "when-uncertified" | "when_uncertified" => Ok(OracleMode::WhenUncertified),
        "always" => Ok(OracleMode::Always),
        _ => Err(format!(
            "unknown oracle mode `{s}` (off, when-uncertified, always)"
        )),
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub config: AnalysisConfig,
    pub probes: Vec<ProbeRecord>,
    pub verdict: CriterionVerdict,
    /// Certifying test id, `numerical-advisory` or `inconclusive`.
    pub provenance: String,
    pub oracle_agrees: Option<bool>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage_seconds: Option<Vec<(&'static str, f64)>>,
}

impl Report {
    pub fn new(
        config: AnalysisConfig,
        probes: Vec<ProbeRecord>,
        a: &DeficiencyAnalysis<f64>,
        timings: bool,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config,
            probes,
            provenance: a.verdict.provenance().to_string(),
            verdict: a.verdict.clone(),
            oracle_agrees: a.oracle_agrees(),
            warnings: a.warnings.clone(),
            stage_seconds: timings.then(|| a.stage_seconds.clone()),
        }
    }
}

fn write_probe_csvs(dir: &Path, probes: &[ProbeRecord]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    for (i, p) in probes.iter().enumerate() {
        let path = dir.join(format!("{i:02}_{}.csv", p.test));
        let mut w = csv::Writer::from_path(&path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        w.write_record(["n", "value"])?;
        for (n, v) in &p.checkpoints {
            w.serialize((n, v))?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn run(args: AnalyzeArgs) -> Result<()> {
    let mut cfg = args.case.resolve(OracleMode::WhenUncertified)?;
    if let Some(mode) = args.oracle {
        cfg.analysis.oracle = mode;
    }
    if let Some(p) = args.out {
        cfg.output.report = Some(p);
    }
    if let Some(p) = args.probes_csv {
        cfg.output.probes_csv = Some(p);
    }
    let grid = cfg.grid.build()?;
    let alpha = cfg.alpha.build(&grid, cfg.analysis.horizon())?;
    let analysis = analyze(&grid, &alpha, &cfg.analysis)?;
    let probes = probe_records(&analysis, &grid, &alpha);
    if let Some(dir) = &cfg.output.probes_csv {
        write_probe_csvs(dir, &probes)?;
    }
    for w in &analysis.warnings {
        eprintln!("warning: {w}");
    }
    let out = cfg.output.report.clone();
    let report = Report::new(cfg, probes, &analysis, args.with_timings);
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    write_output(out.as_deref(), |w| w.write_all(text.as_bytes()))?;
    if out.as_deref().is_some_and(|p| p != Path::new("-")) {
        println!("{}", report.verdict);
    }
    Ok(())
}
