use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use delta_spec::battery::{run_battery, BatteryConfig, GROUPS, REFERENCE_HORIZON};

use crate::case::env_horizon;
use crate::config::usage;
use crate::model::parse_count;
use crate::write_output;

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Horizon N; tolerances loosen below 10^6. Defaults to $DELTA_SPEC_HORIZON, then 10^6.
    #[arg(long)]
    pub horizon: Option<String>,
    /// Run only these groups (comma-separated or repeated).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    /// Also write the results as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// Returns whether every check passed.
pub fn run(args: VerifyArgs) -> Result<bool> {
    let horizon = match &args.horizon {
        Some(h) => parse_count(h).map_err(|e| usage(format!("--horizon: {e:#}")))?,
        None => env_horizon()?.unwrap_or(REFERENCE_HORIZON),
    };
    let cfg = BatteryConfig {
        horizon,
        only: args.only,
    };
    cfg.validate()
        .map_err(|e| usage(format!("{e}; groups: {}", GROUPS.join(", "))))?;
    let report = run_battery(&cfg)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for c in &report.checks {
        writeln!(
            out,
            "{} [{}] {}: measured {:.6e}, expected {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.group,
            c.name,
            c.measured,
            c.expected
        )?;
    }
    let failed = report.failures().count();
    writeln!(
        out,
        "{} of {} checks passed at N = {horizon} in {:.1} s",
        report.checks.len() - failed,
        report.checks.len(),
        report.seconds
    )?;
    if let Some(path) = &args.json {
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        write_output(Some(path), |w| w.write_all(text.as_bytes()))?;
    }
    Ok(failed == 0)
}
