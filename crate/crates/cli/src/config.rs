use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Result;
use delta_spec::deficiency::DeficiencyConfig;
use serde::{Deserialize, Serialize};

use crate::model::{AlphaDef, GridDef};

pub const HORIZON_ENV: &str = "DELTA_SPEC_HORIZON";

/// Bad input from the user; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub report: Option<PathBuf>,
    /// Directory receiving one `n,value` CSV per probe.
    pub probes_csv: Option<PathBuf>,
}

/// Input of `analyze`, as read from JSON and echoed in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub grid: GridDef,
    pub alpha: AlphaDef,
    #[serde(default)]
    pub analysis: DeficiencyConfig,
    #[serde(default)]
    pub output: OutputPaths,
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        self.analysis.validate().map_err(|e| usage(e.to_string()))
    }
}

/// Parses a config, reporting the offending key path and position.
pub fn parse_config(text: &str, origin: &str) -> Result<AnalysisConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: AnalysisConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        usage(format!(
            "{origin}: key `{path}` (line {}, column {}): {inner}",
            inner.line(),
            inner.column()
        ))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<AnalysisConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    parse_config(&text, &path.display().to_string())
}

/// Horizons `[N/100, N/10, N]`, dropping those below 100.
pub fn horizons_for(n: usize) -> Vec<usize> {
    let mut hs: Vec<usize> = [n / 100, n / 10, n]
        .into_iter()
        .filter(|&h| h >= 100)
        .collect();
    hs.dedup();
    if hs.is_empty() {
        hs.push(n);
    }
    hs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = parse_config(
            r#"{"grid": {"family": "power_log", "gamma": 1, "eta": 0}, "alpha": {"family": "zero"}}"#,
            "inline",
        )
        .unwrap();
        assert_eq!(cfg.analysis.horizons, vec![10_000, 100_000, 1_000_000]);
        assert_eq!(cfg.output, OutputPaths::default());
    }

    #[test]
    fn errors_name_the_key_and_line() {
        let text = "{\n  \"grid\": {\"family\": \"constant\", \"d\": \"one\"},\n  \"alpha\": {\"family\": \"zero\"}\n}";
        let msg = parse_config(text, "c.json").unwrap_err().to_string();
        assert!(
            msg.contains("c.json: key `grid`") && msg.contains("line 2, column 44"),
            "{msg}"
        );
        let text =
            r#"{"grid": {"family": "constant", "d": 1}, "alpha": {"family": "zero"}, "colour": 1}"#;
        let msg = parse_config(text, "c.json").unwrap_err().to_string();
        assert!(msg.contains("colour"), "{msg}");
        let text = r#"{"grid": {"family": "constant", "d": 1}, "alpha": {"family": "zero"}, "analysis": {"horizons": [100, 10]}}"#;
        assert!(parse_config(text, "c.json")
            .unwrap_err()
            .downcast_ref::<UsageError>()
            .is_some());
    }

    #[test]
    fn horizon_ladder() {
        assert_eq!(horizons_for(1_000_000), vec![10_000, 100_000, 1_000_000]);
        assert_eq!(horizons_for(1_000), vec![100, 1_000]);
        assert_eq!(horizons_for(50), vec![50]);
    }
}
