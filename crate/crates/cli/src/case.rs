use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use delta_spec::deficiency::{DeficiencyConfig, OracleMode};

use crate::config::{horizons_for, load_config, usage, AnalysisConfig, OutputPaths, HORIZON_ENV};
use crate::model::{
    parse_alpha, parse_count, parse_grid, parse_perturbation, AlphaDef, GridDef, PerturbationDef,
};

/// Grid, alpha and horizon selection shared by `analyze` and `plot-data`.
#[derive(Args, Debug, Clone, Default)]
pub struct CaseArgs {
    /// JSON config file; the flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// power-log:GAMMA,ETA[,D1] | power:GAMMA | constant:D | list:V1,V2,...[;cycle|hold-last]
    #[arg(long, conflicts_with_all = ["gamma", "eta"])]
    pub grid: Option<String>,
    /// Power-log grid d_n = 1/(n^gamma ln^eta n).
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "gamma")]
    pub eta: Option<f64>,
    /// zero | "a*(1/d_n+1/d_{n+1})" | alpha0[(U_ODD,U_EVEN)] | list:... | power sum such as "-2n-1"
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    /// Coefficient a of the scaled and alpha0 forms.
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// zero | g | C*d_n | C*n^P, added to the scaled form.
    #[arg(long, allow_hyphen_values = true)]
    pub perturbation: Option<String>,
    /// Comma-separated horizons, e.g. 1e4,1e5,1e6.
    #[arg(long, value_delimiter = ',', conflicts_with = "horizon")]
    pub horizons: Vec<String>,
    /// Largest horizon N; probes run at N/100, N/10 and N. Defaults to $DELTA_SPEC_HORIZON.
    #[arg(long)]
    pub horizon: Option<String>,
}

/// Horizon from `$DELTA_SPEC_HORIZON`, if set.
pub fn env_horizon() -> Result<Option<usize>> {
    match std::env::var(HORIZON_ENV) {
        Ok(v) if !v.trim().is_empty() => parse_count(&v)
            .map(Some)
            .map_err(|e| usage(format!("{HORIZON_ENV}: {e:#}"))),
        _ => Ok(None),
    }
}

fn grid_from_flags(args: &CaseArgs) -> Result<Option<GridDef>> {
    if let Some(g) = &args.grid {
        return parse_grid(g)
            .map(Some)
            .map_err(|e| usage(format!("--grid: {e:#}")));
    }
    Ok(args.gamma.map(|gamma| GridDef::PowerLog {
        gamma,
        eta: args.eta.unwrap_or(0.0),
        d1: 1.0,
    }))
}

fn alpha_from_flags(args: &CaseArgs) -> Result<Option<AlphaDef>> {
    let perturbation = match &args.perturbation {
        Some(p) => parse_perturbation(p).map_err(|e| usage(format!("--perturbation: {e:#}")))?,
        None => PerturbationDef::Zero,
    };
    let text = match (&args.alpha, args.a) {
        (Some(s), _) => s.as_str(),
        (None, Some(_)) => "scaled",
        (None, None) if args.perturbation.is_some() => {
            return Err(usage("--perturbation needs --a"))
        }
        (None, None) => return Ok(None),
    };
    parse_alpha(text, args.a, perturbation)
        .map(Some)
        .map_err(|e| usage(format!("--alpha: {e:#}")))
}

fn horizons_from_flags(args: &CaseArgs) -> Result<Option<Vec<usize>>> {
    if !args.horizons.is_empty() {
        let hs = args
            .horizons
            .iter()
            .map(|h| parse_count(h))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| usage(format!("--horizons: {e:#}")))?;
        return Ok(Some(hs));
    }
    match &args.horizon {
        Some(h) => {
            let n = parse_count(h).map_err(|e| usage(format!("--horizon: {e:#}")))?;
            Ok(Some(horizons_for(n)))
        }
        None => Ok(None),
    }
}

impl CaseArgs {
    /// Flags over config file over `$DELTA_SPEC_HORIZON` over defaults.
    pub fn resolve(&self, default_oracle: OracleMode) -> Result<AnalysisConfig> {
        let file = self.config.as_deref().map(load_config).transpose()?;
        let grid = grid_from_flags(self)?;
        let alpha = alpha_from_flags(self)?;
        let horizons = horizons_from_flags(self)?;
        let mut cfg = match file {
            Some(mut c) => {
                if let Some(g) = grid {
                    c.grid = g;
                }
                if let Some(a) = alpha {
                    c.alpha = a;
                }
                c
            }
            None => {
                let grid =
                    grid.ok_or_else(|| usage("no grid given; use --grid, --gamma or --config"))?;
                let mut analysis = DeficiencyConfig {
                    oracle: default_oracle,
                    ..DeficiencyConfig::default()
                };
                if let Some(n) = env_horizon()? {
                    analysis.horizons = horizons_for(n);
                }
                AnalysisConfig {
                    grid,
                    alpha: alpha.unwrap_or(AlphaDef::Zero),
                    analysis,
                    output: OutputPaths::default(),
                }
            }
        };
        if let Some(hs) = horizons {
            cfg.analysis.horizons = hs;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_build_a_config() {
        let args = CaseArgs {
            gamma: Some(1.0),
            eta: Some(0.0),
            alpha: Some("a*(1/d_n+1/d_{n+1})".into()),
            a: Some(-0.5),
            perturbation: Some("1/n".into()),
            horizons: vec!["1e3".into(), "10^4".into()],
            ..Default::default()
        };
        let cfg = args.resolve(OracleMode::WhenUncertified).unwrap();
        assert_eq!(cfg.analysis.horizons, vec![1_000, 10_000]);
        assert_eq!(cfg.alpha.a(), -0.5);
        assert!(CaseArgs::default().resolve(OracleMode::Off).is_err());
        let bad = CaseArgs {
            gamma: Some(1.0),
            horizons: vec!["100".into(), "10".into()],
            ..Default::default()
        };
        assert!(bad
            .resolve(OracleMode::Off)
            .unwrap_err()
            .downcast_ref::<crate::config::UsageError>()
            .is_some());
    }
}
