use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use delta_spec::deficiency::{analyze, DeficiencyConfig, OracleMode};
use rayon::prelude::*;
use serde::Serialize;

use crate::analyze::parse_oracle;
use crate::case::env_horizon;
use crate::config::{horizons_for, usage};
use crate::model::{
    parse_count, parse_perturbation, parse_values, AlphaDef, GridDef, PerturbationDef,
};
use crate::write_output;

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Values of gamma: list `x,y,...` or range `start:stop:step`.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub gamma: String,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub eta: String,
    /// Values of a (required, nonempty).
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,
    /// scaled (a(1/d_n+1/d_{n+1}) + p_n) or alpha0 (measured u).
    #[arg(long, default_value = "scaled")]
    pub alpha: String,
    /// Perturbation p_n of the scaled form: zero | g | C*d_n | C*n^P.
    #[arg(long, default_value = "zero", allow_hyphen_values = true)]
    pub perturbation: String,
    /// Largest horizon N; probes run at N/100, N/10 and N. Defaults to $DELTA_SPEC_HORIZON.
    #[arg(long)]
    pub horizon: Option<String>,
    #[arg(long, default_value = "when-uncertified", value_parser = parse_oracle)]
    pub oracle: OracleMode,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// CSV path; `-` or absent writes to stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// One row of the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub eta: f64,
    pub a: f64,
    pub verdict: String,
    pub certifying_test: String,
    pub u_odd: Option<f64>,
    pub u_even: Option<f64>,
    pub delta0: Option<f64>,
    #[serde(rename = "minimal_C1")]
    pub minimal_c1: Option<f64>,
    #[serde(rename = "minimal_C2")]
    pub minimal_c2: Option<f64>,
}

impl SweepRow {
    fn failed(grid: &GridDef, a: f64, err: anyhow::Error) -> Self {
        let (gamma, eta) = grid.gamma_eta();
        Self {
            gamma,
            eta,
            a,
            verdict: "Error".into(),
            certifying_test: format!("{err:#}"),
            u_odd: None,
            u_even: None,
            delta0: None,
            minimal_c1: None,
            minimal_c2: None,
        }
    }
}

pub fn sweep_row(grid: &GridDef, alpha: &AlphaDef, cfg: &DeficiencyConfig) -> Result<SweepRow> {
    let g = grid.build()?;
    let al = alpha.build(&g, cfg.horizon())?;
    let an = analyze(&g, &al, cfg)?;
    let (gamma, eta) = grid.gamma_eta();
    let u = an.floquet_path.condition_b.u;
    Ok(SweepRow {
        gamma,
        eta,
        a: alpha.a(),
        verdict: an.verdict.label().into(),
        certifying_test: an.verdict.provenance().into(),
        u_odd: Some(u.u_odd),
        u_even: Some(u.u_even),
        delta0: an.floquet_path.floquet.map(|f| f.discriminant),
        minimal_c1: an.bound("II").map(|b| b.minimal_constant),
        minimal_c2: an.bound("III").map(|b| b.minimal_constant),
    })
}

/// Rows in `(γ, η, a)` lexicographic order of the inputs.
pub fn run_sweep(cases: &[(GridDef, AlphaDef)], cfg: &DeficiencyConfig) -> Vec<SweepRow> {
    cases
        .par_iter()
        .map(|(grid, alpha)| {
            sweep_row(grid, alpha, cfg).unwrap_or_else(|e| SweepRow::failed(grid, alpha.a(), e))
        })
        .collect()
}

fn values(flag: &str, s: &str) -> Result<Vec<f64>> {
    let v = parse_values(s).map_err(|e| usage(format!("--{flag}: {e:#}")))?;
    if v.is_empty() {
        return Err(usage(format!("--{flag} gives an empty range")));
    }
    Ok(v)
}

pub fn run(args: SweepArgs) -> Result<()> {
    let gammas = values("gamma", &args.gamma)?;
    let etas = values("eta", &args.eta)?;
    let a_values = values("a", &args.a)?;
    let perturbation = parse_perturbation(&args.perturbation)
        .map_err(|e| usage(format!("--perturbation: {e:#}")))?;
    let alpha_of = |a: f64| -> Result<AlphaDef> {
        match args.alpha.as_str() {
            "scaled" => Ok(AlphaDef::ScaledInverseGaps {
                a,
                perturbation: perturbation.clone(),
            }),
            "alpha0" if perturbation == PerturbationDef::Zero => {
                Ok(AlphaDef::AlphaZero { a, u: None })
            }
            "alpha0" => Err(usage("alpha0 takes no perturbation")),
            other => Err(usage(format!(
                "--alpha: unknown family `{other}` (scaled, alpha0)"
            ))),
        }
    };
    let n = match &args.horizon {
        Some(h) => Some(parse_count(h).map_err(|e| usage(format!("--horizon: {e:#}")))?),
        None => env_horizon()?,
    };
    let mut cfg = DeficiencyConfig {
        oracle: args.oracle,
        ..DeficiencyConfig::default()
    };
    if let Some(n) = n {
        cfg.horizons = horizons_for(n);
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;

    let mut cases = Vec::new();
    for &gamma in &gammas {
        for &eta in &etas {
            for &a in &a_values {
                cases.push((
                    GridDef::PowerLog {
                        gamma,
                        eta,
                        d1: 1.0,
                    },
                    alpha_of(a)?,
                ));
            }
        }
    }
    let rows = if args.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build()?
            .install(|| run_sweep(&cases, &cfg))
    } else {
        run_sweep(&cases, &cfg)
    };
    let failures = rows.iter().filter(|r| r.verdict == "Error").count();
    write_output(args.out.as_deref(), |w| {
        let mut csv = csv::Writer::from_writer(w);
        for r in &rows {
            csv.serialize(r)?;
        }
        csv.flush()
    })?;
    if failures > 0 {
        eprintln!(
            "warning: {failures} of {} rows failed; see the certifying_test column",
            rows.len()
        );
    }
    Ok(())
}
