//! Uniform JSON records for individual probes.
//!
//! Every record has the shape
//! `{test, params, checkpoints, verdict, witnesses}`:
//!
//! | field         | content                                                     |
//! |---------------|-------------------------------------------------------------|
//! | `test`        | test id (`"I"`, `"ii"`, `"floquet-band"`, `"oracle"`, ...)  |
//! | `params`      | grid and alpha descriptions plus the probe's own parameters |
//! | `checkpoints` | `[n, value]` pairs: partial sums, sampled constants, masses |
//! | `verdict`     | the probe's own outcome as a lowercase string               |
//! | `witnesses`   | numbers supporting the verdict (sups, drifts, exponents)    |

use serde::Serialize;
use serde_json::{json, Value};

use crate::criteria::{BoundProbe, SeriesProbe, SeriesVerdict};
use crate::deficiency::{DeficiencyAnalysis, FloquetPath, OracleCheck, FLOQUET_BAND, SUM_D2};
use crate::grid::GridSequence;
use crate::jacobi::AlphaSequence;
use crate::numeric::TriState;
use crate::Scalar;

/// Version of the record layout above.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRecord {
    pub test: String,
    pub params: Value,
    pub checkpoints: Vec<(usize, f64)>,
    pub verdict: String,
    pub witnesses: Value,
}

fn tri(t: TriState) -> &'static str {
    match t {
        TriState::Yes => "yes",
        TriState::No => "no",
        TriState::Unknown => "unknown",
    }
}

fn series_verdict(v: SeriesVerdict) -> &'static str {
    match v {
        SeriesVerdict::Diverges => "diverges",
        SeriesVerdict::Converges => "converges",
        SeriesVerdict::Unknown => "unknown",
    }
}

fn f<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

impl ProbeRecord {
    pub fn from_series<T: Scalar>(p: &SeriesProbe<T>, base: &Value) -> Self {
        let verdict = if p.verdict == SeriesVerdict::Diverges && !p.gate.status.is_yes() {
            "gated"
        } else {
            series_verdict(p.verdict)
        };
        Self {
            test: p.test.into(),
            params: base.clone(),
            checkpoints: p
                .checkpoints
                .iter()
                .map(|c| (c.horizon, f(c.partial_sum)))
                .collect(),
            verdict: verdict.into(),
            witnesses: json!({
                "basis": p.basis,
                "fitted_growth": p.fitted_growth,
                "term_class": p.term_class,
                "gate": p.gate,
            }),
        }
    }

    pub fn from_bound<T: Scalar>(p: &BoundProbe<T>, base: &Value) -> Self {
        let mut params = base.clone();
        params["horizon"] = json!(p.horizon);
        params["g"] = json!(p.g);
        let verdict = match (p.holds, p.gate.status) {
            (TriState::Yes, TriState::Yes) => "holds",
            (TriState::Yes, _) => "gated",
            (TriState::No, _) => "fails",
            (TriState::Unknown, _) => "unknown",
        };
        Self {
            test: p.test.into(),
            params,
            checkpoints: p.samples.iter().map(|&(n, c)| (n, f(c))).collect(),
            verdict: verdict.into(),
            witnesses: json!({
                "minimal_constant": f(p.minimal_constant),
                "trend": p.trend,
                "gate": p.gate,
            }),
        }
    }

    pub fn from_floquet<T: Scalar>(p: &FloquetPath<T>, base: &Value) -> Self {
        let b = &p.condition_b;
        Self {
            test: FLOQUET_BAND.into(),
            params: base.clone(),
            checkpoints: p
                .condition_a
                .checkpoints
                .iter()
                .map(|c| (c.horizon, f(c.partial_sum)))
                .collect(),
            verdict: if p.applies() { "applies" } else { "blocked" }.into(),
            witnesses: json!({
                "a": p.a.map(f),
                "u_odd": f(b.u.u_odd),
                "u_even": f(b.u.u_even),
                "u_product": f(b.product),
                "delta0": p.floquet.as_ref().map(|x| f(x.discriminant)),
                "ratio_limit": p.ratio_limit.map(f),
                "remainder_order_of_gap": tri(p.remainder_order_of_gap),
                "ell2_minus_ell1": tri(p.ell2_minus_ell1),
                "condition_a": series_verdict(p.condition_a.verdict),
                "condition_b": tri(b.holds),
                "condition_b_residual_order": b.residual_order.map(f),
                "blockers": p.blockers,
            }),
        }
    }

    pub fn from_oracle<T: Scalar>(o: &OracleCheck<T>, base: &Value) -> Self {
        let mut params = base.clone();
        params["horizon"] = json!(o.horizon);
        let masses = |v: &[T]| v.iter().map(|&x| f(x)).collect::<Vec<_>>();
        let verdict = match o.n_pm {
            Some(n) => format!("n_pm={n}"),
            None => "undecided".into(),
        };
        Self {
            test: "oracle".into(),
            params,
            checkpoints: o
                .plus_i
                .block_log_mass
                .iter()
                .enumerate()
                .map(|(k, &m)| (1usize << k, f(m)))
                .collect(),
            verdict,
            witnesses: json!({
                "plus_i": {"verdict": o.plus_i.verdict, "decay_ratio": o.plus_i.decay_ratio.map(f)},
                "minus_i": {
                    "verdict": o.minus_i.verdict,
                    "decay_ratio": o.minus_i.decay_ratio.map(f),
                    "block_log_mass": masses(&o.minus_i.block_log_mass),
                },
                "max_row_residual": f(o.max_row_residual),
                "advisory": true,
            }),
        }
    }
}

/// Grid and alpha description shared by every record of one analysis.
pub fn base_params<T: Scalar>(grid: &GridSequence<T>, alpha: &AlphaSequence<T>) -> Value {
    json!({"grid": grid.describe(), "alpha": alpha.describe()})
}

/// All probes of an analysis, in pipeline order.
pub fn probe_records<T: Scalar>(
    a: &DeficiencyAnalysis<T>,
    grid: &GridSequence<T>,
    alpha: &AlphaSequence<T>,
) -> Vec<ProbeRecord> {
    let base = base_params(grid, alpha);
    let s = &a.summability;
    let mut out = vec![ProbeRecord {
        test: SUM_D2.into(),
        params: base.clone(),
        checkpoints: Vec::new(),
        verdict: match s.in_ell2 {
            TriState::No => "diverges",
            TriState::Yes => "converges",
            TriState::Unknown => "unknown",
        }
        .into(),
        witnesses: json!({"in_ell1": tri(s.in_ell1), "in_ell2": tri(s.in_ell2), "basis": s.basis}),
    }];
    out.extend(a.series.iter().map(|p| ProbeRecord::from_series(p, &base)));
    out.extend(a.bounds.iter().map(|p| ProbeRecord::from_bound(p, &base)));
    out.push(ProbeRecord::from_floquet(&a.floquet_path, &base));
    out.extend(a.oracle.iter().map(|o| ProbeRecord::from_oracle(o, &base)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deficiency::{analyze, DeficiencyConfig, OracleMode};
    use crate::jacobi::Perturbation;

    #[test]
    fn records_have_the_documented_shape() {
        let grid = GridSequence::<f64>::power(1.0).unwrap();
        let alpha = AlphaSequence::scaled_inverse_gaps(
            -0.5,
            Perturbation::Power {
                coef: 1.0,
                exponent: -1.0,
            },
        )
        .unwrap();
        let cfg = DeficiencyConfig {
            oracle: OracleMode::Always,
            ..DeficiencyConfig::default().with_horizons(vec![1_000, 10_000])
        };
        let a = analyze(&grid, &alpha, &cfg).unwrap();
        let recs = probe_records(&a, &grid, &alpha);
        let tests: Vec<_> = recs.iter().map(|r| r.test.as_str()).collect();
        assert_eq!(
            tests,
            [
                SUM_D2,
                "I",
                "i",
                "II",
                "III",
                "ii",
                "iii",
                FLOQUET_BAND,
                "oracle"
            ]
        );
        for r in &recs {
            let v = serde_json::to_value(r).unwrap();
            let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
            assert_eq!(keys.len(), 5, "{keys:?}");
            for k in ["test", "params", "checkpoints", "verdict", "witnesses"] {
                assert!(v.get(k).is_some(), "missing {k}");
            }
        }
        let floquet = recs.iter().find(|r| r.test == FLOQUET_BAND).unwrap();
        assert_eq!(floquet.verdict, "applies");
        assert!((floquet.witnesses["delta0"].as_f64().unwrap() - (-0.5)).abs() < 1e-6);
        assert_eq!(recs.last().unwrap().verdict, "n_pm=1");
    }
}
