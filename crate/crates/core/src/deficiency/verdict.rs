use std::fmt;
use std::time::Instant;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::criteria::{
    check_condition_a_with, check_condition_b_with, select_g, test_bound_ii, test_bound_iii,
    test_carleman_i, test_cubic_series, test_exact_ii, test_exact_iii, BoundProbe, ConditionB,
    CriteriaConfig, GKind, SeriesProbe, SeriesVerdict,
};
use crate::error::{Error, Result};
use crate::grid::{GridSequence, Summability};
use crate::jacobi::{AlphaFamily, AlphaSequence, JacobiOperator};
use crate::numeric::TriState;
use crate::Scalar;

use super::floquet::FloquetResult;
use super::recurrence::{l2_probe_gauged, solve_recurrence, L2Config, L2Status, L2Verdict};

/// Test id for the periodic-gauge deficiency certificate.
pub const FLOQUET_BAND: &str = "floquet-band";
/// Test id for the `d ∉ ℓ²` self-adjointness certificate.
pub const SUM_D2: &str = "sum-d2";

/// Final answer of the pipeline, always carrying its provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CriterionVerdict {
    SelfAdjoint {
        test: String,
        advisory: bool,
    },
    Deficient {
        n_pm: u8,
        test: String,
        advisory: bool,
    },
    Inconclusive {
        reason: String,
    },
}

impl CriterionVerdict {
    /// Certifying test id, `numerical-advisory` or `inconclusive`.
    pub fn provenance(&self) -> &str {
        match self {
            CriterionVerdict::SelfAdjoint { advisory: true, .. }
            | CriterionVerdict::Deficient { advisory: true, .. } => "numerical-advisory",
            CriterionVerdict::SelfAdjoint { test, .. }
            | CriterionVerdict::Deficient { test, .. } => test,
            CriterionVerdict::Inconclusive { .. } => "inconclusive",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CriterionVerdict::SelfAdjoint { .. } => "SelfAdjoint",
            CriterionVerdict::Deficient { .. } => "Deficient",
            CriterionVerdict::Inconclusive { .. } => "Inconclusive",
        }
    }

    pub fn is_certificate(&self) -> bool {
        matches!(
            self,
            CriterionVerdict::SelfAdjoint {
                advisory: false,
                ..
            } | CriterionVerdict::Deficient {
                advisory: false,
                ..
            }
        )
    }
}

impl fmt::Display for CriterionVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriterionVerdict::Deficient { n_pm, .. } => {
                write!(f, "Deficient(n_pm={n_pm}, {})", self.provenance())
            }
            CriterionVerdict::Inconclusive { reason } => write!(f, "Inconclusive({reason})"),
            _ => write!(f, "{}({})", self.label(), self.provenance()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    Off,
    /// Only when no analytic test decides.
    WhenUncertified,
    Always,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeficiencyConfig {
    pub horizons: Vec<usize>,
    pub criteria: CriteriaConfig,
    pub l2: L2Config,
    /// Required distance of `|Δ_a(0)|` from 1.
    pub delta_margin: f64,
    /// Allowed distance of the estimated `lim d_{n+1}/d_n` from 1.
    pub ratio_tolerance: f64,
    pub oracle: OracleMode,
    /// Defaults to the last horizon.
    pub oracle_horizon: Option<usize>,
}

impl Default for DeficiencyConfig {
    fn default() -> Self {
        Self {
            horizons: vec![10_000, 100_000, 1_000_000],
            criteria: CriteriaConfig::default(),
            l2: L2Config::default(),
            delta_margin: 1e-6,
            ratio_tolerance: 1e-3,
            oracle: OracleMode::WhenUncertified,
            oracle_horizon: None,
        }
    }
}

impl DeficiencyConfig {
    pub fn with_horizons(mut self, horizons: Vec<usize>) -> Self {
        self.horizons = horizons;
        self
    }

    pub fn horizon(&self) -> usize {
        self.horizons.last().copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        crate::criteria::validate_horizons(&self.horizons)?;
        self.criteria.validate()?;
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter {
                    name,
                    value: v,
                    reason: "must be positive",
                })
            }
        };
        positive("delta_margin", self.delta_margin)?;
        positive("ratio_tolerance", self.ratio_tolerance)?;
        positive("l2.margin", self.l2.margin)?;
        if self.l2.blocks == 0 {
            return Err(Error::InvalidInput("l2.blocks must be at least 1".into()));
        }
        Ok(())
    }
}

/// Inputs and outcome of the periodic-gauge deficiency test.
#[derive(Debug, Clone, Serialize)]
pub struct FloquetPath<T> {
    pub a: Option<T>,
    pub remainder_order_of_gap: TriState,
    pub ratio_limit: Option<T>,
    pub ell2_minus_ell1: TriState,
    pub condition_a: SeriesProbe<T>,
    pub condition_b: ConditionB<T>,
    pub floquet: Option<FloquetResult<T>>,
    /// Reasons the certificate does not apply; empty when it does.
    pub blockers: Vec<String>,
}

impl<T> FloquetPath<T> {
    pub fn applies(&self) -> bool {
        self.blockers.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck<T> {
    pub horizon: usize,
    pub plus_i: L2Verdict<T>,
    pub minus_i: L2Verdict<T>,
    pub max_row_residual: T,
    /// `Some(0)` or `Some(1)` when both probes agree.
    pub n_pm: Option<u8>,
}

/// Everything the pipeline computed, in the order it was computed.
#[derive(Debug, Clone, Serialize)]
pub struct DeficiencyAnalysis<T> {
    pub verdict: CriterionVerdict,
    pub summability: Summability<T>,
    pub g: GKind<T>,
    pub series: Vec<SeriesProbe<T>>,
    pub bounds: Vec<BoundProbe<T>>,
    pub floquet_path: FloquetPath<T>,
    pub oracle: Option<OracleCheck<T>>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub stage_seconds: Vec<(&'static str, f64)>,
}

impl<T: Scalar> DeficiencyAnalysis<T> {
    pub fn bound(&self, test: &str) -> Option<&BoundProbe<T>> {
        self.bounds.iter().find(|b| b.test == test)
    }

    /// Whether the oracle's advisory answer matches a certified verdict;
    /// `None` when there is nothing to compare.
    pub fn oracle_agrees(&self) -> Option<bool> {
        let n_pm = self.oracle.as_ref()?.n_pm?;
        match &self.verdict {
            CriterionVerdict::SelfAdjoint {
                advisory: false, ..
            } => Some(n_pm == 0),
            CriterionVerdict::Deficient {
                advisory: false,
                n_pm: want,
                ..
            } => Some(n_pm == *want),
            _ => None,
        }
    }
}

struct Stopwatch {
    stages: Vec<(&'static str, f64)>,
    last: Instant,
}

impl Stopwatch {
    fn new() -> Self {
        Self {
            stages: Vec::new(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &'static str) {
        let now = Instant::now();
        self.stages.push((stage, (now - self.last).as_secs_f64()));
        self.last = now;
    }
}

fn floquet_path<T: Scalar>(
    op: &JacobiOperator<T>,
    summability: &Summability<T>,
    cfg: &DeficiencyConfig,
) -> Result<FloquetPath<T>> {
    let grid = op.grid();
    let horizon = cfg.horizon();
    let tilde = op.tilde();
    let condition_a = check_condition_a_with(tilde, &cfg.horizons)?;
    let condition_b = check_condition_b_with(tilde, horizon, &cfg.criteria);
    let form = op.alpha_sequence().scaled_inverse_form(grid);
    let a = form.map(|(a, _)| a);
    let mut remainder = form.map_or(TriState::No, |(_, r)| r);
    if let AlphaFamily::AlphaZero { u, .. } = op.alpha_sequence().family() {
        let close = |x: T, y: T| (x - y).abs() <= T::lit(1e-6) * y.abs();
        remainder = TriState::from_bool(
            condition_b.holds.is_yes()
                && close(u.u_odd, condition_b.u.u_odd)
                && close(u.u_even, condition_b.u.u_even),
        );
    }
    let ratio_limit = grid.ratio_stats(horizon)?.limit_estimate;
    let ell2_minus_ell1 = summability.in_ell2_minus_ell1();
    let floquet = a.map(|a| FloquetResult::new(condition_b.u, a, T::zero()));

    let mut blockers = Vec::new();
    match a {
        None => blockers.push("alpha is not of the form a(1/d_n + 1/d_{n+1}) + p_n".to_string()),
        Some(a) if !(a > -T::lit(2.0) && a < T::zero()) => {
            blockers.push(format!("a = {a} is outside (-2, 0)"))
        }
        _ => {}
    }
    if !remainder.is_yes() {
        blockers.push("remainder p_n is not known to be O(d_n)".into());
    }
    match ratio_limit {
        Some(l) if (l - T::one()).abs() <= T::lit(cfg.ratio_tolerance) => {}
        _ => blockers.push("d_{n+1}/d_n does not tend to 1".into()),
    }
    if !ell2_minus_ell1.is_yes() {
        blockers.push("d is not known to lie in l2 \\ l1".into());
    }
    if condition_a.verdict != SeriesVerdict::Converges {
        blockers.push("r_n r~_n is not known to be square summable".into());
    }
    if !condition_b.holds.is_yes() {
        blockers.push("rho_n is not asymptotically 2-periodic".into());
    }
    if let Some(f) = &floquet {
        if !f.inside_band(T::lit(cfg.delta_margin)) {
            blockers.push(format!(
                "|Delta_a(0)| = {} is not below 1 - margin",
                f.discriminant.abs()
            ));
        }
    }
    Ok(FloquetPath {
        a,
        remainder_order_of_gap: remainder,
        ratio_limit,
        ell2_minus_ell1,
        condition_a,
        condition_b,
        floquet,
        blockers,
    })
}

/// Numerical ℓ² probes at `λ = ±i`.
pub fn oracle_check<T: Scalar>(
    op: &JacobiOperator<T>,
    horizon: usize,
    l2: &L2Config,
) -> Result<OracleCheck<T>> {
    let plus = solve_recurrence(op, Complex::new(T::zero(), T::one()), horizon)?;
    let minus = solve_recurrence(op, Complex::new(T::zero(), -T::one()), horizon)?;
    let max_row_residual = plus.max_row_residual(op).max(minus.max_row_residual(op));
    let (plus_i, minus_i) = (
        l2_probe_gauged(&plus, op, l2),
        l2_probe_gauged(&minus, op, l2),
    );
    let n_pm = match (plus_i.verdict, minus_i.verdict) {
        (L2Status::InEll2, L2Status::InEll2) => Some(1),
        (L2Status::NotInEll2, L2Status::NotInEll2) => Some(0),
        _ => None,
    };
    Ok(OracleCheck {
        horizon,
        plus_i,
        minus_i,
        max_row_residual,
        n_pm,
    })
}

/// Runs the self-adjointness tests, the periodic-gauge deficiency test and,
/// if needed, the numerical oracle.
pub fn analyze<T: Scalar>(
    grid: &GridSequence<T>,
    alpha: &AlphaSequence<T>,
    cfg: &DeficiencyConfig,
) -> Result<DeficiencyAnalysis<T>> {
    cfg.validate()?;
    let horizon = cfg.horizon();
    let oracle_horizon = cfg.oracle_horizon.unwrap_or(horizon);
    let grid = grid.clone().with_max_index(horizon.max(oracle_horizon) + 2);
    let op = JacobiOperator::new(grid.clone(), alpha.clone());
    let mut clock = Stopwatch::new();
    let mut warnings = Vec::new();
    if horizon < 10_000 {
        warnings.push(format!(
            "short horizon N = {horizon}; tail statistics may be unreliable"
        ));
    }

    let summability = grid.classify_summability();
    clock.lap("summability");

    let ccfg = &cfg.criteria;
    let g = select_g(&grid, horizon, ccfg);
    let series = vec![
        test_cubic_series(&op, &cfg.horizons)?,
        test_carleman_i(&op, &cfg.horizons)?,
    ];
    clock.lap("series");
    let bounds = vec![
        test_bound_ii(&op, &g, horizon, ccfg),
        test_bound_iii(&op, &g, horizon, ccfg),
        test_exact_ii(&op, horizon, ccfg),
        test_exact_iii(&op, horizon, ccfg),
    ];
    clock.lap("bounds");
    let path = floquet_path(&op, &summability, cfg)?;
    clock.lap("floquet");

    let certifies_series = |id: &str| {
        series
            .iter()
            .any(|s| s.test == id && s.verdict == SeriesVerdict::Diverges && s.gate.status.is_yes())
    };
    let certifies_bound = |id: &str| bounds.iter().any(|b| b.test == id && b.certifies());
    let sa = |test: &str| CriterionVerdict::SelfAdjoint {
        test: test.into(),
        advisory: false,
    };

    let mut verdict = ["I", "II", "III", "i", "ii", "iii"]
        .into_iter()
        .find_map(|id| {
            let hit = if id.eq_ignore_ascii_case("i") {
                certifies_series(id)
            } else {
                certifies_bound(id)
            };
            hit.then(|| sa(id))
        })
        .or_else(|| summability.in_ell2.is_no().then(|| sa(SUM_D2)));
    if verdict.is_none() && path.applies() {
        verdict = Some(CriterionVerdict::Deficient {
            n_pm: 1,
            test: FLOQUET_BAND.into(),
            advisory: false,
        });
    }

    let run_oracle = match cfg.oracle {
        OracleMode::Off => false,
        OracleMode::WhenUncertified => verdict.is_none(),
        OracleMode::Always => true,
    };
    let oracle = if run_oracle {
        let o = oracle_check(&op, oracle_horizon, &cfg.l2)?;
        clock.lap("oracle");
        Some(o)
    } else {
        None
    };

    let verdict = verdict.unwrap_or_else(|| match oracle.as_ref().and_then(|o| o.n_pm) {
        Some(0) => CriterionVerdict::SelfAdjoint {
            test: "oracle".into(),
            advisory: true,
        },
        Some(n_pm) => CriterionVerdict::Deficient {
            n_pm,
            test: "oracle".into(),
            advisory: true,
        },
        None => CriterionVerdict::Inconclusive {
            reason: if oracle.is_some() {
                "no analytic test applies and the numerical probes disagree or are undecided".into()
            } else {
                "no analytic test applies".into()
            },
        },
    });

    Ok(DeficiencyAnalysis {
        verdict,
        summability,
        g: g.kind(),
        series,
        bounds,
        floquet_path: path,
        oracle,
        warnings,
        stage_seconds: clock.stages,
    })
}

/// Verdict only.
pub fn deficiency_verdict<T: Scalar>(
    grid: &GridSequence<T>,
    alpha: &AlphaSequence<T>,
    cfg: &DeficiencyConfig,
) -> Result<CriterionVerdict> {
    analyze(grid, alpha, cfg).map(|a| a.verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobi::Perturbation;

    fn inv_n() -> GridSequence<f64> {
        GridSequence::power(1.0).unwrap()
    }

    fn cfg() -> DeficiencyConfig {
        DeficiencyConfig::default().with_horizons(vec![10_000, 100_000])
    }

    fn scaled(a: f64, p: Perturbation<f64>) -> AlphaSequence<f64> {
        AlphaSequence::scaled_inverse_gaps(a, p).unwrap()
    }

    fn inv_n_pert() -> Perturbation<f64> {
        Perturbation::Power {
            coef: 1.0,
            exponent: -1.0,
        }
    }

    #[test]
    fn deficient_inside_the_band() {
        for a in [-1.5, -0.5] {
            let v = deficiency_verdict(&inv_n(), &scaled(a, inv_n_pert()), &cfg()).unwrap();
            assert_eq!(
                v,
                CriterionVerdict::Deficient {
                    n_pm: 1,
                    test: FLOQUET_BAND.into(),
                    advisory: false
                },
                "a = {a}"
            );
        }
    }

    #[test]
    fn self_adjoint_examples() {
        let neg = AlphaSequence::power_sum(vec![(-1.0, -1.0)]).unwrap();
        let v = deficiency_verdict(&inv_n(), &neg, &cfg()).unwrap();
        assert_eq!(v.provenance(), "III");
        let deep = AlphaSequence::power_sum(vec![(-4.0, 1.0), (-2.0, 0.0), (1.0, -1.0)]).unwrap();
        assert_eq!(
            deficiency_verdict(&inv_n(), &deep, &cfg())
                .unwrap()
                .provenance(),
            "II"
        );
        let c = GridSequence::constant(1.0).unwrap();
        assert_eq!(
            deficiency_verdict(&c, &AlphaSequence::zero(), &cfg())
                .unwrap()
                .provenance(),
            "II"
        );
    }

    #[test]
    fn boundary_case_goes_to_the_oracle() {
        let shubin = AlphaSequence::power_sum(vec![(-2.0, 1.0), (-1.0, 0.0)]).unwrap();
        let a = analyze(&inv_n(), &shubin, &cfg()).unwrap();
        assert!(!a.floquet_path.applies());
        assert!(a.oracle.is_some());
        assert!(!a.verdict.is_certificate());
    }

    #[test]
    fn oracle_agrees_with_certificates() {
        let c = DeficiencyConfig {
            oracle: OracleMode::Always,
            ..cfg()
        };
        for al in [
            scaled(-0.5, inv_n_pert()),
            scaled(0.5, inv_n_pert()),
            scaled(-2.5, inv_n_pert()),
        ] {
            let a = analyze(&inv_n(), &al, &c).unwrap();
            assert!(a.verdict.is_certificate());
            assert_eq!(
                a.oracle_agrees(),
                Some(true),
                "{:?} vs {:?}",
                a.verdict,
                a.oracle
            );
        }
    }

    #[test]
    fn verdict_labels() {
        let v = CriterionVerdict::SelfAdjoint {
            test: "oracle".into(),
            advisory: true,
        };
        assert_eq!(v.provenance(), "numerical-advisory");
        assert_eq!(v.to_string(), "SelfAdjoint(numerical-advisory)");
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["kind"], "self_adjoint");
        assert!(DeficiencyConfig::default()
            .with_horizons(vec![])
            .validate()
            .is_err());
    }

    #[test]
    fn deficient_along_the_band() {
        for a in [-1.9, -1.5, -1.0, -0.5, -0.1] {
            let v = deficiency_verdict(&inv_n(), &scaled(a, inv_n_pert()), &cfg()).unwrap();
            assert!(
                matches!(v, CriterionVerdict::Deficient { n_pm: 1, .. }),
                "a = {a}: {v}"
            );
            assert_eq!(v.is_certificate(), a != -1.0, "a = {a}: {v}");
        }
        assert_eq!(
            deficiency_verdict(&inv_n(), &scaled(0.5, inv_n_pert()), &cfg())
                .unwrap()
                .provenance(),
            "III"
        );
        assert_eq!(
            deficiency_verdict(&inv_n(), &scaled(-2.5, inv_n_pert()), &cfg())
                .unwrap()
                .provenance(),
            "II"
        );
    }

    #[test]
    fn gauge_maps_solutions_to_the_periodic_matrix() {
        use crate::criteria::check_condition_b;
        use crate::jacobi::JacobiOperator;
        let n_max = 10_000;
        let grid = inv_n().with_max_index(n_max + 2);
        let u = check_condition_b(&grid, 100_000, &CriteriaConfig::default())
            .unwrap()
            .u;
        let a = -0.5;
        let op = JacobiOperator::new(grid.clone(), AlphaSequence::alpha_zero(a, u).unwrap());
        let h = solve_recurrence(&op, Complex::new(0.0, 0.0), n_max).unwrap();
        let g = |n: usize| op.tilde().value(n) * grid.r_or_one(n);
        let mut f = vec![0.0, 1.0 / g(1)];
        for n in 1..n_max {
            f.push(-(a + 1.0) * u.at(n) * f[n] - f[n - 1]);
        }
        for n in 1..n_max {
            let want = g(n) * f[n];
            let got = h.value(n).re;
            let scale = want
                .abs()
                .max(g(n).abs() * f[n - 1].abs().max(f[n + 1].abs()));
            assert!(
                (got - want).abs() <= 1e-6 * scale,
                "n = {n}: {got} vs {want}"
            );
        }
    }
}
