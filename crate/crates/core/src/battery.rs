//! Replication battery: the reference checks behind `verify-paper`.
//!
//! Checks are grouped; [`GROUPS`] lists the group names accepted by
//! [`BatteryConfig::only`]. Horizon-dependent tolerances are the reference
//! tolerances at `N = 10⁶` multiplied by [`tolerance_scale`].

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex;
use serde::Serialize;

use crate::criteria::{
    check_condition_b, f_over_d_probe, f_remainder, verify_g_limits, CriteriaConfig,
};
use crate::deficiency::{
    analyze, l2_probe, solve_recurrence, CriterionVerdict, DeficiencyConfig, L2Config, L2Status,
    OracleMode, FLOQUET_BAND,
};
use crate::error::{Error, Result};
use crate::grid::GridSequence;
use crate::jacobi::{rho, AlphaSequence, JacobiOperator, Perturbation};
use crate::numeric::range_sup;

pub const GROUPS: [&str; 10] = [
    "wallis",
    "parity-product",
    "scaling",
    "g-limits",
    "f-bounded",
    "expansion",
    "shubin",
    "phase",
    "gauge",
    "oracle",
];

pub const REFERENCE_HORIZON: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryConfig {
    pub horizon: usize,
    /// Restrict to these groups; empty runs everything.
    pub only: Vec<String>,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            horizon: REFERENCE_HORIZON,
            only: Vec::new(),
        }
    }
}

impl BatteryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 10_000 {
            return Err(Error::Parameter {
                name: "horizon",
                value: self.horizon as f64,
                reason: "the battery needs N >= 10^4",
            });
        }
        if let Some(bad) = self.only.iter().find(|g| !GROUPS.contains(&g.as_str())) {
            return Err(Error::InvalidInput(format!(
                "unknown check group {bad:?}; expected one of {}",
                GROUPS.join(", ")
            )));
        }
        Ok(())
    }

    fn wants(&self, group: &str) -> bool {
        self.only.is_empty() || self.only.iter().any(|g| g == group)
    }
}

/// Multiplier applied to horizon-dependent tolerances.
///
/// Power-law errors scale with `(10⁶/N)²`, logarithmic ones with
/// `(ln 10⁶ / ln N)³`; `kind` selects which.
pub fn tolerance_scale(horizon: usize, kind: Decay) -> f64 {
    let n = horizon.min(REFERENCE_HORIZON) as f64;
    let r = REFERENCE_HORIZON as f64;
    match kind {
        Decay::Power => (r / n).powi(2),
        Decay::Log => (r.ln() / n.ln()).powi(3),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decay {
    Power,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub group: &'static str,
    pub name: String,
    pub measured: f64,
    pub expected: String,
    pub tolerance: f64,
    pub passed: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatteryReport {
    pub horizon: usize,
    pub checks: Vec<CheckResult>,
    pub seconds: f64,
}

impl BatteryReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Recorder {
    group: &'static str,
    checks: Vec<CheckResult>,
    start: Instant,
}

impl Recorder {
    fn new(group: &'static str) -> Self {
        Self {
            group,
            checks: Vec::new(),
            start: Instant::now(),
        }
    }

    fn lap(&mut self) -> f64 {
        let now = Instant::now();
        let s = (now - self.start).as_secs_f64();
        self.start = now;
        s
    }

    fn near(&mut self, name: String, measured: f64, expected: f64, tolerance: f64) {
        let passed = (measured - expected).abs() <= tolerance;
        self.push(
            name,
            measured,
            format!("{expected} ± {tolerance:e}"),
            tolerance,
            passed,
        );
    }

    fn at_most(&mut self, name: String, measured: f64, limit: f64) {
        self.push(
            name,
            measured,
            format!("<= {limit}"),
            limit,
            measured <= limit,
        );
    }

    fn flag(&mut self, name: String, ok: bool, measured: f64, expected: &str) {
        self.push(name, measured, expected.into(), 0.0, ok);
    }

    fn push(
        &mut self,
        name: String,
        measured: f64,
        expected: String,
        tolerance: f64,
        passed: bool,
    ) {
        let seconds = self.lap();
        self.checks.push(CheckResult {
            group: self.group,
            name,
            measured,
            expected,
            tolerance,
            passed,
            seconds,
        });
    }
}

fn power(gamma: f64) -> Result<GridSequence<f64>> {
    GridSequence::power(gamma)
}

fn wallis(r: &mut Recorder) -> Result<()> {
    let g = power(1.0)?;
    r.near("rho(10001) -> pi".into(), rho(&g, 10_001), PI, 1e-3);
    r.near("rho(10000) -> 4/pi".into(), rho(&g, 10_000), 4.0 / PI, 1e-3);
    Ok(())
}

fn parity_product(r: &mut Recorder, horizon: usize) -> Result<()> {
    let tol = 1e-4 * tolerance_scale(horizon, Decay::Power);
    for gamma in [0.6, 0.75, 1.0] {
        let b = check_condition_b(&power(gamma)?, horizon, &CriteriaConfig::default())?;
        r.near(format!("u_odd*u_even, gamma={gamma}"), b.product, 4.0, tol);
    }
    Ok(())
}

/// `((n^γ + (n+1)^γ)/(2n+1)^γ − 2^{1−γ})·n²` without cancellation.
pub fn scaling_defect(gamma: f64, n: usize) -> f64 {
    let t = 1.0 / (2 * n + 1) as f64;
    let lo = (gamma * (-t).ln_1p()).exp_m1();
    let hi = (gamma * t.ln_1p()).exp_m1();
    let x = n as f64;
    2f64.powf(-gamma) * (lo + hi) * x * x
}

fn scaling(r: &mut Recorder) -> Result<()> {
    let sup = range_sup(1_000, 100_000, |n| scaling_defect(0.75, n).abs());
    r.at_most(
        "sup n^2 |scaled sum - 2^(1-gamma)|, gamma=0.75".into(),
        sup,
        2.0,
    );
    Ok(())
}

fn g_limits(r: &mut Recorder, horizon: usize) -> Result<()> {
    let s = tolerance_scale(horizon, Decay::Log);
    for eta in [0.6, 0.8, 1.0] {
        let l = verify_g_limits(eta, horizon)?;
        r.near(format!("L1, eta={eta}"), l.l1, 0.25, 0.01 * s);
        r.near(format!("L2, eta={eta}"), l.l2, eta, 0.02 * s);
    }
    let l = verify_g_limits(0.4, horizon)?;
    r.near("L3, eta=0.4".into(), l.l3, 0.0, 0.02 * s);
    let l = verify_g_limits(1.0, horizon)?;
    r.near("L3, eta=1".into(), l.l3, 0.25, 0.02 * s);
    Ok(())
}

fn f_bounded(r: &mut Recorder) -> Result<()> {
    let cfg = CriteriaConfig::default();
    for (gamma, eta) in [(0.6, 0.0), (0.75, 3.0), (1.0, -1.0)] {
        let g = GridSequence::<f64>::power_log(gamma, eta, 1.0)?;
        let p = f_over_d_probe(&g, 1_000, 100_000, &cfg);
        r.flag(
            format!("F/d bounded, (gamma, eta)=({gamma}, {eta})"),
            p.bounded.is_yes() && p.sup.is_finite(),
            p.trend.drift,
            "bounded, drift < 5%",
        );
    }
    let g = GridSequence::power_log(1.0, 0.5, 1.0)?;
    let p = f_over_d_probe(&g, 1_000, 100_000, &cfg);
    r.flag(
        "F/d unbounded, (gamma, eta)=(1, 0.5)".into(),
        p.bounded.is_no(),
        p.trend.drift,
        "growth detected",
    );
    Ok(())
}

/// Cumulative sups of `|F − F_expansion(·, 3)|·n² ln² n` over `[10³, 10⁵/2]`
/// and `[10³, 10⁵]`.
pub fn expansion_sups(lo: usize, hi: usize) -> Result<(f64, f64)> {
    let g = GridSequence::<f64>::power_log(1.0, 1.0, 1.0)?;
    let mut scaled = Vec::with_capacity(hi - lo + 1);
    for n in lo..=hi {
        let x = n as f64;
        let l = x.ln();
        scaled.push(f_remainder(&g, n, 3)?.abs() * x * x * l * l);
    }
    let sup = |k: usize| scaled[..=k - lo].iter().copied().fold(0.0, f64::max);
    Ok((sup(hi / 2), sup(hi)))
}

fn expansion(r: &mut Recorder) -> Result<()> {
    let (half, full) = expansion_sups(1_000, 100_000)?;
    let drift = (full - half) / full.max(1e-9);
    r.at_most("k=3 remainder sup, PowerLog(1, 1)".into(), full, 1.0);
    r.at_most("k=3 remainder window drift".into(), drift, 0.05);
    Ok(())
}

fn shubin(r: &mut Recorder, horizon: usize) -> Result<()> {
    let g = power(1.0)?.with_max_index(horizon + 2);
    let alpha = AlphaSequence::power_sum(vec![(-2.0, 1.0), (-1.0, 0.0)])?;
    let op = JacobiOperator::new(g, alpha);
    let sol = solve_recurrence(&op, Complex::new(0.0, 0.0), horizon)?;
    let v = l2_probe(&sol, &L2Config::default());
    let ratio = v.decay_ratio.unwrap_or(f64::NAN);
    r.flag(
        "lambda=0 solution in l2".into(),
        v.verdict == L2Status::InEll2,
        ratio,
        "in_ell2",
    );
    r.at_most("block decay ratio".into(), ratio, 0.9);
    Ok(())
}

fn inverse_n() -> Perturbation<f64> {
    Perturbation::Power {
        coef: 1.0,
        exponent: -1.0,
    }
}

fn phase(r: &mut Recorder, horizon: usize) -> Result<()> {
    let g = power(1.0)?;
    let cfg = DeficiencyConfig {
        oracle: OracleMode::Off,
        ..DeficiencyConfig::default().with_horizons(vec![horizon / 100, horizon / 10, horizon])
    };
    for a in [-1.5, -0.5] {
        let an = analyze(
            &g,
            &AlphaSequence::scaled_inverse_gaps(a, inverse_n())?,
            &cfg,
        )?;
        let want = CriterionVerdict::Deficient {
            n_pm: 1,
            test: FLOQUET_BAND.into(),
            advisory: false,
        };
        let delta = an.floquet_path.floquet.map_or(f64::NAN, |f| f.discriminant);
        r.flag(
            format!("a={a}: {}", an.verdict),
            an.verdict == want,
            delta,
            "Deficient(n_pm=1)",
        );
        let closed = 2.0 * (a + 1.0) * (a + 1.0) - 1.0;
        r.near(format!("Delta_a(0), a={a}"), delta, closed, 1e-6);
    }
    let cases = [
        ("-1/n", AlphaSequence::power_sum(vec![(-1.0, -1.0)])?, "III"),
        (
            "-2(2n+1)+1/n",
            AlphaSequence::power_sum(vec![(-4.0, 1.0), (-2.0, 0.0), (1.0, -1.0)])?,
            "II",
        ),
    ];
    for (label, alpha, test) in cases {
        let v = analyze(&g, &alpha, &cfg)?.verdict;
        let ok = v
            == CriterionVerdict::SelfAdjoint {
                test: test.into(),
                advisory: false,
            };
        r.flag(
            format!("alpha={label}: {v}"),
            ok,
            f64::NAN,
            &format!("SelfAdjoint({test})"),
        );
    }
    Ok(())
}

fn gauge(r: &mut Recorder, horizon: usize) -> Result<()> {
    let g = power(1.0)?;
    let u = check_condition_b(&g, horizon, &CriteriaConfig::default())?.u;
    let a = -0.5;
    let op = JacobiOperator::new(g.with_max_index(1_002), AlphaSequence::alpha_zero(a, u)?);
    let (mut off, mut diag) = (0.0f64, 0.0f64);
    for n in 1..=1_000 {
        let (d, o) = op.scaled_entries(n);
        off = off.max((o - 1.0).abs());
        diag = diag.max((d - (a + 1.0) * u.at(n)).abs() / u.at(n));
    }
    r.at_most(
        "max |scaled off-diagonal - 1|, n <= 1000".into(),
        off,
        1e-10,
    );
    r.at_most(
        "max relative |scaled diagonal - (a+1)u_n|".into(),
        diag,
        1e-10,
    );
    Ok(())
}

/// Labelled operator of the cross-validation set.
pub type OracleCase = (String, GridSequence<f64>, AlphaSequence<f64>);

/// `(γ, a)` grid of the cross-validation sweep plus the two self-adjoint
/// cases on `1/n`.
pub fn oracle_cases() -> Result<Vec<OracleCase>> {
    let mut out = Vec::new();
    for gamma in [0.6, 0.75, 1.0] {
        for a in [-1.5, -0.5, 0.5] {
            out.push((
                format!("gamma={gamma}, a={a}"),
                power(gamma)?,
                AlphaSequence::scaled_inverse_gaps(a, Perturbation::GapMultiple(1.0))?,
            ));
        }
    }
    out.push((
        "gamma=1, alpha=-1/n".into(),
        power(1.0)?,
        AlphaSequence::power_sum(vec![(-1.0, -1.0)])?,
    ));
    out.push((
        "gamma=1, alpha=-2(2n+1)+1/n".into(),
        power(1.0)?,
        AlphaSequence::power_sum(vec![(-4.0, 1.0), (-2.0, 0.0), (1.0, -1.0)])?,
    ));
    Ok(out)
}

fn oracle(r: &mut Recorder, horizon: usize) -> Result<()> {
    let cfg = DeficiencyConfig {
        oracle: OracleMode::Always,
        ..DeficiencyConfig::default().with_horizons(vec![horizon / 100, horizon / 10, horizon])
    };
    for (label, grid, alpha) in oracle_cases()? {
        let an = analyze(&grid, &alpha, &cfg)?;
        let agrees = an.oracle_agrees();
        let n_pm = an
            .oracle
            .as_ref()
            .and_then(|o| o.n_pm)
            .map_or(f64::NAN, f64::from);
        r.flag(
            format!("{label}: {} vs oracle", an.verdict),
            agrees == Some(true),
            n_pm,
            "certified and oracle agrees",
        );
    }
    Ok(())
}

/// Runs the selected groups in the order of [`GROUPS`].
pub fn run_battery(cfg: &BatteryConfig) -> Result<BatteryReport> {
    cfg.validate()?;
    let start = Instant::now();
    let n = cfg.horizon;
    let mut checks = Vec::new();
    for group in GROUPS {
        if !cfg.wants(group) {
            continue;
        }
        let mut r = Recorder::new(group);
        match group {
            "wallis" => wallis(&mut r),
            "parity-product" => parity_product(&mut r, n),
            "scaling" => scaling(&mut r),
            "g-limits" => g_limits(&mut r, n),
            "f-bounded" => f_bounded(&mut r),
            "expansion" => expansion(&mut r),
            "shubin" => shubin(&mut r, n),
            "phase" => phase(&mut r, n),
            "gauge" => gauge(&mut r, n),
            "oracle" => oracle(&mut r, n),
            _ => unreachable!(),
        }?;
        checks.append(&mut r.checks);
    }
    Ok(BatteryReport {
        horizon: n,
        checks,
        seconds: start.elapsed().as_secs_f64(),
    })
}
