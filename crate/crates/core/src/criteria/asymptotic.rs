use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Basis, GridFamily, GridSequence, SmoothFamilyDerivatives};
use crate::numeric::{log_spaced, range_sup, tail_windows, TriState, WindowDrift};
use crate::Scalar;

use super::CriteriaConfig;

/// `((d_{n+1}/d_n) − 1)/d_n`.
#[inline]
fn first_order<T: Scalar>(grid: &GridSequence<T>, n: usize) -> T {
    grid.gap_ratio_m1(n + 1) / grid.d(n)
}

/// Fit of `d_{n+1}/d_n = 1 + C d_n + O(d_n²)`.
#[derive(Debug, Clone, Serialize)]
pub struct RatioExpansion<T> {
    pub horizon: usize,
    pub c_estimate: T,
    /// Sup of `|(d_{n+1}/d_n − 1 − C d_n)/d_n²|` over `[N/32, N/16]` and `[N/2, N]`.
    pub residual_bound: T,
    pub trend: WindowDrift<T>,
    pub holds: bool,
}

pub fn check_ratio_expansion<T: Scalar>(
    grid: &GridSequence<T>,
    horizon: usize,
    cfg: &CriteriaConfig,
) -> Result<RatioExpansion<T>> {
    if horizon < 100 {
        return Err(Error::Parameter {
            name: "horizon",
            value: horizon as f64,
            reason: "must be at least 100",
        });
    }
    let c = first_order(grid, horizon) * T::lit(2.0) - first_order(grid, horizon / 2);
    let q = |n: usize| ((first_order(grid, n) - c) / grid.d(n)).abs();
    // C is fitted at the horizon, so the residual is compared against a
    // window well before it.
    let a = (horizon / 32).max(cfg.burn_in);
    let b = (horizon / 16).max(a + 1);
    let [_, (e, f)] = tail_windows(horizon, cfg.burn_in);
    let trend = cfg.drift(range_sup(a, b, q), range_sup(e, f, q));
    Ok(RatioExpansion {
        horizon,
        c_estimate: c,
        residual_bound: trend.earlier.max(trend.later),
        holds: trend.stable && c.is_finite(),
        trend,
    })
}

/// One of the smoothness conditions on the generating function.
#[derive(Debug, Clone, Serialize)]
pub struct DCheck<T> {
    pub holds: TriState,
    pub basis: Basis,
    /// Largest sampled value of the quantity that must stay bounded.
    pub witness: T,
    pub trend: Option<WindowDrift<T>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DConditions<T> {
    pub d0: DCheck<T>,
    pub d1: DCheck<T>,
    pub d2: DCheck<T>,
    pub d3: DCheck<T>,
}

impl<T: Scalar> DConditions<T> {
    pub fn all_hold(&self) -> bool {
        [&self.d0, &self.d1, &self.d2, &self.d3]
            .iter()
            .all(|c| c.holds.is_yes())
    }
}

/// `γ < 1`, or `γ = 1` with `η ≤ 0`: the region where `d'' / (d' d)` and
/// `(d_{n+1}/d_n − 1)/d_n` stay bounded.
fn regular_power_log<T: Scalar>(gamma: T, eta: T) -> bool {
    gamma < T::one() || (gamma == T::one() && eta <= T::zero())
}

fn tail_samples<T: Scalar>(
    derivs: &SmoothFamilyDerivatives<T>,
    horizon: usize,
    cfg: &CriteriaConfig,
) -> (Vec<usize>, usize) {
    let lo = (horizon / 4).max(cfg.burn_in).max(derivs.valid_from + 1);
    (
        log_spaced(lo, horizon.max(lo + 1), cfg.tail_samples),
        horizon / 2,
    )
}

/// Sup of `f` over the earlier and later halves of the sample set.
fn split_drift<T: Scalar>(
    samples: &[usize],
    mid: usize,
    cfg: &CriteriaConfig,
    f: impl Fn(usize) -> T,
) -> WindowDrift<T> {
    let (mut early, mut late) = (T::neg_infinity(), T::neg_infinity());
    for &n in samples {
        let v = f(n);
        let v = if v.is_nan() { T::infinity() } else { v };
        if n <= mid {
            early = early.max(v);
        } else {
            late = late.max(v);
        }
    }
    cfg.drift(early, late)
}

fn numeric_check<T: Scalar>(drift: WindowDrift<T>) -> DCheck<T> {
    DCheck {
        holds: TriState::from_bool(drift.stable),
        basis: Basis::Numeric,
        witness: drift.earlier.max(drift.later),
        trend: Some(drift),
    }
}

/// `sup_{ζ,θ ∈ [−1,2]} |g(n+ζ)|/|g(n+θ)|` sampled on `points` nodes; infinite if `g` vanishes.
fn spread<T: Scalar>(g: &(dyn Fn(T) -> T + Send + Sync), n: usize, points: usize) -> T {
    let (mut lo, mut hi) = (T::infinity(), T::zero());
    for i in 0..points {
        let zeta = T::lit(-1.0 + 3.0 * i as f64 / (points - 1) as f64);
        let v = g(T::idx(n) + zeta).abs();
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > T::zero() && hi.is_finite() {
        hi / lo
    } else {
        T::infinity()
    }
}

fn derivative_spread<T: Scalar>(
    g: &(dyn Fn(T) -> T + Send + Sync),
    samples: &[usize],
    mid: usize,
    cfg: &CriteriaConfig,
) -> DCheck<T> {
    if samples.iter().any(|&n| g(T::idx(n)) == T::zero()) {
        return DCheck {
            holds: TriState::No,
            basis: Basis::Numeric,
            witness: T::infinity(),
            trend: None,
        };
    }
    numeric_check(split_drift(samples, mid, cfg, |n| {
        spread(g, n, cfg.zeta_points)
    }))
}

/// Conditions (d0)–(d3); `None` when the grid has no analytic derivatives.
pub fn check_d_conditions<T: Scalar>(
    grid: &GridSequence<T>,
    horizon: usize,
    cfg: &CriteriaConfig,
) -> Option<DConditions<T>> {
    let derivs = grid.derivatives()?;
    let (samples, mid) = tail_samples(&derivs, horizon, cfg);
    let d0_drift = split_drift(&samples, mid, cfg, |n| first_order(grid, n).abs());
    let d3_quantity = |n: usize| {
        let x = T::idx(n);
        ((derivs.second)(x) / ((derivs.first)(x) * grid.d(n))).abs()
    };
    let d3_drift = split_drift(&samples, mid, cfg, d3_quantity);
    let d1 = derivative_spread(&*derivs.first, &samples, mid, cfg);
    let d2 = derivative_spread(&*derivs.second, &samples, mid, cfg);
    let (d0, d3) = match grid.family() {
        GridFamily::PowerLog { gamma, eta, .. } => {
            let degenerate = *gamma == T::zero() && *eta == T::zero();
            let regular = regular_power_log(*gamma, *eta);
            let analytic = |drift: WindowDrift<T>, status: TriState| DCheck {
                holds: status,
                basis: Basis::Analytic,
                witness: drift.earlier.max(drift.later),
                trend: Some(drift),
            };
            (
                analytic(d0_drift, TriState::from_bool(regular)),
                analytic(
                    d3_drift,
                    if degenerate {
                        TriState::No
                    } else {
                        TriState::from_bool(regular)
                    },
                ),
            )
        }
        GridFamily::Constant { .. } => (
            DCheck {
                holds: TriState::Yes,
                basis: Basis::Analytic,
                witness: T::zero(),
                trend: None,
            },
            DCheck {
                holds: TriState::No,
                basis: Basis::Analytic,
                witness: T::infinity(),
                trend: None,
            },
        ),
        _ => (numeric_check(d0_drift), numeric_check(d3_drift)),
    };
    Some(DConditions { d0, d1, d2, d3 })
}

/// Smallest `k` with `|d'(n)/d_n|^k = O(d_n²)`.
#[derive(Debug, Clone, Serialize)]
pub struct D4Check<T> {
    pub k_min: Option<u32>,
    pub holds: TriState,
    pub basis: Basis,
    /// Sup of `|d'/d|^k / d²` over the sampled tail for `k = k_min`.
    pub witness: Option<T>,
}

/// Condition (d4); `None` for grids without a nonvanishing derivative.
pub fn check_d4<T: Scalar>(
    grid: &GridSequence<T>,
    horizon: usize,
    cfg: &CriteriaConfig,
) -> Option<D4Check<T>> {
    if matches!(grid.family(), GridFamily::Constant { .. }) {
        return None;
    }
    let derivs = grid.derivatives()?;
    let (samples, mid) = tail_samples(&derivs, horizon, cfg);
    let log_q = |k: u32, n: usize| {
        let x = T::idx(n);
        let lr = ((derivs.first)(x) / grid.d(n)).abs().ln();
        T::lit(k as f64) * lr - T::lit(2.0) * grid.log_gap(n)
    };
    let log_sup = |k: u32| -> (T, T) {
        let (mut early, mut late) = (T::neg_infinity(), T::neg_infinity());
        for &n in &samples {
            let v = log_q(k, n);
            if n <= mid {
                early = early.max(v);
            } else {
                late = late.max(v);
            }
        }
        (early, late)
    };
    let witness = |k: u32| {
        let (a, b) = log_sup(k);
        a.max(b).exp()
    };
    let (k_min, basis) = match grid.family() {
        GridFamily::PowerLog { gamma, eta, .. } => {
            let two_gamma = T::lit(2.0) * *gamma;
            let k = (1..=cfg.k_max).find(|&k| {
                let k = T::lit(k as f64);
                k > two_gamma || (k == two_gamma && *eta <= T::zero())
            });
            (k, Basis::Analytic)
        }
        _ => {
            let tol = T::lit(cfg.drift_tolerance).ln_1p();
            let k = (1..=cfg.k_max).find(|&k| {
                let (a, b) = log_sup(k);
                a.is_finite() && b.is_finite() && b - a < tol
            });
            (k, Basis::Numeric)
        }
    };
    Some(D4Check {
        k_min,
        holds: TriState::from_bool(k_min.is_some()),
        basis,
        witness: k_min.map(witness),
    })
}
