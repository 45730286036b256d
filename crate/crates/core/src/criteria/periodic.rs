use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridSequence;
use crate::jacobi::{PeriodPair, TildeSequence};
use crate::numeric::{range_sup, richardson, tail_windows, TriState, WindowDrift};
use crate::Scalar;

use super::CriteriaConfig;

/// Period-2 limit of `ρ_n` and the size of the deviation from it.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionB<T> {
    pub horizon: usize,
    pub u: PeriodPair<T>,
    pub product: T,
    /// Extrapolation order taken from the decay of `r_n² r̃_n²`.
    pub extrapolation_order: T,
    /// Fitted decay exponent of `|ρ_n − u_n|`, if it is nonzero.
    pub residual_order: Option<T>,
    /// Sup of `|ρ_n − u_n| / (r_n² r̃_n²)` over `[N/4, N]`.
    pub residual_bound: T,
    pub trend: WindowDrift<T>,
    pub holds: TriState,
}

/// Largest index of parity `parity` not exceeding `n`.
fn last_of_parity(n: usize, parity: usize) -> usize {
    if n % 2 == parity {
        n
    } else {
        n - 1
    }
}

pub fn check_condition_b<T: Scalar>(
    grid: &GridSequence<T>,
    horizon: usize,
    cfg: &CriteriaConfig,
) -> Result<ConditionB<T>> {
    if horizon < 64 {
        return Err(Error::Parameter {
            name: "horizon",
            value: horizon as f64,
            reason: "must be at least 64",
        });
    }
    let tilde = TildeSequence::build(grid, horizon + 2);
    Ok(check_condition_b_with(&tilde, horizon, cfg))
}

pub(crate) fn check_condition_b_with<T: Scalar>(
    tilde: &TildeSequence<T>,
    horizon: usize,
    cfg: &CriteriaConfig,
) -> ConditionB<T> {
    let mut order = T::zero();
    let mut limit = [T::zero(); 2];
    for parity in [0usize, 1] {
        let n1 = last_of_parity(horizon / 2, parity);
        let n2 = last_of_parity(horizon, parity);
        let (x1, x2) = (T::idx(n1), T::idx(n2));
        let p = -(tilde.w(n2) / tilde.w(n1)).ln() / (x2 / x1).ln();
        order = order.max(p);
        limit[parity] = if p < T::lit(1e-3) {
            tilde.rho(n2)
        } else {
            richardson(x1, tilde.rho(n1), x2, tilde.rho(n2), p)
        };
    }
    let u = PeriodPair::new(limit[1], limit[0]);
    let deviation = |n: usize| (tilde.rho(n) - u.at(n)).abs();
    let q = |n: usize| deviation(n) / tilde.w(n);
    let [(a, b), (c, d)] = tail_windows(horizon, cfg.burn_in);
    let trend = cfg.drift(range_sup(a, b, q), range_sup(c, d, q));

    let (m1, m2) = (horizon / 8, horizon / 4);
    let (e1, e2) = (deviation(m1), deviation(m2));
    let residual_order = (e1 > T::zero() && e2 > T::zero())
        .then(|| -(e2 / e1).ln() / (T::idx(m2) / T::idx(m1)).ln());

    ConditionB {
        horizon,
        u,
        product: u.product(),
        extrapolation_order: order,
        residual_order,
        residual_bound: trend.earlier.max(trend.later),
        holds: TriState::from_bool(trend.stable),
        trend,
    }
}
