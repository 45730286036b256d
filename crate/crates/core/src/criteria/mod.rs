//! Self-adjointness tests and the asymptotic checks they depend on.
//!
//! Divergence of a series is only ever certified by exponent arithmetic on
//! families with a known asymptotic class; numerics alone produce trends.
//! "Holds with some constant" is decided by comparing the per-index minimal
//! constant over the tail windows `[N/4, N/2]` and `[N/2, N]`.

mod asymptotic;
mod bounds;
mod functional;
mod periodic;
mod series;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Basis, GridSequence};
use crate::numeric::{Growth, LogPower, TriState, WindowDrift};
use crate::Scalar;

pub use asymptotic::{
    check_d4, check_d_conditions, check_ratio_expansion, D4Check, DCheck, DConditions,
    RatioExpansion,
};
pub use bounds::{
    f_over_d_probe, test_bound_ii, test_bound_iii, test_exact_ii, test_exact_iii, BoundProbe,
    Boundedness,
};
pub use functional::{
    f_expansion, f_remainder, f_value, g_nlog, select_g, sqrt_taylor_coefficients, uv,
    verify_g_limits, GFunction, GKind, GLimitSample, GLimits,
};
pub(crate) use periodic::check_condition_b_with;
pub use periodic::{check_condition_b, ConditionB};
pub(crate) use series::check_condition_a_with;
pub use series::{check_condition_a, test_carleman_i, test_cubic_series, tilde_class};

/// Tunables shared by the tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriteriaConfig {
    /// Indices below this are ignored by tail statistics.
    pub burn_in: usize,
    /// Maximal relative growth between the two tail windows.
    pub drift_tolerance: f64,
    /// Sample points per unit interval in the `[-1, 2]` derivative sweeps.
    pub zeta_points: usize,
    /// Tail indices sampled in the derivative sweeps.
    pub tail_samples: usize,
    /// Largest exponent tried for the derivative power condition.
    pub k_max: u32,
}

impl Default for CriteriaConfig {
    fn default() -> Self {
        Self {
            burn_in: 16,
            drift_tolerance: 0.05,
            zeta_points: 13,
            tail_samples: 64,
            k_max: 8,
        }
    }
}

impl CriteriaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.drift_tolerance > 0.0 && self.drift_tolerance.is_finite()) {
            return Err(Error::Parameter {
                name: "drift_tolerance",
                value: self.drift_tolerance,
                reason: "must be positive",
            });
        }
        if self.zeta_points < 2 || self.tail_samples < 2 {
            return Err(Error::InvalidInput(
                "sample counts must be at least 2".into(),
            ));
        }
        if self.k_max == 0 {
            return Err(Error::InvalidInput("k_max must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn drift<T: Scalar>(&self, earlier: T, later: T) -> WindowDrift<T> {
        WindowDrift::new(earlier, later, T::lit(self.drift_tolerance), T::lit(1e-9))
    }
}

/// Applicability of a test to the given grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Gate {
    pub status: TriState,
    pub reason: String,
}

impl Gate {
    pub fn open() -> Self {
        Self {
            status: TriState::Yes,
            reason: String::new(),
        }
    }

    pub fn new(status: TriState, reason: impl Into<String>) -> Self {
        Self {
            status,
            reason: reason.into(),
        }
    }

    pub fn failed(&self) -> bool {
        self.status.is_no()
    }
}

/// Tests that come from bounds on the interaction strengths need the grid
/// to leave `ℓ¹`.
pub(crate) fn not_ell1_gate<T: Scalar>(grid: &GridSequence<T>) -> Gate {
    match grid.gap_class() {
        Some(class) if !class.series_diverges() => Gate::new(TriState::No, "gaps are summable"),
        Some(_) => Gate::open(),
        None => Gate::new(
            TriState::Unknown,
            "summability of the gaps is not known analytically",
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesVerdict {
    Diverges,
    Converges,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Checkpoint<T> {
    pub horizon: usize,
    pub partial_sum: T,
}

/// Partial sums of a nonnegative series with an analytic or trend verdict.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesProbe<T> {
    pub test: &'static str,
    pub checkpoints: Vec<Checkpoint<T>>,
    pub fitted_growth: Growth,
    pub verdict: SeriesVerdict,
    pub basis: Basis,
    pub term_class: Option<LogPower<T>>,
    pub gate: Gate,
}

pub(crate) fn validate_horizons(horizons: &[usize]) -> Result<usize> {
    let Some(&last) = horizons.last() else {
        return Err(Error::InvalidInput(
            "at least one horizon is required".into(),
        ));
    };
    if horizons[0] == 0 || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(
            "horizons must be positive and strictly increasing".into(),
        ));
    }
    Ok(last)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizons_are_validated() {
        assert_eq!(validate_horizons(&[10, 100]).unwrap(), 100);
        assert!(validate_horizons(&[]).is_err());
        assert!(validate_horizons(&[100, 10]).is_err());
        assert!(validate_horizons(&[0, 10]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(CriteriaConfig::default().validate().is_ok());
        let bad = CriteriaConfig {
            drift_tolerance: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn ell1_gate() {
        let g = GridSequence::<f64>::power(1.5).unwrap();
        assert!(not_ell1_gate(&g).failed());
        let g = GridSequence::<f64>::power(1.0).unwrap();
        assert_eq!(not_ell1_gate(&g).status, TriState::Yes);
    }
}
