//! Gap sequences `d_n = x_n - x_{n-1}` of the interaction points and the
//! quantities derived from them (`x_n`, `r_n`, ratio and summability
//! diagnostics, analytic derivatives for smooth families).
//!
//! Everything is evaluated lazily from the family rule, so horizons of
//! `10^7` cost no memory.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::numeric::{CompensatedSum, DyadicBlocks, Growth, LogPower, TriState};
use crate::Scalar;

/// Index-to-value evaluator for user supplied sequences.
pub type SeqFn<T> = Arc<dyn Fn(usize) -> T + Send + Sync>;
/// Real-to-real evaluator (used for analytic derivatives).
pub type RealFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Default probing horizon used when a family has no natural cut-off.
pub const DEFAULT_MAX_INDEX: usize = 1 << 20;

/// How an explicit list continues past its last element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailRule {
    /// Repeat the list periodically.
    #[default]
    Cycle,
    /// Repeat the final element forever.
    HoldLast,
}

pub(crate) fn explicit_value<T: Copy>(values: &[T], tail: TailRule, n: usize) -> T {
    let i = n - 1;
    match tail {
        TailRule::Cycle => values[i % values.len()],
        TailRule::HoldLast => values[i.min(values.len() - 1)],
    }
}

/// Closed-form first and second derivative of the function generating a
/// smooth gap family, valid for arguments `>= valid_from - 1`.
#[derive(Clone)]
pub struct SmoothFamilyDerivatives<T> {
    pub first: RealFn<T>,
    pub second: RealFn<T>,
    pub valid_from: usize,
}

impl<T> fmt::Debug for SmoothFamilyDerivatives<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothFamilyDerivatives")
            .field("valid_from", &self.valid_from)
            .finish_non_exhaustive()
    }
}

#[derive(Clone)]
pub enum GridFamily<T: Scalar> {
    /// `d_1` free, `d_n = 1 / (n^gamma ln^eta n)` for `n >= 2`.
    PowerLog {
        gamma: T,
        eta: T,
        d1: T,
    },
    Constant {
        d: T,
    },
    Explicit {
        values: Vec<T>,
        tail: TailRule,
    },
    Custom {
        label: String,
        gap: SeqFn<T>,
        derivatives: Option<SmoothFamilyDerivatives<T>>,
    },
}

impl<T: Scalar> fmt::Debug for GridFamily<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridFamily::PowerLog { gamma, eta, d1 } => f
                .debug_struct("PowerLog")
                .field("gamma", gamma)
                .field("eta", eta)
                .field("d1", d1)
                .finish(),
            GridFamily::Constant { d } => f.debug_struct("Constant").field("d", d).finish(),
            GridFamily::Explicit { values, tail } => f
                .debug_struct("Explicit")
                .field("len", &values.len())
                .field("tail", tail)
                .finish(),
            GridFamily::Custom { label, .. } => {
                f.debug_struct("Custom").field("label", label).finish()
            }
        }
    }
}

/// A gap sequence together with a probing horizon hint.
#[derive(Clone, Debug)]
pub struct GridSequence<T: Scalar> {
    family: GridFamily<T>,
    max_index: usize,
}

/// Tail statistics of `d_{n+1}/d_n` over `[N/2, N]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioStats<T> {
    pub min_tail_ratio: T,
    pub max_tail_ratio: T,
    /// Linear-in-`1/n` extrapolation of the ratio; `None` when the tail
    /// oscillates too much for a limit to be meaningful.
    pub limit_estimate: Option<T>,
    pub tolerance: T,
    pub window: (usize, usize),
}

/// Ratio spread above which the tail is treated as oscillating.
const OSCILLATION_SPREAD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummabilityDiagnostics<T> {
    pub horizon: usize,
    pub partial_sum_d: T,
    pub partial_sum_d2: T,
    pub growth_d: Growth,
    pub growth_d2: Growth,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summability<T> {
    pub in_ell1: TriState,
    pub in_ell2: TriState,
    pub basis: Basis,
    pub diagnostics: SummabilityDiagnostics<T>,
}

impl<T: Scalar> Summability<T> {
    /// `d ∈ ℓ² \ ℓ¹`, the regime where nontrivial deficiency can occur.
    pub fn in_ell2_minus_ell1(&self) -> TriState {
        match (self.in_ell2, self.in_ell1) {
            (TriState::Yes, TriState::No) => TriState::Yes,
            (TriState::No, _) | (_, TriState::Yes) => TriState::No,
            _ => TriState::Unknown,
        }
    }
}

impl<T: Scalar> GridSequence<T> {
    pub fn new(family: GridFamily<T>) -> Result<Self> {
        match &family {
            GridFamily::PowerLog { gamma, eta, d1 } => {
                check_finite("gamma", *gamma)?;
                check_finite("eta", *eta)?;
                check_positive("d1", *d1)?;
            }
            GridFamily::Constant { d } => check_positive("d", *d)?,
            GridFamily::Explicit { values, .. } => {
                if values.is_empty() {
                    return Err(Error::InvalidInput("explicit gap list is empty".into()));
                }
                for (i, v) in values.iter().enumerate() {
                    if !(v.is_finite() && *v > T::zero()) {
                        return Err(Error::NonPositiveGap {
                            index: i + 1,
                            value: v.to_f64_lossy(),
                        });
                    }
                }
            }
            GridFamily::Custom { .. } => {}
        }
        Ok(Self {
            family,
            max_index: DEFAULT_MAX_INDEX,
        })
    }

    pub fn power_log(gamma: T, eta: T, d1: T) -> Result<Self> {
        Self::new(GridFamily::PowerLog { gamma, eta, d1 })
    }

    /// `d_n = 1/n^gamma` with `d_1 = 1`.
    pub fn power(gamma: T) -> Result<Self> {
        Self::power_log(gamma, T::zero(), T::one())
    }

    pub fn constant(d: T) -> Result<Self> {
        Self::new(GridFamily::Constant { d })
    }

    pub fn explicit(values: Vec<T>, tail: TailRule) -> Result<Self> {
        Self::new(GridFamily::Explicit { values, tail })
    }

    pub fn custom(
        label: impl Into<String>,
        gap: impl Fn(usize) -> T + Send + Sync + 'static,
    ) -> Self {
        Self {
            family: GridFamily::Custom {
                label: label.into(),
                gap: Arc::new(gap),
                derivatives: None,
            },
            max_index: DEFAULT_MAX_INDEX,
        }
    }

    /// Attaches analytic derivatives to a custom family.
    pub fn with_derivatives(mut self, derivatives: SmoothFamilyDerivatives<T>) -> Result<Self> {
        match &mut self.family {
            GridFamily::Custom {
                derivatives: slot, ..
            } => {
                *slot = Some(derivatives);
                Ok(self)
            }
            _ => Err(Error::InvalidInput(
                "derivatives can only be attached to custom families".into(),
            )),
        }
    }

    pub fn with_max_index(mut self, max_index: usize) -> Self {
        self.max_index = max_index.max(2);
        self
    }

    pub fn family(&self) -> &GridFamily<T> {
        &self.family
    }

    pub fn max_index(&self) -> usize {
        self.max_index
    }

    /// `(gamma, eta, d1)` for the power-log family.
    pub fn power_log_params(&self) -> Option<(T, T, T)> {
        match self.family {
            GridFamily::PowerLog { gamma, eta, d1 } => Some((gamma, eta, d1)),
            _ => None,
        }
    }

    /// `d_n`, checked.
    pub fn gap(&self, n: usize) -> Result<T> {
        if n == 0 {
            return Err(Error::IndexDomain {
                what: "gap",
                index: n,
                min: 1,
            });
        }
        let v = self.d(n);
        if v.is_finite() && v > T::zero() {
            Ok(v)
        } else {
            Err(Error::NonPositiveGap {
                index: n,
                value: v.to_f64_lossy(),
            })
        }
    }

    /// `d_n` without domain checks; `n >= 1`.
    #[inline]
    pub fn d(&self, n: usize) -> T {
        debug_assert!(n >= 1);
        match &self.family {
            GridFamily::PowerLog { gamma, eta, d1 } => {
                if n == 1 {
                    *d1
                } else {
                    Self::inv_gap_power_log(n, *gamma, *eta).recip()
                }
            }
            GridFamily::Constant { d } => *d,
            GridFamily::Explicit { values, tail } => explicit_value(values, *tail, n),
            GridFamily::Custom { gap, .. } => gap(n),
        }
    }

    /// `1/d_n`, evaluated directly for the power-log family so that integer
    /// exponents give exact integers.
    #[inline]
    pub fn inv_d(&self, n: usize) -> T {
        match &self.family {
            GridFamily::PowerLog { gamma, eta, d1 } => {
                if n == 1 {
                    d1.recip()
                } else {
                    Self::inv_gap_power_log(n, *gamma, *eta)
                }
            }
            _ => self.d(n).recip(),
        }
    }

    #[inline]
    fn inv_gap_power_log(n: usize, gamma: T, eta: T) -> T {
        let x = T::idx(n);
        let mut v = if gamma == T::one() { x } else { x.powf(gamma) };
        if eta != T::zero() {
            v = v * x.ln().powf(eta);
        }
        v
    }

    #[inline]
    fn log_gap_power_log(&self, n: usize, gamma: T, eta: T) -> T {
        let ln_n = T::idx(n).ln();
        let mut l = -gamma * ln_n;
        if eta != T::zero() {
            l = l - eta * ln_n.ln();
        }
        l
    }

    /// `ln d_n`.
    #[inline]
    pub fn log_gap(&self, n: usize) -> T {
        match &self.family {
            GridFamily::PowerLog { gamma, eta, d1 } => {
                if n == 1 {
                    d1.ln()
                } else {
                    self.log_gap_power_log(n, *gamma, *eta)
                }
            }
            _ => self.d(n).ln(),
        }
    }

    /// `ln(d_n / d_{n-1})` for `n >= 2`, evaluated without cancellation for
    /// the power-log family.
    #[inline]
    pub fn log_gap_ratio(&self, n: usize) -> T {
        debug_assert!(n >= 2);
        match &self.family {
            GridFamily::PowerLog { gamma, eta, .. } if n >= 3 => {
                let m = T::idx(n - 1);
                let l = m.recip().ln_1p();
                let mut out = -*gamma * l;
                if *eta != T::zero() {
                    out = out - *eta * (l / m.ln()).ln_1p();
                }
                out
            }
            GridFamily::Constant { .. } => T::zero(),
            _ => self.log_gap(n) - self.log_gap(n - 1),
        }
    }

    /// `d_n / d_{n-1} - 1` for `n >= 2`.
    #[inline]
    pub fn gap_ratio_m1(&self, n: usize) -> T {
        self.log_gap_ratio(n).exp_m1()
    }

    /// `x_n = d_1 + … + d_n`, `x_0 = 0`.
    pub fn x(&self, n: usize) -> Result<T> {
        let mut s = CompensatedSum::new();
        for k in 1..=n {
            s.push(self.gap(k)?);
        }
        Ok(s.value())
    }

    /// Iterator over `(n, x_n)` for `n = 1, 2, …`.
    pub fn positions(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        let mut s = CompensatedSum::new();
        (1..).map(move |n| {
            s.push(self.d(n));
            (n, s.value())
        })
    }

    /// `r_n = sqrt(d_n + d_{n+1})`, checked.
    pub fn r(&self, n: usize) -> Result<T> {
        if n == 0 {
            return Err(Error::IndexDomain {
                what: "r",
                index: n,
                min: 1,
            });
        }
        Ok((self.gap(n)? + self.gap(n + 1)?).sqrt())
    }

    /// `r_n` with the convention `r_0 := 1`.
    #[inline]
    pub fn r_or_one(&self, n: usize) -> T {
        if n == 0 {
            T::one()
        } else {
            (self.d(n) + self.d(n + 1)).sqrt()
        }
    }

    /// `1/d_n + 1/d_{n+1}`.
    #[inline]
    pub fn inverse_gap_sum(&self, n: usize) -> T {
        self.inv_d(n) + self.inv_d(n + 1)
    }

    /// Inf/sup of `d_{n+1}/d_n` over `[N/2, N]` plus a limit estimate.
    pub fn ratio_stats(&self, horizon: usize) -> Result<RatioStats<T>> {
        if horizon < 10 {
            return Err(Error::Parameter {
                name: "horizon",
                value: horizon as f64,
                reason: "ratio statistics need N >= 10",
            });
        }
        let (lo, hi) = (horizon / 2, horizon);
        let q = |n: usize| T::one() + self.gap_ratio_m1(n + 1);
        let (mut min, mut max) = (T::infinity(), T::neg_infinity());
        for n in lo..=hi {
            let v = q(n);
            min = min.min(v);
            max = max.max(v);
        }
        let (q_lo, q_hi) = (q(lo), q(hi));
        let oscillating = max - min > T::lit(OSCILLATION_SPREAD);
        let limit_estimate = if oscillating {
            None
        } else {
            Some(q_hi + q_hi - q_lo)
        };
        Ok(RatioStats {
            min_tail_ratio: min,
            max_tail_ratio: max,
            limit_estimate,
            tolerance: (q_hi - q_lo).abs() + T::epsilon() * T::lit(16.0),
            window: (lo, hi),
        })
    }

    /// Asymptotic class of `d_n`, when known analytically. Positive periodic
    /// and eventually constant tails are `Θ(1)`.
    pub fn gap_class(&self) -> Option<LogPower<T>> {
        match &self.family {
            GridFamily::PowerLog { gamma, eta, .. } => Some(LogPower::new(-*gamma, -*eta)),
            GridFamily::Constant { .. } | GridFamily::Explicit { .. } => Some(LogPower::constant()),
            GridFamily::Custom { .. } => None,
        }
    }

    /// Membership of `d` in `ℓ¹` and `ℓ²`: exact for the closed families,
    /// `Unknown` with partial-sum diagnostics for custom ones.
    pub fn classify_summability(&self) -> Summability<T> {
        let horizon = self.max_index;
        let mut s1 = CompensatedSum::new();
        let mut s2 = CompensatedSum::new();
        let mut b1 = DyadicBlocks::new();
        let mut b2 = DyadicBlocks::new();
        for n in 1..=horizon {
            let d = self.d(n);
            s1.push(d);
            s2.push(d * d);
            b1.push(n, d);
            b2.push(n, d * d);
        }
        let margin = T::lit(0.05);
        let diagnostics = SummabilityDiagnostics {
            horizon,
            partial_sum_d: s1.value(),
            partial_sum_d2: s2.value(),
            growth_d: b1.growth(margin),
            growth_d2: b2.growth(margin),
        };
        match self.gap_class() {
            Some(class) => Summability {
                in_ell1: TriState::from_bool(!class.series_diverges()),
                in_ell2: TriState::from_bool(!class.powi(2).series_diverges()),
                basis: Basis::Analytic,
                diagnostics,
            },
            None => Summability {
                in_ell1: TriState::Unknown,
                in_ell2: TriState::Unknown,
                basis: Basis::Numeric,
                diagnostics,
            },
        }
    }

    /// Analytic derivatives of the generating function, when the family has
    /// them. Constant families report identically vanishing derivatives.
    pub fn derivatives(&self) -> Option<SmoothFamilyDerivatives<T>> {
        match &self.family {
            GridFamily::PowerLog { gamma, eta, .. } => {
                let (g, e) = (*gamma, *eta);
                let one = T::one();
                let two = T::lit(2.0);
                Some(SmoothFamilyDerivatives {
                    first: Arc::new(move |x: T| {
                        let l = x.ln();
                        -(g * l + e) * x.powf(-g - one) * l.powf(-e - one)
                    }),
                    second: Arc::new(move |x: T| {
                        let l = x.ln();
                        (g * (g + one) * l * l + (two * g + one) * e * l + e * (e + one))
                            * x.powf(-g - two)
                            * l.powf(-e - two)
                    }),
                    valid_from: 3,
                })
            }
            GridFamily::Constant { .. } => Some(SmoothFamilyDerivatives {
                first: Arc::new(|_| T::zero()),
                second: Arc::new(|_| T::zero()),
                valid_from: 1,
            }),
            GridFamily::Explicit { .. } => None,
            GridFamily::Custom { derivatives, .. } => derivatives.clone(),
        }
    }

    /// Parameters for reports.
    pub fn describe(&self) -> serde_json::Value {
        match &self.family {
            GridFamily::PowerLog { gamma, eta, d1 } => json!({
                "family": "power_log",
                "gamma": gamma.to_f64_lossy(),
                "eta": eta.to_f64_lossy(),
                "d1": d1.to_f64_lossy(),
            }),
            GridFamily::Constant { d } => json!({ "family": "constant", "d": d.to_f64_lossy() }),
            GridFamily::Explicit { values, tail } => json!({
                "family": "explicit",
                "values": values.iter().map(|v| v.to_f64_lossy()).collect::<Vec<_>>(),
                "tail": tail,
            }),
            GridFamily::Custom { label, .. } => json!({ "family": "custom", "label": label }),
        }
    }
}

fn check_finite<T: Scalar>(name: &'static str, v: T) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter {
            name,
            value: v.to_f64_lossy(),
            reason: "must be finite",
        })
    }
}

fn check_positive<T: Scalar>(name: &'static str, v: T) -> Result<()> {
    if v.is_finite() && v > T::zero() {
        Ok(())
    } else {
        Err(Error::Parameter {
            name,
            value: v.to_f64_lossy(),
            reason: "must be positive and finite",
        })
    }
}
