use std::fmt;
use std::sync::Arc;

use serde_json::json;

use crate::error::{Error, Result};
use crate::grid::{explicit_value, GridSequence, SeqFn, TailRule};
use crate::numeric::{LogPower, TriState};
use crate::Scalar;

use super::PeriodPair;

/// Lower-order correction `p_n` added to `a·(1/d_n + 1/d_{n+1})`.
#[derive(Clone)]
pub enum Perturbation<T: Scalar> {
    Zero,
    /// `p_n = c·d_n`.
    GapMultiple(T),
    /// `p_n = c·n^p`.
    Power {
        coef: T,
        exponent: T,
    },
    /// Arbitrary `p_n`; `order_of_gap` states whether `p_n = O(d_n)`.
    Custom {
        label: String,
        eval: SeqFn<T>,
        order_of_gap: bool,
    },
}

impl<T: Scalar> Perturbation<T> {
    #[inline]
    pub fn value(&self, grid: &GridSequence<T>, n: usize) -> T {
        match self {
            Perturbation::Zero => T::zero(),
            Perturbation::GapMultiple(c) => *c * grid.d(n),
            Perturbation::Power { coef, exponent } => *coef * T::idx(n).powf(*exponent),
            Perturbation::Custom { eval, .. } => eval(n),
        }
    }

    /// Whether `p_n = O(d_n)` on `grid`.
    pub fn is_order_of_gap(&self, grid: &GridSequence<T>) -> TriState {
        match self {
            Perturbation::Zero | Perturbation::GapMultiple(_) => TriState::Yes,
            Perturbation::Power { coef, exponent } => {
                if *coef == T::zero() {
                    return TriState::Yes;
                }
                match grid.gap_class() {
                    Some(gap) => {
                        let ratio = LogPower::new(*exponent, T::zero()) * gap.powi(-1);
                        TriState::from_bool(ratio.is_bounded())
                    }
                    None => TriState::Unknown,
                }
            }
            Perturbation::Custom { order_of_gap, .. } => TriState::from_bool(*order_of_gap),
        }
    }

    fn class(&self, grid: &GridSequence<T>) -> Option<LogPower<T>> {
        match self {
            Perturbation::Zero => Some(LogPower::vanishing()),
            Perturbation::GapMultiple(c) if *c == T::zero() => Some(LogPower::vanishing()),
            Perturbation::GapMultiple(_) => grid.gap_class(),
            Perturbation::Power { coef, .. } if *coef == T::zero() => Some(LogPower::vanishing()),
            Perturbation::Power { exponent, .. } => Some(LogPower::new(*exponent, T::zero())),
            Perturbation::Custom { .. } => None,
        }
    }

    fn describe(&self) -> serde_json::Value {
        match self {
            Perturbation::Zero => json!("zero"),
            Perturbation::GapMultiple(c) => json!({ "gap_multiple": c.to_f64_lossy() }),
            Perturbation::Power { coef, exponent } => json!({
                "power": { "coef": coef.to_f64_lossy(), "exponent": exponent.to_f64_lossy() }
            }),
            Perturbation::Custom {
                label,
                order_of_gap,
                ..
            } => json!({
                "custom": { "label": label, "order_of_gap": order_of_gap }
            }),
        }
    }
}

impl<T: Scalar> fmt::Debug for Perturbation<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.describe())
    }
}

/// Interaction strengths `α_n`.
#[derive(Clone)]
pub enum AlphaFamily<T: Scalar> {
    /// `α_n = a·(1/d_n + 1/d_{n+1}) + p_n`.
    ScaledInverseGaps {
        a: T,
        perturbation: Perturbation<T>,
    },
    /// `α_n = Σ c·n^p` over `(c, p)` terms; the empty sum is `α ≡ 0`.
    PowerSum {
        terms: Vec<(T, T)>,
    },
    Explicit {
        values: Vec<T>,
        tail: TailRule,
    },
    Custom {
        label: String,
        eval: SeqFn<T>,
    },
    /// `α⁰_n = −(1/d_n + 1/d_{n+1}) + (a+1)·u_n·r̃_n^{−2}`.
    AlphaZero {
        a: T,
        u: PeriodPair<T>,
    },
}

#[derive(Clone)]
pub struct AlphaSequence<T: Scalar> {
    family: AlphaFamily<T>,
}

impl<T: Scalar> fmt::Debug for AlphaSequence<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AlphaSequence({})", self.describe())
    }
}

impl<T: Scalar> AlphaSequence<T> {
    pub fn new(family: AlphaFamily<T>) -> Result<Self> {
        let finite = |name: &'static str, v: T| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter {
                    name,
                    value: v.to_f64_lossy(),
                    reason: "must be finite",
                })
            }
        };
        match &family {
            AlphaFamily::ScaledInverseGaps { a, perturbation } => {
                finite("a", *a)?;
                match perturbation {
                    Perturbation::GapMultiple(c) => finite("perturbation", *c)?,
                    Perturbation::Power { coef, exponent } => {
                        finite("perturbation", *coef)?;
                        finite("perturbation exponent", *exponent)?;
                    }
                    _ => {}
                }
            }
            AlphaFamily::PowerSum { terms } => {
                for (c, p) in terms {
                    finite("coefficient", *c)?;
                    finite("exponent", *p)?;
                }
            }
            AlphaFamily::Explicit { values, .. } => {
                if values.is_empty() {
                    return Err(Error::InvalidInput("explicit alpha list is empty".into()));
                }
                for v in values {
                    finite("alpha", *v)?;
                }
            }
            AlphaFamily::Custom { .. } => {}
            AlphaFamily::AlphaZero { a, u } => {
                finite("a", *a)?;
                if !(u.u_odd > T::zero() && u.u_even > T::zero()) {
                    return Err(Error::Parameter {
                        name: "u",
                        value: u.u_odd.min(u.u_even).to_f64_lossy(),
                        reason: "period values must be positive",
                    });
                }
            }
        }
        Ok(Self { family })
    }

    /// `α ≡ 0`.
    pub fn zero() -> Self {
        Self {
            family: AlphaFamily::PowerSum { terms: Vec::new() },
        }
    }

    pub fn scaled_inverse_gaps(a: T, perturbation: Perturbation<T>) -> Result<Self> {
        Self::new(AlphaFamily::ScaledInverseGaps { a, perturbation })
    }

    pub fn power_sum(terms: Vec<(T, T)>) -> Result<Self> {
        Self::new(AlphaFamily::PowerSum { terms })
    }

    pub fn explicit(values: Vec<T>, tail: TailRule) -> Result<Self> {
        Self::new(AlphaFamily::Explicit { values, tail })
    }

    pub fn custom(
        label: impl Into<String>,
        eval: impl Fn(usize) -> T + Send + Sync + 'static,
    ) -> Self {
        Self {
            family: AlphaFamily::Custom {
                label: label.into(),
                eval: Arc::new(eval),
            },
        }
    }

    pub fn alpha_zero(a: T, u: PeriodPair<T>) -> Result<Self> {
        Self::new(AlphaFamily::AlphaZero { a, u })
    }

    pub fn family(&self) -> &AlphaFamily<T> {
        &self.family
    }

    /// `α_n` for families that do not need `r̃_n`.
    pub(crate) fn value_direct(&self, grid: &GridSequence<T>, n: usize) -> Option<T> {
        Some(match &self.family {
            AlphaFamily::ScaledInverseGaps { a, perturbation } => {
                *a * grid.inverse_gap_sum(n) + perturbation.value(grid, n)
            }
            AlphaFamily::PowerSum { terms } => power_sum(terms, n),
            AlphaFamily::Explicit { values, tail } => explicit_value(values, *tail, n),
            AlphaFamily::Custom { eval, .. } => eval(n),
            AlphaFamily::AlphaZero { .. } => return None,
        })
    }

    /// Asymptotic class of `|α_n|`, when it follows from the family data.
    pub fn magnitude_class(&self, grid: &GridSequence<T>) -> Option<LogPower<T>> {
        match &self.family {
            AlphaFamily::ScaledInverseGaps { a, perturbation } => {
                if *a == T::zero() {
                    return perturbation.class(grid);
                }
                let main = grid.gap_class()?.powi(-1);
                match perturbation.class(grid) {
                    Some(p) => match p.cmp_growth(main) {
                        std::cmp::Ordering::Less => Some(main),
                        std::cmp::Ordering::Greater => Some(p),
                        std::cmp::Ordering::Equal => None,
                    },
                    None if perturbation.is_order_of_gap(grid).is_yes() => Some(main),
                    None => None,
                }
            }
            AlphaFamily::PowerSum { terms } => {
                let lead = leading_power(terms);
                Some(match lead {
                    Some(p) => LogPower::new(p, T::zero()),
                    None => LogPower::vanishing(),
                })
            }
            AlphaFamily::Explicit { values, tail } => {
                let nonzero = match tail {
                    TailRule::Cycle => values.iter().any(|v| *v != T::zero()),
                    TailRule::HoldLast => *values.last().expect("non-empty") != T::zero(),
                };
                Some(if nonzero {
                    LogPower::constant()
                } else {
                    LogPower::vanishing()
                })
            }
            AlphaFamily::Custom { .. } => None,
            AlphaFamily::AlphaZero { a, .. } => {
                if *a != T::zero() {
                    grid.gap_class().map(|g| g.powi(-1))
                } else {
                    None
                }
            }
        }
    }

    /// Recognizes `α_n = a·(1/d_n + 1/d_{n+1}) + O(d_n)` and returns `a`
    /// together with whether the remainder is `O(d_n)`.
    pub fn scaled_inverse_form(&self, grid: &GridSequence<T>) -> Option<(T, TriState)> {
        match &self.family {
            AlphaFamily::ScaledInverseGaps { a, perturbation } => {
                Some((*a, perturbation.is_order_of_gap(grid)))
            }
            AlphaFamily::PowerSum { terms } => power_sum_form(terms, grid),
            AlphaFamily::AlphaZero { a, .. } => Some((*a, TriState::Unknown)),
            _ => None,
        }
    }

    /// Whether `α_n ≥ 0` for every `n`, when decidable from the family data.
    pub fn is_nonnegative(&self) -> TriState {
        match &self.family {
            AlphaFamily::PowerSum { terms } if terms.iter().all(|(c, _)| *c >= T::zero()) => {
                TriState::Yes
            }
            AlphaFamily::Explicit { values, .. } => {
                TriState::from_bool(values.iter().all(|v| *v >= T::zero()))
            }
            AlphaFamily::ScaledInverseGaps { a, perturbation } if *a >= T::zero() => {
                match perturbation {
                    Perturbation::Zero => TriState::Yes,
                    Perturbation::GapMultiple(c) | Perturbation::Power { coef: c, .. } => {
                        if *c >= T::zero() {
                            TriState::Yes
                        } else {
                            TriState::Unknown
                        }
                    }
                    Perturbation::Custom { .. } => TriState::Unknown,
                }
            }
            _ => TriState::Unknown,
        }
    }

    pub fn describe(&self) -> serde_json::Value {
        match &self.family {
            AlphaFamily::ScaledInverseGaps { a, perturbation } => json!({
                "family": "scaled_inverse_gaps",
                "a": a.to_f64_lossy(),
                "perturbation": perturbation.describe(),
            }),
            AlphaFamily::PowerSum { terms } => json!({
                "family": "power_sum",
                "terms": terms
                    .iter()
                    .map(|(c, p)| json!({ "coef": c.to_f64_lossy(), "exponent": p.to_f64_lossy() }))
                    .collect::<Vec<_>>(),
            }),
            AlphaFamily::Explicit { values, tail } => json!({
                "family": "explicit",
                "values": values.iter().map(|v| v.to_f64_lossy()).collect::<Vec<_>>(),
                "tail": tail,
            }),
            AlphaFamily::Custom { label, .. } => json!({ "family": "custom", "label": label }),
            AlphaFamily::AlphaZero { a, u } => json!({
                "family": "alpha_zero",
                "a": a.to_f64_lossy(),
                "u_odd": u.u_odd.to_f64_lossy(),
                "u_even": u.u_even.to_f64_lossy(),
            }),
        }
    }
}

#[inline]
fn power_sum<T: Scalar>(terms: &[(T, T)], n: usize) -> T {
    let x = T::idx(n);
    terms.iter().fold(T::zero(), |acc, &(c, p)| {
        let v = if p == T::zero() {
            T::one()
        } else if p == T::one() {
            x
        } else {
            x.powf(p)
        };
        acc + c * v
    })
}

/// `Σ c·n^p + k(2n + 1)` with the `n¹` and `n⁰` coefficients combined
/// before evaluation, so exact cancellation survives rounding.
pub(crate) fn shifted_power_sum<T: Scalar>(terms: &[(T, T)], k: T, n: usize) -> T {
    let x = T::idx(n);
    let mut c1 = T::lit(2.0) * k;
    let mut c0 = k;
    let mut rest = T::zero();
    for &(c, p) in terms {
        if p == T::one() {
            c1 = c1 + c;
        } else if p == T::zero() {
            c0 = c0 + c;
        } else {
            rest = rest + c * x.powf(p);
        }
    }
    c1 * x + c0 + rest
}

/// Merges equal exponents and drops vanishing coefficients.
fn merged_terms<T: Scalar>(terms: &[(T, T)]) -> Vec<(T, T)> {
    let tol = T::lit(1e-12);
    let mut out: Vec<(T, T)> = Vec::new();
    for &(c, p) in terms {
        match out.iter_mut().find(|(_, q)| (*q - p).abs() <= tol) {
            Some(slot) => slot.0 = slot.0 + c,
            None => out.push((c, p)),
        }
    }
    out.retain(|(c, _)| c.abs() > tol);
    out
}

fn leading_power<T: Scalar>(terms: &[(T, T)]) -> Option<T> {
    merged_terms(terms)
        .into_iter()
        .map(|(_, p)| p)
        .reduce(|a, b| a.max(b))
}

/// On `d_n = 1/n` (with `d_1 = 1`) the inverse-gap sum is `2n + 1`, so a
/// power sum has the scaled form iff its `n¹` and `n⁰` coefficients are
/// `2a` and `a` and every other exponent is at most `−1`.
fn power_sum_form<T: Scalar>(terms: &[(T, T)], grid: &GridSequence<T>) -> Option<(T, TriState)> {
    let (gamma, eta, d1) = grid.power_log_params()?;
    if gamma != T::one() || eta != T::zero() || d1 != T::one() {
        return None;
    }
    let tol = T::lit(1e-12);
    let merged = merged_terms(terms);
    let coef_at = |p: T| {
        merged
            .iter()
            .find(|(_, q)| (*q - p).abs() <= tol)
            .map_or(T::zero(), |(c, _)| *c)
    };
    let a = coef_at(T::one()) / T::lit(2.0);
    let c0 = coef_at(T::zero());
    if (c0 - a).abs() > tol * (T::one() + a.abs()) {
        return None;
    }
    let rest_ok = merged
        .iter()
        .all(|(_, p)| (*p - T::one()).abs() <= tol || p.abs() <= tol || *p <= -T::one() + tol);
    if !rest_ok {
        return None;
    }
    Some((a, TriState::Yes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inv_n() -> GridSequence<f64> {
        GridSequence::power(1.0).unwrap()
    }

    #[test]
    fn scaled_inverse_gaps_values() {
        let g = inv_n();
        let al = AlphaSequence::scaled_inverse_gaps(
            -0.5,
            Perturbation::Power {
                coef: 1.0,
                exponent: -1.0,
            },
        )
        .unwrap();
        assert!((al.value_direct(&g, 4).unwrap() - (-4.5 + 0.25)).abs() < 1e-13);
    }

    #[test]
    fn power_sum_form_on_inverse_n() {
        let g = inv_n();
        let shubin = AlphaSequence::power_sum(vec![(-2.0, 1.0), (-1.0, 0.0)]).unwrap();
        assert_eq!(shubin.scaled_inverse_form(&g), Some((-1.0, TriState::Yes)));
        let pert = AlphaSequence::power_sum(vec![(-1.0, 1.0), (-0.5, 0.0), (1.0, -1.0)]).unwrap();
        assert_eq!(pert.scaled_inverse_form(&g), Some((-0.5, TriState::Yes)));
        let off = AlphaSequence::power_sum(vec![(-1.0, 1.0), (-0.7, 0.0)]).unwrap();
        assert_eq!(off.scaled_inverse_form(&g), None);
        let slow = AlphaSequence::power_sum(vec![(-1.0, 1.0), (-0.5, 0.0), (1.0, -0.5)]).unwrap();
        assert_eq!(slow.scaled_inverse_form(&g), None);
        let other = GridSequence::power(0.75).unwrap();
        assert_eq!(shubin.scaled_inverse_form(&other), None);
    }

    #[test]
    fn perturbation_order() {
        let g = GridSequence::power(0.75).unwrap();
        let p = |e: f64| Perturbation::Power {
            coef: 1.0,
            exponent: e,
        };
        assert_eq!(p(-0.75).is_order_of_gap(&g), TriState::Yes);
        assert_eq!(p(-1.0).is_order_of_gap(&g), TriState::Yes);
        assert_eq!(p(-0.5).is_order_of_gap(&g), TriState::No);
        let c = GridSequence::custom("c", |n| 1.0 / n as f64);
        assert_eq!(p(-1.0).is_order_of_gap(&c), TriState::Unknown);
    }

    #[test]
    fn magnitude_classes() {
        let g = inv_n();
        let sq = AlphaSequence::power_sum(vec![(1.0, 2.0)]).unwrap();
        assert_eq!(sq.magnitude_class(&g), Some(LogPower::new(2.0, 0.0)));
        let cancel = AlphaSequence::power_sum(vec![(1.0, 2.0), (-1.0, 2.0), (3.0, 0.5)]).unwrap();
        assert_eq!(cancel.magnitude_class(&g), Some(LogPower::new(0.5, 0.0)));
        assert_eq!(
            AlphaSequence::<f64>::zero().magnitude_class(&g),
            Some(LogPower::vanishing())
        );
        let s = AlphaSequence::scaled_inverse_gaps(-0.5, Perturbation::Zero).unwrap();
        assert_eq!(s.magnitude_class(&g), Some(LogPower::new(1.0, 0.0)));
        let big = AlphaSequence::scaled_inverse_gaps(
            -0.5,
            Perturbation::Power {
                coef: 1.0,
                exponent: 2.0,
            },
        )
        .unwrap();
        assert_eq!(big.magnitude_class(&g), Some(LogPower::new(2.0, 0.0)));
        let tie = AlphaSequence::scaled_inverse_gaps(
            -0.5,
            Perturbation::Power {
                coef: 1.0,
                exponent: 1.0,
            },
        )
        .unwrap();
        assert_eq!(tie.magnitude_class(&g), None);
    }

    #[test]
    fn validation() {
        assert!(AlphaSequence::<f64>::explicit(vec![], TailRule::Cycle).is_err());
        assert!(AlphaSequence::scaled_inverse_gaps(f64::NAN, Perturbation::Zero).is_err());
        assert!(AlphaSequence::alpha_zero(-0.5, PeriodPair::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn nonnegativity() {
        assert_eq!(AlphaSequence::<f64>::zero().is_nonnegative(), TriState::Yes);
        let neg = AlphaSequence::power_sum(vec![(-1.0, -1.0)]).unwrap();
        assert_eq!(neg.is_nonnegative(), TriState::Unknown);
        let neg = AlphaSequence::explicit(vec![1.0, -1.0], TailRule::Cycle).unwrap();
        assert_eq!(neg.is_nonnegative(), TriState::No);
    }
}
