use serde::Serialize;

use crate::grid::{GridFamily, GridSequence};
use crate::jacobi::JacobiOperator;
use crate::numeric::{log_spaced, range_sup, tail_windows, TriState, WindowDrift};
use crate::Scalar;

use super::functional::{f_value, select_g};
use super::{not_ell1_gate, CriteriaConfig, GFunction, GKind, Gate};

const SAMPLE_COUNT: usize = 48;

/// Per-index minimal constants of a one-sided bound and their tail trend.
#[derive(Debug, Clone, Serialize)]
pub struct BoundProbe<T> {
    pub test: &'static str,
    pub horizon: usize,
    pub g: Option<GKind<T>>,
    /// Log-spaced `(n, c_n)` samples of the per-index constant.
    pub samples: Vec<(usize, T)>,
    /// `max(0, sup_{n ≤ N} c_n)`.
    pub minimal_constant: T,
    pub trend: WindowDrift<T>,
    pub holds: TriState,
    pub gate: Gate,
}

impl<T: Scalar> BoundProbe<T> {
    /// The bound holds and the test applies.
    pub fn certifies(&self) -> bool {
        self.holds.is_yes() && self.gate.status.is_yes()
    }
}

fn allowance<T: Scalar>(magnitude: T) -> T {
    T::lit(16.0) * T::epsilon() * magnitude
}

fn bound_probe<T: Scalar>(
    test: &'static str,
    horizon: usize,
    cfg: &CriteriaConfig,
    gate: Gate,
    g: Option<GKind<T>>,
    constant: impl Fn(usize) -> T,
) -> BoundProbe<T> {
    let horizon = horizon.max(1);
    let [(a, b), (c, d)] = tail_windows(horizon, cfg.burn_in);
    let marks = log_spaced(1, horizon, SAMPLE_COUNT);
    let mut next_mark = 0;
    let mut samples = Vec::with_capacity(marks.len());
    let (mut sup, mut early, mut late) = (T::neg_infinity(), T::neg_infinity(), T::neg_infinity());
    let mut finite = true;
    for n in 1..=horizon {
        let v = constant(n);
        if !v.is_finite() {
            finite = false;
        }
        sup = sup.max(v);
        if (a..=b).contains(&n) {
            early = early.max(v);
        }
        if (c..=d).contains(&n) {
            late = late.max(v);
        }
        if marks.get(next_mark) == Some(&n) {
            samples.push((n, v));
            next_mark += 1;
        }
    }
    let zero = T::zero();
    let trend = cfg.drift(early.max(zero), late.max(zero));
    let holds = if horizon < 64 || !finite {
        TriState::Unknown
    } else {
        TriState::from_bool(trend.stable)
    };
    BoundProbe {
        test,
        horizon,
        g,
        samples,
        minimal_constant: sup.max(zero),
        trend,
        holds,
        gate,
    }
}

fn combine(first: Gate, second: Gate) -> Gate {
    match (first.status, second.status) {
        (TriState::No, _) => first,
        (_, TriState::No) => second,
        (TriState::Unknown, _) => first,
        _ => second,
    }
}

/// Smallest `C_1` with `α_n + (1/d_n)(1 + r_n/r_{n−1}) + (1/d_{n+1})(1 + r_n/r_{n+1}) ≤ C_1(d_n + d_{n+1})`.
pub fn test_exact_ii<T: Scalar>(
    op: &JacobiOperator<T>,
    horizon: usize,
    cfg: &CriteriaConfig,
) -> BoundProbe<T> {
    let grid = op.grid();
    bound_probe("ii", horizon, cfg, not_ell1_gate(grid), None, |n| {
        let (v, m) = op.alpha_shifted(n, T::lit(2.0));
        let f = f_value(grid, n);
        (v + f - allowance(m + f.abs())) / (grid.d(n) + grid.d(n + 1))
    })
}

/// Smallest `C_2` with `α_n + (1/d_n)(1 − r_n/r_{n−1}) + (1/d_{n+1})(1 − r_n/r_{n+1}) ≥ −C_2(d_n + d_{n+1})`.
pub fn test_exact_iii<T: Scalar>(
    op: &JacobiOperator<T>,
    horizon: usize,
    cfg: &CriteriaConfig,
) -> BoundProbe<T> {
    let grid = op.grid();
    bound_probe("iii", horizon, cfg, not_ell1_gate(grid), None, |n| {
        let al = op.alpha(n);
        let f = f_value(grid, n);
        (f - al - allowance(al.abs() + f.abs())) / (grid.d(n) + grid.d(n + 1))
    })
}

/// Smallest `C_1` with `α_n ≤ −(2/d_n + 2/d_{n+1} + G(n)) + C_1 d_n`.
pub fn test_bound_ii<T: Scalar>(
    op: &JacobiOperator<T>,
    g: &GFunction<T>,
    horizon: usize,
    cfg: &CriteriaConfig,
) -> BoundProbe<T> {
    let grid = op.grid();
    let gate = combine(not_ell1_gate(grid), g_gate(grid, g, horizon, cfg));
    bound_probe("II", horizon, cfg, gate, Some(g.kind()), |n| {
        let (v, m) = op.alpha_shifted(n, T::lit(2.0));
        let gv = g.value(n);
        (v + gv - allowance(m + gv.abs())) / grid.d(n)
    })
}

/// Smallest `C_2` with `α_n ≥ G(n) − C_2 d_n`.
pub fn test_bound_iii<T: Scalar>(
    op: &JacobiOperator<T>,
    g: &GFunction<T>,
    horizon: usize,
    cfg: &CriteriaConfig,
) -> BoundProbe<T> {
    let grid = op.grid();
    let gate = combine(not_ell1_gate(grid), g_gate(grid, g, horizon, cfg));
    bound_probe("III", horizon, cfg, gate, Some(g.kind()), |n| {
        let al = op.alpha(n);
        let gv = g.value(n);
        (gv - al - allowance(al.abs() + gv.abs())) / grid.d(n)
    })
}

/// Whether `F(n) − G(n) = O(d_n)`.
fn g_gate<T: Scalar>(
    grid: &GridSequence<T>,
    g: &GFunction<T>,
    horizon: usize,
    cfg: &CriteriaConfig,
) -> Gate {
    let analytic = matches!(
        grid.family(),
        GridFamily::PowerLog { .. } | GridFamily::Constant { .. }
    );
    if analytic {
        let expected = select_g(grid, horizon, cfg).kind();
        if !matches!(expected, GKind::Custom) {
            if expected == g.kind() {
                return Gate::open();
            }
            if g.kind() == GKind::Zero {
                return Gate::new(TriState::No, "F/d is unbounded on this grid");
            }
        }
    }
    if horizon < 64 {
        return Gate::new(TriState::Unknown, "horizon too short to compare F with G");
    }
    let [(a, b), (c, d)] = tail_windows(horizon, cfg.burn_in);
    let q = |n: usize| (f_value(grid, n) - g.value(n)).abs() / grid.d(n);
    if cfg.drift(range_sup(a, b, q), range_sup(c, d, q)).stable {
        Gate::open()
    } else {
        Gate::new(TriState::Unknown, "F − G does not look like O(d_n)")
    }
}

/// Window statistics of `|F(n)|/d_n`.
#[derive(Debug, Clone, Serialize)]
pub struct Boundedness<T> {
    pub lo: usize,
    pub horizon: usize,
    pub sup: T,
    pub trend: WindowDrift<T>,
    pub bounded: TriState,
}

/// Is `F(n)/d_n` bounded on `[lo, N]`?
pub fn f_over_d_probe<T: Scalar>(
    grid: &GridSequence<T>,
    lo: usize,
    horizon: usize,
    cfg: &CriteriaConfig,
) -> Boundedness<T> {
    let lo = lo.max(1);
    let q = |n: usize| f_value(grid, n).abs() / grid.d(n);
    let [(a, b), (c, d)] = tail_windows(horizon, cfg.burn_in.max(lo));
    let early = range_sup(a, b, q);
    let late = range_sup(c, d, q);
    let sup = range_sup(lo, a, q).max(early).max(late);
    let trend = cfg.drift(early, late);
    let bounded = if horizon < 64 || horizon <= lo {
        TriState::Unknown
    } else {
        TriState::from_bool(trend.stable)
    };
    Boundedness {
        lo,
        horizon,
        sup,
        trend,
        bounded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobi::{AlphaSequence, Perturbation};
    use proptest::prelude::*;

    fn cfg() -> CriteriaConfig {
        CriteriaConfig::default()
    }

    fn op(grid: GridSequence<f64>, alpha: AlphaSequence<f64>) -> JacobiOperator<f64> {
        JacobiOperator::new(grid, alpha)
    }

    #[test]
    fn bound_ii_power_family() {
        for gamma in [0.6, 0.75, 1.0] {
            let g = GridSequence::power(gamma).unwrap();
            let b = op(
                g,
                AlphaSequence::scaled_inverse_gaps(-2.0, Perturbation::GapMultiple(0.5)).unwrap(),
            );
            let p = test_bound_ii(&b, &GFunction::zero(), 100_000, &cfg());
            assert!(p.certifies(), "gamma {gamma}: {p:?}");
            assert!((p.minimal_constant - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn bound_ii_boundary_family() {
        let grid = GridSequence::power_log(1.0, 1.0, 1.0).unwrap();
        let g = GFunction::nlog_eta(1.0).unwrap();
        let gg = g.clone();
        let minus = AlphaSequence::scaled_inverse_gaps(
            -2.0,
            Perturbation::Custom {
                label: "-G".into(),
                eval: std::sync::Arc::new(move |n| -gg.value(n)),
                order_of_gap: false,
            },
        )
        .unwrap();
        let p = test_bound_ii(&op(grid.clone(), minus), &g, 100_000, &cfg());
        assert!(p.certifies(), "{p:?}");
        let gg = g.clone();
        let plus = AlphaSequence::scaled_inverse_gaps(
            -2.0,
            Perturbation::Custom {
                label: "+G".into(),
                eval: std::sync::Arc::new(move |n| gg.value(n)),
                order_of_gap: false,
            },
        )
        .unwrap();
        assert_eq!(
            test_bound_ii(&op(grid, plus), &g, 100_000, &cfg()).holds,
            TriState::No
        );
    }

    #[test]
    fn zero_alpha_fails_bound_ii() {
        let b = op(GridSequence::power(0.75).unwrap(), AlphaSequence::zero());
        assert_eq!(
            test_bound_ii(&b, &GFunction::zero(), 10_000, &cfg()).holds,
            TriState::No
        );
    }

    #[test]
    fn bound_iii_examples() {
        let g = GridSequence::power(1.0).unwrap();
        let nonneg = op(
            g.clone(),
            AlphaSequence::power_sum(vec![(1.0, 0.5)]).unwrap(),
        );
        let p = test_bound_iii(&nonneg, &GFunction::zero(), 10_000, &cfg());
        assert!(p.certifies());
        assert_eq!(p.minimal_constant, 0.0);

        let three = op(
            g.clone(),
            AlphaSequence::power_sum(vec![(-3.0, -1.0)]).unwrap(),
        );
        let p = test_bound_iii(&three, &GFunction::zero(), 100_000, &cfg());
        assert!(p.certifies());
        assert!(
            (p.minimal_constant - 3.0).abs() < 1e-9,
            "{}",
            p.minimal_constant
        );

        let shubin = op(
            g,
            AlphaSequence::power_sum(vec![(-2.0, 1.0), (-1.0, 0.0)]).unwrap(),
        );
        let p = test_bound_iii(&shubin, &GFunction::zero(), 10_000, &cfg());
        assert_eq!(p.holds, TriState::No);
        let (_, last) = *p.samples.last().unwrap();
        assert!(last > 1e8, "{last}");
    }

    #[test]
    fn exact_forms_agree_with_g_forms_on_regular_grids() {
        let g = GridSequence::power(0.75).unwrap();
        let neg = op(
            g.clone(),
            AlphaSequence::scaled_inverse_gaps(0.0, Perturbation::GapMultiple(-1.0)).unwrap(),
        );
        assert!(test_exact_iii(&neg, 100_000, &cfg()).certifies());
        assert!(test_bound_iii(&neg, &GFunction::zero(), 100_000, &cfg()).certifies());
        let deep = op(
            g,
            AlphaSequence::scaled_inverse_gaps(-2.0, Perturbation::GapMultiple(1.0)).unwrap(),
        );
        assert!(test_exact_ii(&deep, 100_000, &cfg()).certifies());
        assert!(test_exact_iii(&deep, 100_000, &cfg()).holds.is_no());
    }

    #[test]
    fn summable_grids_are_gated() {
        let b = op(GridSequence::power(1.5).unwrap(), AlphaSequence::zero());
        let p = test_bound_iii(&b, &GFunction::zero(), 1000, &cfg());
        assert!(p.gate.failed());
        assert!(!p.certifies());
    }

    #[test]
    fn zero_g_is_rejected_on_the_gap_family() {
        let b = op(
            GridSequence::power_log(1.0, 0.5, 1.0).unwrap(),
            AlphaSequence::zero(),
        );
        assert!(test_bound_iii(&b, &GFunction::zero(), 1000, &cfg())
            .gate
            .failed());
    }

    #[test]
    fn f_over_d_examples() {
        for (gamma, eta) in [(0.6, 0.0), (0.75, 3.0), (1.0, -1.0)] {
            let g = GridSequence::<f64>::power_log(gamma, eta, 1.0).unwrap();
            let p = f_over_d_probe(&g, 1000, 100_000, &cfg());
            assert_eq!(p.bounded, TriState::Yes, "({gamma}, {eta}): {p:?}");
            assert!(p.sup.is_finite());
        }
        let g = GridSequence::power_log(1.0, 0.5, 1.0).unwrap();
        assert_eq!(
            f_over_d_probe(&g, 1000, 100_000, &cfg()).bounded,
            TriState::No
        );
    }

    #[test]
    fn minimal_constant_grows_with_horizon() {
        let b = op(
            GridSequence::power(0.75).unwrap(),
            AlphaSequence::power_sum(vec![(-1.0, 0.2)]).unwrap(),
        );
        let mut last = 0.0;
        for n in [100, 1000, 10_000] {
            let c = test_bound_iii(&b, &GFunction::zero(), n, &cfg()).minimal_constant;
            assert!(c >= last);
            last = c;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn nonnegative_alpha_passes_bound_iii(gamma in 0.55f64..1.0, c in 0.0f64..5.0, p in -2.0f64..2.0) {
            let b = op(GridSequence::power(gamma).unwrap(), AlphaSequence::power_sum(vec![(c, p)]).unwrap());
            let probe = test_bound_iii(&b, &GFunction::zero(), 2000, &cfg());
            prop_assert!(probe.certifies());
            prop_assert_eq!(probe.minimal_constant, 0.0);
        }
    }
}
