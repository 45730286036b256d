use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridFamily, GridSequence, SeqFn};
use crate::numeric::{extrapolate_to_zero, range_sup, tail_windows};
use crate::Scalar;

use super::CriteriaConfig;

/// `u(n) = (d_{n+1} − d_{n−1})/(d_n + d_{n−1})` and
/// `v(n) = (d_n − d_{n+2})/(d_{n+1} + d_{n+2})` for `n ≥ 2`, built from
/// log-gap ratios so that neither loses digits when the gaps are close.
#[inline]
pub fn uv<T: Scalar>(grid: &GridSequence<T>, n: usize) -> (T, T) {
    debug_assert!(n >= 2);
    let two = T::lit(2.0);
    let l_n = grid.log_gap_ratio(n);
    let l_next = grid.log_gap_ratio(n + 1);
    let l_next2 = grid.log_gap_ratio(n + 2);
    let e_plus = l_next.exp_m1();
    let e_minus = (-l_n).exp_m1();
    let f_minus = (-l_next).exp_m1();
    let f_plus = l_next2.exp_m1();
    (
        (e_plus - e_minus) / (two + e_minus),
        (f_minus - f_plus) / (two + f_plus),
    )
}

/// `F(n) = (1/d_n)(r_n/r_{n−1} − 1) + (1/d_{n+1})(r_n/r_{n+1} − 1)` with
/// `r_0 := 1`.
#[inline]
pub fn f_value<T: Scalar>(grid: &GridSequence<T>, n: usize) -> T {
    assert!(n >= 1, "F is indexed from 1");
    if n == 1 {
        let r1 = grid.r_or_one(1);
        let r2 = grid.r_or_one(2);
        return grid.inv_d(1) * (r1 - T::one()) + grid.inv_d(2) * (r1 / r2 - T::one());
    }
    let (u, v) = uv(grid, n);
    grid.inv_d(n) * u.sqrt1pm1() + grid.inv_d(n + 1) * v.sqrt1pm1()
}

/// Taylor coefficients `C_1, …, C_k` of `sqrt(1 + x) = 1 + Σ C_i x^i`.
pub fn sqrt_taylor_coefficients<T: Scalar>(k: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(k);
    let mut c = T::lit(0.5);
    for i in 1..=k {
        if i > 1 {
            c = c * (T::lit(1.5) / T::idx(i) - T::one());
        }
        out.push(c);
    }
    out
}

fn partial_series<T: Scalar>(coeffs: &[T], x: T) -> T {
    let mut acc = T::zero();
    let mut p = T::one();
    for c in coeffs {
        p = p * x;
        acc = acc + *c * p;
    }
    acc
}

/// `Σ_{i ≥ k} C_i x^i`.
fn taylor_tail<T: Scalar>(x: T, k: usize) -> T {
    if x.abs() >= T::lit(0.5) {
        let head = sqrt_taylor_coefficients::<T>(k - 1);
        return x.sqrt1pm1() - partial_series(&head, x);
    }
    let mut c = T::lit(0.5);
    for i in 2..=k {
        c = c * (T::lit(1.5) / T::idx(i) - T::one());
    }
    let mut p = x.powi(k as i32);
    let mut acc = c * p;
    for i in k + 1..k + 400 {
        c = c * (T::lit(1.5) / T::idx(i) - T::one());
        p = p * x;
        let term = c * p;
        acc = acc + term;
        if term.abs() <= T::epsilon() * acc.abs() {
            break;
        }
    }
    acc
}

fn check_expansion_args(n: usize, k: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::IndexDomain {
            what: "F expansion",
            index: n,
            min: 2,
        });
    }
    if k < 2 {
        return Err(Error::Parameter {
            name: "k",
            value: k as f64,
            reason: "expansion order must be at least 2",
        });
    }
    Ok(())
}

/// `(1/d_n) Σ_{i<k} C_i u(n)^i + (1/d_{n+1}) Σ_{i<k} C_i v(n)^i`.
pub fn f_expansion<T: Scalar>(grid: &GridSequence<T>, n: usize, k: usize) -> Result<T> {
    check_expansion_args(n, k)?;
    let (u, v) = uv(grid, n);
    let coeffs = sqrt_taylor_coefficients::<T>(k - 1);
    Ok(grid.inv_d(n) * partial_series(&coeffs, u) + grid.inv_d(n + 1) * partial_series(&coeffs, v))
}

/// `F(n) − F_expansion(n, k)`, summed from the Taylor tail directly.
pub fn f_remainder<T: Scalar>(grid: &GridSequence<T>, n: usize, k: usize) -> Result<T> {
    check_expansion_args(n, k)?;
    let (u, v) = uv(grid, n);
    Ok(grid.inv_d(n) * taylor_tail(u, k) + grid.inv_d(n + 1) * taylor_tail(v, k))
}

/// `G(n) = ¼ ln^η n / n`, plus `η/(n ln^{1−η} n)` when `η ∈ (½, 1]`; zero
/// for `n < 2`.
pub fn g_nlog<T: Scalar>(eta: T, n: usize) -> Result<T> {
    if !(eta > T::zero() && eta <= T::one()) {
        return Err(Error::Parameter {
            name: "eta",
            value: eta.to_f64_lossy(),
            reason: "must lie in (0, 1]",
        });
    }
    Ok(g_nlog_unchecked(eta, n))
}

#[inline]
fn g_nlog_unchecked<T: Scalar>(eta: T, n: usize) -> T {
    if n < 2 {
        return T::zero();
    }
    let x = T::idx(n);
    let l = x.ln();
    let mut g = T::lit(0.25) * l.powf(eta) / x;
    if eta > T::lit(0.5) {
        g = g + eta / (x * l.powf(T::one() - eta));
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "eta", rename_all = "snake_case")]
pub enum GKind<T> {
    Zero,
    NLogEta(T),
    Custom,
}

/// Leading part `G` in `F(n) = G(n) + O(d_n)`.
#[derive(Clone)]
pub struct GFunction<T: Scalar> {
    kind: GKind<T>,
    eval: Option<SeqFn<T>>,
}

impl<T: Scalar> fmt::Debug for GFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GFunction")
            .field("kind", &self.kind)
            .finish()
    }
}

impl<T: Scalar> GFunction<T> {
    pub fn zero() -> Self {
        Self {
            kind: GKind::Zero,
            eval: None,
        }
    }

    pub fn nlog_eta(eta: T) -> Result<Self> {
        g_nlog(eta, 2)?;
        Ok(Self {
            kind: GKind::NLogEta(eta),
            eval: None,
        })
    }

    pub fn custom(eval: impl Fn(usize) -> T + Send + Sync + 'static) -> Self {
        Self {
            kind: GKind::Custom,
            eval: Some(Arc::new(eval)),
        }
    }

    /// `G = F` itself, the choice that is always valid.
    pub fn from_f(grid: &GridSequence<T>) -> Self {
        let grid = grid.clone();
        Self::custom(move |n| f_value(&grid, n))
    }

    pub fn kind(&self) -> GKind<T> {
        self.kind
    }

    #[inline]
    pub fn value(&self, n: usize) -> T {
        match self.kind {
            GKind::Zero => T::zero(),
            GKind::NLogEta(eta) => g_nlog_unchecked(eta, n),
            GKind::Custom => (self.eval.as_ref().expect("custom G has an evaluator"))(n),
        }
    }
}

/// Chooses `G` for `grid`: zero when `F/d` is bounded, the `n ln^η n`
/// branch formula on the boundary family, and `F` itself otherwise.
pub fn select_g<T: Scalar>(
    grid: &GridSequence<T>,
    horizon: usize,
    cfg: &CriteriaConfig,
) -> GFunction<T> {
    match grid.family() {
        GridFamily::PowerLog { gamma, eta, .. } => {
            let one = T::one();
            if *gamma < one || (*gamma == one && *eta <= T::zero()) {
                GFunction::zero()
            } else if *gamma == one && *eta <= one {
                GFunction::nlog_eta(*eta).expect("eta checked")
            } else {
                GFunction::from_f(grid)
            }
        }
        GridFamily::Constant { .. } => GFunction::zero(),
        _ => {
            let [(a, b), (c, d)] = tail_windows(horizon.max(64), cfg.burn_in);
            let q = |n: usize| f_value(grid, n).abs() / grid.d(n);
            let drift = cfg.drift(range_sup(a, b, q), range_sup(c, d, q));
            if drift.stable {
                GFunction::zero()
            } else {
                GFunction::from_f(grid)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GLimitSample<T> {
    pub n: usize,
    pub l1: T,
    pub l2: T,
    pub l3: T,
}

/// The three limits describing `F` on `d_n = 1/(n ln^η n)`.
#[derive(Debug, Clone, Serialize)]
pub struct GLimits<T> {
    pub eta: T,
    pub horizon: usize,
    /// `lim (n/ln^η n) F(n)`.
    pub l1: T,
    /// `lim n ln^{1−η} n (F − ¼ ln^η n/n)`.
    pub l2: T,
    /// `lim n ln^η n (F − ¼ ln^η n/n − η/(n ln^{1−η} n))`.
    pub l3: T,
    /// Coefficient of `ln^{−2} n` in `(n/ln^η n) F(n)`.
    pub second_coefficient: T,
    pub samples: Vec<GLimitSample<T>>,
}

/// Extrapolates the limits in `t = 1/ln n` from `n = N, N/10, N/100, N/1000`.
///
/// Writing `(n/ln^η n) F(n) = ¼ + η t + c t² + O(t³)`, the third quantity
/// equals `c·t^{2−2η} + o(1)`, so `c` is extrapolated and scaled by the
/// limit of `t^{2−2η}`.
pub fn verify_g_limits<T: Scalar>(eta: T, horizon: usize) -> Result<GLimits<T>> {
    g_nlog(eta, 2)?;
    if horizon < 10_000 {
        return Err(Error::Parameter {
            name: "horizon",
            value: horizon as f64,
            reason: "limit extrapolation needs N >= 10^4",
        });
    }
    let grid = GridSequence::power_log(T::one(), eta, T::one())?;
    let quarter = T::lit(0.25);
    let mut ts = Vec::new();
    let mut y1 = Vec::new();
    let mut y2 = Vec::new();
    let mut q = Vec::new();
    let mut samples = Vec::new();
    for scale in [1000usize, 100, 10, 1] {
        let n = horizon / scale;
        let x = T::idx(n);
        let l = x.ln();
        let t = l.recip();
        let f = f_value(&grid, n);
        let a = f * x / l.powf(eta);
        let b = (a - quarter) * l;
        let c = (a - quarter - eta * t) / (t * t);
        samples.push(GLimitSample {
            n,
            l1: a,
            l2: b,
            l3: c * t.powf(T::lit(2.0) - T::lit(2.0) * eta),
        });
        ts.push(t);
        y1.push(a);
        y2.push(b);
        q.push(c);
    }
    let ex = |ys: &[T]| {
        extrapolate_to_zero(&ts, ys)
            .ok_or_else(|| Error::Numerical("degenerate extrapolation nodes".into()))
    };
    let second = ex(&q)?;
    let l3 = if (T::one() - eta).abs() <= T::lit(1e-12) {
        second
    } else if second.is_finite() {
        T::zero()
    } else {
        second
    };
    Ok(GLimits {
        eta,
        horizon,
        l1: ex(&y1)?,
        l2: ex(&y2)?,
        l3,
        second_coefficient: second,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pl(g: f64, e: f64) -> GridSequence<f64> {
        GridSequence::power_log(g, e, 1.0).unwrap()
    }

    /// `F` straight from the definition.
    fn f_naive(grid: &GridSequence<f64>, n: usize) -> f64 {
        let r = |k: usize| {
            if k == 0 {
                1.0
            } else {
                (grid.d(k) + grid.d(k + 1)).sqrt()
            }
        };
        (r(n) / r(n - 1) - 1.0) / grid.d(n) + (r(n) / r(n + 1) - 1.0) / grid.d(n + 1)
    }

    #[test]
    fn f_matches_definition() {
        for grid in [
            pl(1.0, 0.0),
            pl(0.75, 3.0),
            pl(1.0, 1.0),
            GridSequence::constant(0.5).unwrap(),
        ] {
            for n in [1usize, 2, 3, 10, 50] {
                let (a, b) = (f_value(&grid, n), f_naive(&grid, n));
                assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn f_vanishes_on_constant_grid() {
        let g = GridSequence::constant(2.5).unwrap();
        for n in 2..100 {
            assert_eq!(f_value(&g, n), 0.0);
            assert_eq!(f_expansion(&g, n, 4).unwrap(), 0.0);
        }
    }

    #[test]
    fn taylor_coefficients() {
        let c = sqrt_taylor_coefficients::<f64>(4);
        assert_eq!(c, vec![0.5, -0.125, 0.0625, -0.0390625]);
    }

    #[test]
    fn expansion_plus_remainder_is_f() {
        let g = pl(1.0, 1.0);
        for n in [2usize, 5, 100, 10_000] {
            for k in 2..6 {
                let s = f_expansion(&g, n, k).unwrap() + f_remainder(&g, n, k).unwrap();
                let f = f_value(&g, n);
                assert!((s - f).abs() <= 1e-12 * (1.0 + f.abs()), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn two_term_expansion_is_half_the_linear_part() {
        let g = pl(0.8, 0.0);
        let n = 40;
        let (u, v) = uv(&g, n);
        let want = 0.5 * (u / g.d(n) + v / g.d(n + 1));
        assert!((f_expansion(&g, n, 2).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn expansion_argument_checks() {
        let g = pl(1.0, 0.0);
        assert!(f_expansion(&g, 1, 3).is_err());
        assert!(f_expansion(&g, 5, 1).is_err());
        assert!(f_remainder(&g, 1, 3).is_err());
    }

    #[test]
    fn g_nlog_examples() {
        let g = g_nlog(0.3, 100).unwrap();
        assert!((g - 0.25 * 100f64.ln().powf(0.3) / 100.0).abs() < 1e-16);
        assert!((g - 0.003955).abs() < 5e-6);
        let g = g_nlog(0.8f64, 100).unwrap();
        let l = 100f64.ln();
        assert!((g - (0.25 * l.powf(0.8) / 100.0 + 0.8 / (100.0 * l.powf(0.2)))).abs() < 1e-16);
        assert_eq!(g_nlog(1.0f64, 1).unwrap(), 0.0);
        assert!(g_nlog(0.0f64, 10).is_err());
        assert!(g_nlog(1.5f64, 10).is_err());
    }

    #[test]
    fn select_g_examples() {
        let cfg = CriteriaConfig::default();
        assert_eq!(select_g(&pl(0.75, 2.0), 1000, &cfg).kind(), GKind::Zero);
        assert_eq!(
            select_g(&pl(1.0, 1.0), 1000, &cfg).kind(),
            GKind::NLogEta(1.0)
        );
        assert_eq!(select_g(&pl(1.0, -1.0), 1000, &cfg).kind(), GKind::Zero);
        assert_eq!(select_g(&pl(1.3, 0.0), 1000, &cfg).kind(), GKind::Custom);
        let custom = GridSequence::custom("inv-n", |n| 1.0 / n as f64);
        assert_eq!(select_g(&custom, 10_000, &cfg).kind(), GKind::Zero);
        let custom = GridSequence::custom("inv-n-log", |n| {
            let x = n.max(2) as f64;
            1.0 / (x * x.ln())
        });
        assert_eq!(select_g(&custom, 100_000, &cfg).kind(), GKind::Custom);
    }

    #[test]
    fn g_tracks_f_on_the_boundary_family() {
        for eta in [0.3, 0.8, 1.0] {
            let g = pl(1.0, eta);
            let gf = GFunction::nlog_eta(eta).unwrap();
            for n in [1000usize, 10_000, 100_000] {
                let r = (f_value(&g, n) - gf.value(n)) / g.d(n);
                assert!(r.abs() < 1.0, "eta={eta} n={n}: {r}");
            }
        }
    }

    #[test]
    fn g_limits_at_moderate_horizon() {
        let lim = verify_g_limits(0.8f64, 100_000).unwrap();
        assert!((lim.l1 - 0.25).abs() < 0.02, "{lim:?}");
        assert!((lim.l2 - 0.8).abs() < 0.05, "{lim:?}");
        assert_eq!(lim.l3, 0.0);
        assert!(verify_g_limits(0.0, 100_000).is_err());
        assert!(verify_g_limits(0.5, 1000).is_err());
    }
}
