//! Small numerical toolkit shared by the analysis modules: compensated
//! summation, tri-state answers, asymptotic growth classes, tail-window
//! statistics and polynomial extrapolation.

use std::ops::{Add, AddAssign, Mul};

use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    comp: T,
}

impl<T: Scalar> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    pub fn starting_at(value: T) -> Self {
        Self {
            sum: value,
            comp: T::zero(),
        }
    }

    #[inline]
    pub fn push(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

impl<T: Scalar> AddAssign<T> for CompensatedSum<T> {
    fn add_assign(&mut self, rhs: T) {
        CompensatedSum::push(self, rhs);
    }
}

impl<T: Scalar> Add for CompensatedSum<T> {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        CompensatedSum::push(&mut self, rhs.sum);
        CompensatedSum::push(&mut self, rhs.comp);
        self
    }
}

impl<T: Scalar> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// Three-valued answer for questions numerics cannot always settle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriState {
    Yes,
    No,
    Unknown,
}

impl TriState {
    pub fn from_bool(b: bool) -> Self {
        if b {
            TriState::Yes
        } else {
            TriState::No
        }
    }

    pub fn is_yes(self) -> bool {
        self == TriState::Yes
    }

    pub fn is_no(self) -> bool {
        self == TriState::No
    }
}

/// Asymptotic class `Θ(n^n_exp · ln^ln_exp n)`; `zero` marks an eventually
/// vanishing sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogPower<T> {
    pub n_exp: T,
    pub ln_exp: T,
    pub zero: bool,
}

impl<T: Scalar> LogPower<T> {
    pub fn new(n_exp: T, ln_exp: T) -> Self {
        Self {
            n_exp,
            ln_exp,
            zero: false,
        }
    }

    pub fn constant() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn vanishing() -> Self {
        Self {
            n_exp: T::zero(),
            ln_exp: T::zero(),
            zero: true,
        }
    }

    pub fn powi(self, k: i32) -> Self {
        if self.zero {
            return self;
        }
        let k = T::lit(k as f64);
        Self::new(self.n_exp * k, self.ln_exp * k)
    }

    /// Does `Σ n^a ln^b n` diverge?
    pub fn series_diverges(self) -> bool {
        if self.zero {
            return false;
        }
        let minus_one = -T::one();
        if exp_eq(self.n_exp, minus_one) {
            self.ln_exp >= minus_one || exp_eq(self.ln_exp, minus_one)
        } else {
            self.n_exp > minus_one
        }
    }

    /// Orders two classes by growth rate; vanishing sequences come first.
    pub fn cmp_growth(self, other: Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match (self.zero, other.zero) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let key = |a: T, b: T| {
            if exp_eq(a, b) {
                Ordering::Equal
            } else if a < b {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        };
        key(self.n_exp, other.n_exp).then(key(self.ln_exp, other.ln_exp))
    }

    /// Is `n^a ln^b n` bounded as `n → ∞`?
    pub fn is_bounded(self) -> bool {
        if self.zero {
            return true;
        }
        if exp_eq(self.n_exp, T::zero()) {
            self.ln_exp <= T::zero() || exp_eq(self.ln_exp, T::zero())
        } else {
            self.n_exp < T::zero()
        }
    }
}

impl<T: Scalar> Mul for LogPower<T> {
    type Output = Self;

    fn mul(self, other: Self) -> Self {
        if self.zero || other.zero {
            return Self::vanishing();
        }
        Self::new(self.n_exp + other.n_exp, self.ln_exp + other.ln_exp)
    }
}

fn exp_eq<T: Scalar>(a: T, b: T) -> bool {
    (a - b).abs() <= T::lit(1e-9)
}

/// Sup and inf of a sampled function over an inclusive index range.
pub fn range_sup<T: Scalar>(lo: usize, hi: usize, mut f: impl FnMut(usize) -> T) -> T {
    let mut best = T::neg_infinity();
    for n in lo..=hi {
        let v = f(n);
        if v > best || v.is_nan() {
            best = v;
            if v.is_nan() {
                break;
            }
        }
    }
    best
}

/// The two adjacent tail windows `[N/4, N/2]` and `[N/2, N]`, clipped below
/// at `burn_in`.
pub fn tail_windows(horizon: usize, burn_in: usize) -> [(usize, usize); 2] {
    let mid = (horizon / 2).max(burn_in + 1);
    let lo = (horizon / 4).max(burn_in).min(mid);
    [(lo, mid), (mid, horizon.max(mid))]
}

/// Comparison of a statistic over an earlier and a later window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowDrift<T> {
    pub earlier: T,
    pub later: T,
    /// `(later - earlier) / max(|earlier|, |later|, floor)`.
    pub drift: T,
    pub stable: bool,
}

impl<T: Scalar> WindowDrift<T> {
    pub fn new(earlier: T, later: T, tolerance: T, floor: T) -> Self {
        let scale = earlier.abs().max(later.abs()).max(floor);
        let drift = (later - earlier) / scale;
        let stable = later.is_finite() && earlier.is_finite() && drift < tolerance;
        Self {
            earlier,
            later,
            drift,
            stable,
        }
    }
}

/// Neville evaluation at `t = 0` of the interpolating polynomial through
/// `(ts[i], ys[i])`.
pub fn extrapolate_to_zero<T: Scalar>(ts: &[T], ys: &[T]) -> Option<T> {
    if ts.is_empty() || ts.len() != ys.len() {
        return None;
    }
    let mut p = ys.to_vec();
    let n = ts.len();
    for m in 1..n {
        for i in 0..n - m {
            let denom = ts[i] - ts[i + m];
            if denom == T::zero() {
                return None;
            }
            p[i] = (-ts[i + m] * p[i] + ts[i] * p[i + 1]) / denom;
        }
    }
    Some(p[0])
}

/// Richardson step for `f(n) = L + c·n^{-order}` sampled at `n_small < n_large`.
pub fn richardson<T: Scalar>(n_small: T, f_small: T, n_large: T, f_large: T, order: T) -> T {
    let w_large = n_large.powf(order);
    let w_small = n_small.powf(order);
    (w_large * f_large - w_small * f_small) / (w_large - w_small)
}

/// About `count` distinct indices spread logarithmically over `[lo, hi]`.
pub fn log_spaced(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    let lo = lo.max(1);
    if hi <= lo || count < 2 {
        return vec![lo.min(hi.max(lo))];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as usize)
        .map(|n| n.clamp(lo, hi))
        .collect();
    out.dedup();
    out
}

/// Growth class fitted to partial sums of a nonnegative series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Growth {
    Bounded,
    LogLike { rate: f64 },
    PowerLike { exponent: f64 },
    Insufficient,
}

/// Sums of a nonnegative series over dyadic blocks `[2^k, 2^{k+1})`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct DyadicBlocks<T> {
    /// Completed block sums, `sums[k]` for `[2^k, 2^{k+1})`.
    pub sums: Vec<T>,
    current: T,
    next_edge: usize,
}

impl<T: Scalar> DyadicBlocks<T> {
    pub fn new() -> Self {
        Self {
            sums: Vec::new(),
            current: T::zero(),
            next_edge: 2,
        }
    }

    /// Adds term `n` (1-based, called in increasing order).
    #[inline]
    pub fn push(&mut self, n: usize, term: T) {
        if n >= self.next_edge {
            self.sums.push(self.current);
            self.current = T::zero();
            self.next_edge *= 2;
        }
        self.current = self.current + term;
    }

    /// Geometric-mean ratio of consecutive block sums over the last `last` blocks.
    pub fn ratio(&self, last: usize) -> Option<T> {
        let m = self.sums.len();
        if m < last + 1 || last == 0 {
            return None;
        }
        let (a, b) = (self.sums[m - 1 - last], self.sums[m - 1]);
        if a <= T::zero() || b <= T::zero() {
            return None;
        }
        Some((b.ln() - a.ln()).exp().powf(T::one() / T::idx(last)))
    }

    pub fn growth(&self, margin: T) -> Growth {
        match self.ratio(4) {
            None => {
                if self.sums.len() >= 5 && self.sums.iter().rev().take(5).all(|s| *s == T::zero()) {
                    Growth::Bounded
                } else {
                    Growth::Insufficient
                }
            }
            Some(q) if q < T::one() - margin => Growth::Bounded,
            Some(q) if q > T::one() + margin => Growth::PowerLike {
                exponent: q.log2().to_f64_lossy(),
            },
            Some(_) => {
                let last = *self.sums.last().expect("ratio implies blocks");
                Growth::LogLike {
                    rate: (last / T::LN_2()).to_f64_lossy(),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn compensated_sum_beats_naive_on_harmonic_tail() {
        let n = 1_000_000usize;
        let mut naive = 0.0_f32;
        let mut comp = CompensatedSum::<f32>::new();
        for k in 1..=n {
            let t = 1.0 / k as f32;
            naive += t;
            comp += t;
        }
        let exact: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
        assert!((comp.value() as f64 - exact).abs() < 1e-5);
        assert!((naive as f64 - exact).abs() > 1e-3);
    }

    #[test]
    fn log_power_series_divergence() {
        let p = |a: f64, b: f64| LogPower::new(a, b);
        assert!(p(-1.0, 0.0).series_diverges());
        assert!(p(-1.0, -1.0).series_diverges());
        assert!(!p(-1.0, -1.5).series_diverges());
        assert!(!p(-1.5, 3.0).series_diverges());
        assert!(p(0.0, -4.0).series_diverges());
        assert!(!LogPower::<f64>::vanishing().series_diverges());
    }

    #[test]
    fn log_power_ordering() {
        use std::cmp::Ordering::*;
        let p = |a: f64, b: f64| LogPower::new(a, b);
        assert_eq!(p(1.0, 0.0).cmp_growth(p(0.5, 9.0)), Greater);
        assert_eq!(p(1.0, -1.0).cmp_growth(p(1.0, 0.0)), Less);
        assert_eq!(p(1.0, 0.0).cmp_growth(p(1.0, 0.0)), Equal);
        assert_eq!(LogPower::vanishing().cmp_growth(p(-5.0, 0.0)), Less);
    }

    #[test]
    fn log_power_boundedness() {
        assert!(LogPower::new(0.0, 0.0).is_bounded());
        assert!(LogPower::new(0.0, -1.0).is_bounded());
        assert!(!LogPower::new(0.0, 0.5).is_bounded());
        assert!(LogPower::new(-0.01, 40.0).is_bounded());
    }

    #[test]
    fn neville_recovers_polynomial_limit() {
        let ts = [0.1, 0.2, 0.3, 0.4];
        let ys: Vec<f64> = ts
            .iter()
            .map(|t| 0.25 + 0.8 * t - 3.0 * t * t + t * t * t)
            .collect();
        assert!((extrapolate_to_zero(&ts, &ys).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn richardson_removes_leading_power() {
        let f = |n: f64| 4.0 + 3.0 / (n * n);
        let est = richardson(500.0, f(500.0), 1000.0, f(1000.0), 2.0);
        assert!((est - 4.0).abs() < 1e-12);
    }

    #[test]
    fn tail_windows_split_the_horizon() {
        assert_eq!(tail_windows(1000, 16), [(250, 500), (500, 1000)]);
        assert_eq!(tail_windows(40, 16), [(16, 20), (20, 40)]);
    }

    #[test]
    fn dyadic_growth_classes() {
        let classify = |f: &dyn Fn(usize) -> f64| {
            let mut b = DyadicBlocks::new();
            for n in 1..(1 << 16) {
                b.push(n, f(n));
            }
            b.growth(0.05)
        };
        assert_eq!(classify(&|n| (n as f64).powi(-2)), Growth::Bounded);
        assert!(matches!(
            classify(&|n| 1.0 / n as f64),
            Growth::LogLike { .. }
        ));
        match classify(&|_| 1.0) {
            Growth::PowerLike { exponent } => assert!((exponent - 1.0).abs() < 1e-9),
            g => panic!("unexpected {g:?}"),
        }
    }

    proptest! {
        #[test]
        fn compensated_sum_is_order_insensitive(xs in proptest::collection::vec(-1e6f64..1e6, 1..200)) {
            let fwd: CompensatedSum<f64> = xs.iter().copied().collect();
            let rev: CompensatedSum<f64> = xs.iter().rev().copied().collect();
            let scale: f64 = xs.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
            prop_assert!((fwd.value() - rev.value()).abs() <= 1e-14 * scale);
        }

        #[test]
        fn log_spaced_is_sorted_and_in_range(lo in 1usize..1000, span in 1usize..100000, count in 2usize..80) {
            let hi = lo + span;
            let v = log_spaced(lo, hi, count);
            prop_assert!(v.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(v.iter().all(|&n| n >= lo && n <= hi));
            prop_assert_eq!(*v.first().unwrap(), lo);
            prop_assert_eq!(*v.last().unwrap(), hi);
        }
    }
}
