use crate::grid::GridSequence;
use crate::numeric::CompensatedSum;
use crate::Scalar;

use super::PeriodPair;

/// `r̃_1 = 1`, `r̃_{n+1} = −d_{n+1}/r̃_n`, stored as `ln|r̃_n|` with the
/// sign `(−1)^{n−1}` implied by the index.
///
/// Each parity obeys `ln|r̃_n| = ln|r̃_{n−2}| + ln(d_n/d_{n−1})`, and the two
/// chains are accumulated with separate compensated sums.
#[derive(Clone, Debug)]
pub struct TildeSequence<T: Scalar> {
    grid: GridSequence<T>,
    log_abs: Vec<T>,
    odd: CompensatedSum<T>,
    even: CompensatedSum<T>,
}

impl<T: Scalar> TildeSequence<T> {
    /// Precomputes `ln|r̃_n|` for `n ≤ capacity`.
    pub fn build(grid: &GridSequence<T>, capacity: usize) -> Self {
        let mut t = Self {
            grid: grid.clone(),
            log_abs: Vec::with_capacity(capacity.max(2)),
            odd: CompensatedSum::new(),
            even: CompensatedSum::starting_at(grid.log_gap(2)),
        };
        t.log_abs.push(T::zero());
        t.log_abs.push(t.even.value());
        while t.log_abs.len() < capacity {
            t.extend();
        }
        t
    }

    fn extend(&mut self) {
        let n = self.log_abs.len() + 1;
        let step = self.grid.log_gap_ratio(n);
        let chain = if n % 2 == 1 {
            &mut self.odd
        } else {
            &mut self.even
        };
        chain.push(step);
        self.log_abs.push(chain.value());
    }

    pub fn capacity(&self) -> usize {
        self.log_abs.len()
    }

    pub fn grid(&self) -> &GridSequence<T> {
        &self.grid
    }

    /// `ln|r̃_n|`; indices past the precomputed range are continued from
    /// the last stored value of the same parity.
    pub fn log_abs(&self, n: usize) -> T {
        assert!(n >= 1, "r̃ is indexed from 1");
        if n <= self.log_abs.len() {
            return self.log_abs[n - 1];
        }
        let len = self.log_abs.len();
        let start = if (n - len).is_multiple_of(2) {
            len
        } else {
            len - 1
        };
        let mut s = CompensatedSum::starting_at(self.log_abs[start - 1]);
        let mut k = start + 2;
        while k <= n {
            s.push(self.grid.log_gap_ratio(k));
            k += 2;
        }
        s.value()
    }

    /// `sign(r̃_n) = (−1)^{n−1}`.
    #[inline]
    pub fn sign(&self, n: usize) -> T {
        if n % 2 == 1 {
            T::one()
        } else {
            -T::one()
        }
    }

    pub fn value(&self, n: usize) -> T {
        self.sign(n) * self.log_abs(n).exp()
    }

    /// `ln ρ_n` with `ρ_n = (1/d_n + 1/d_{n+1})·r̃_n²`.
    pub fn log_rho(&self, n: usize) -> T {
        let two = T::lit(2.0);
        two * self.log_abs(n) - self.grid.log_gap(n)
            + (-self.grid.log_gap_ratio(n + 1)).exp().ln_1p()
    }

    pub fn rho(&self, n: usize) -> T {
        self.log_rho(n).exp()
    }

    /// `w_n = r_n²·r̃_n²`, the condition (A) term.
    pub fn w(&self, n: usize) -> T {
        let two = T::lit(2.0);
        (two * self.log_abs(n)
            + self.grid.log_gap(n)
            + self.grid.log_gap_ratio(n + 1).exp().ln_1p())
        .exp()
    }
}

/// `r̃_n` evaluated from scratch.
pub fn tilde_r<T: Scalar>(grid: &GridSequence<T>, n: usize) -> T {
    TildeSequence::build(grid, 2).value(n)
}

/// `ρ_n = (1/d_n + 1/d_{n+1})·r̃_n²`, evaluated in log space.
pub fn rho<T: Scalar>(grid: &GridSequence<T>, n: usize) -> T {
    TildeSequence::build(grid, 2).rho(n)
}

/// `α⁰_n = −(1/d_n + 1/d_{n+1}) + (a+1)·u_n·r̃_n^{−2}`.
pub fn alpha_zero<T: Scalar>(grid: &GridSequence<T>, a: T, u: PeriodPair<T>, n: usize) -> T {
    alpha_zero_with(&TildeSequence::build(grid, 2), a, u, n)
}

pub(crate) fn alpha_zero_excess<T: Scalar>(
    tilde: &TildeSequence<T>,
    a: T,
    u: PeriodPair<T>,
    n: usize,
) -> T {
    let two = T::lit(2.0);
    (a + T::one()) * u.at(n) * (-two * tilde.log_abs(n)).exp()
}

pub(crate) fn alpha_zero_with<T: Scalar>(
    tilde: &TildeSequence<T>,
    a: T,
    u: PeriodPair<T>,
    n: usize,
) -> T {
    alpha_zero_excess(tilde, a, u, n) - tilde.grid().inverse_gap_sum(n)
}
